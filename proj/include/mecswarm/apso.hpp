#pragma once

#include "mecswarm/pso.hpp"

#include <utility>

namespace mecswarm::apso {

/// Swarm regimes driving coefficient adaptation.
enum class EvolutionaryState { Exploration, Exploitation, Convergence, JumpingOut };

const char* to_string(EvolutionaryState state);

struct ApsoParams {
    pso::PsoParams base;
    double c_min = 1.5;
    double c_max = 2.5;
    double c_sum_max = 4.0;
    Interval delta_range{0.05, 0.1}; // per-iteration adjustment magnitude
    bool coefficient_adaptation = true;
    bool inertia_adaptation = true;
    bool els_enabled = false;            // elitist learning of the global best
    Interval els_sigma_range{0.1, 1.0};  // perturbation scale, annealed high -> low
};

void validate(const ApsoParams& params);

/// Mean-distance statistics of the swarm, shared by the evolutionary factor
/// and the diversity observation so the pairwise pass runs once.
struct SwarmSpread {
    std::vector<double> mean_dist; // mean Euclidean distance from particle i to the others
    double d_best = 0.0;           // mean_dist of the particle with the lowest pbest cost
    double d_min = 0.0;
    double d_max = 0.0;
    double mean_pairwise = 0.0;
};

SwarmSpread swarm_spread(const pso::SwarmState& swarm, int threads = -1);

/// Normalized spread of the best particle: (d_best - d_min) / (d_max - d_min),
/// clamped to [0, 1]; 0 when the swarm is fully collapsed (d_max == d_min).
/// Throws ContractError for swarms of fewer than two particles.
double evolutionary_factor(const SwarmSpread& spread);
double evolutionary_factor(const pso::SwarmState& swarm);

/// Crisp intervals: [0, .25) Convergence, [.25, .5) Exploitation,
/// [.5, .75) Exploration, [.75, 1] JumpingOut. `prev` is accepted for
/// hysteresis variants and unused by this rule.
EvolutionaryState classify_state(double f, EvolutionaryState prev);

/// Nudges (c1, c2) by state-dependent fractions of fresh U(delta_range)
/// draws, clamps each into [c_min, c_max], and rescales the pair onto
/// c_sum_max when their sum exceeds it. Exactly two draws per call.
std::pair<double, double> adapt_coefficients(EvolutionaryState state, double c1, double c2, Rng& rng,
                                             const ApsoParams& params);

/// Inertia from the evolutionary factor: w = 1 / (1 + 1.5 e^(-2.6 f)),
/// increasing from 0.4 at f=0 to about 0.9 at f=1.
double adapt_inertia(double f);

/// Perturbs one random dimension of a copy of gbest with Gaussian noise
/// (scale annealed linearly from els_sigma_range.hi to .lo across the run)
/// and lets the copy replace the worst particle when it improves on that
/// particle's pbest. Updates gbest when the copy beats it.
void elitist_learning(pso::SwarmState& swarm, Rng& rng, const ApsoParams& params, int iteration,
                      int max_iters, const pso::Objective& objective);

/// Adaptive run: per iteration estimate the evolutionary factor, classify,
/// adapt w/c1/c2, then one swarm step (plus optional elitist learning).
/// Uses two independent streams derived from `seed` ("swarm" for init and
/// step draws, "adapt" for adaptation draws) so a run with all adaptation
/// disabled consumes the swarm stream exactly like the fixed-coefficient
/// optimizer and reproduces it bit for bit.
pso::RunResult run_apso(const Environment& env, const ApsoParams& params, const Weights& weights,
                        const FeasibilityMode& mode, std::uint64_t seed,
                        double mb_to_mbit = kMbToMbit);

} // namespace mecswarm::apso
