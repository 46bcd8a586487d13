#pragma once

#include "mecswarm/cost.hpp"
#include "mecswarm/env.hpp"
#include "mecswarm/rng.hpp"

#include <functional>
#include <span>
#include <vector>

namespace mecswarm::pso {

struct PsoParams {
    double inertia = 0.729;  // w
    double c1 = 1.49445;     // cognitive pull toward pbest
    double c2 = 1.49445;     // social pull toward gbest
    int n_particles = 30;
    int max_iters = 50;
    double u_low = 0.0;      // support of the attraction draws U(a, b)
    double u_high = 1.0;
    double v_max = 0.0;      // per-dimension velocity clamp; <= 0 resolves to 0.2 * n_servers
    bool scalar_draws = false; // one r1/r2 pair per particle instead of per dimension
};

/// Throws ConfigError when invariants fail.
void validate(const PsoParams& params);

/// Effective velocity clamp for a given server count.
double resolve_v_max(const PsoParams& params, std::size_t n_servers);

/// Positions live in [0, n_servers - kPositionEpsilon] per dimension.
inline constexpr double kPositionEpsilon = 1e-6;

struct Particle {
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> pbest_position;
    double pbest_cost = 0.0;
};

struct SwarmState {
    std::vector<Particle> particles;
    std::vector<double> gbest_position;
    double gbest_cost = 0.0;
    int iteration = 0;
    std::size_t n_servers = 0; // decode bound, fixed at init

    std::size_t n_dims() const { return gbest_position.size(); }
};

/// Coefficients actually applied on one step.
struct Coefficients {
    double inertia = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;

    bool operator==(const Coefficients&) const = default;
};

struct RunResult {
    double best_cost = 0.0;
    Assignment best_assignment;
    std::vector<double> curve;                  // gbest after init plus after every step
    double wall_time_seconds = 0.0;
    std::vector<Coefficients> coefficient_trace; // one entry per step
};

using Objective = std::function<double(const Assignment&)>;

/// Continuous position -> concrete assignment: round half up, then clamp
/// into [0, n_servers - 1]. Total for any finite input.
Assignment decode(std::span<const double> position, std::size_t n_servers);

/// One velocity component of the swarm update; exposed for direct checks.
inline double velocity_update(double v, double x, double pbest, double gbest, double w, double c1,
                              double c2, double r1, double r2) {
    return w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x);
}

/// Uniform positions in [0, n_servers - eps], velocities in [-v_max, v_max],
/// pbest = initial position. Draw order: per particle, positions for every
/// dimension, then velocities. Throws ConfigError on an empty instance.
SwarmState init_swarm(std::size_t n_devices, std::size_t n_servers, const PsoParams& params,
                      const Objective& objective, Rng& rng);

/// One synchronous swarm update with the given coefficients: velocities from
/// velocity_update with fresh U(u_low, u_high) draws, clamped to +/-v_max;
/// positions clamped into bounds; pbest/gbest updated on strict improvement.
/// All draws are taken from `rng` sequentially before fitness evaluation, so
/// results are identical at every thread count.
void step(SwarmState& swarm, const Coefficients& coef, const PsoParams& params,
          const Objective& objective, Rng& rng, int threads = -1);

/// Fixed-coefficient run: init_swarm then max_iters steps. Deterministic in
/// `seed`; the swarm stream is derive_seed(seed, "swarm") so paired variants
/// can share initial swarms.
RunResult run(const Environment& env, const PsoParams& params, const Weights& weights,
              const FeasibilityMode& mode, std::uint64_t seed, double mb_to_mbit = kMbToMbit);

} // namespace mecswarm::pso
