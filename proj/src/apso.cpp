#include "mecswarm/apso.hpp"

#include "mecswarm/errors.hpp"
#include "mecswarm/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mecswarm::apso {

const char* to_string(EvolutionaryState state) {
    switch (state) {
        case EvolutionaryState::Exploration: return "exploration";
        case EvolutionaryState::Exploitation: return "exploitation";
        case EvolutionaryState::Convergence: return "convergence";
        case EvolutionaryState::JumpingOut: return "jumping_out";
    }
    return "unknown";
}

void validate(const ApsoParams& params) {
    pso::validate(params.base);
    if (!(params.c_min > 0.0) || !(params.c_min < params.c_max)) {
        throw ConfigError("require 0 < c_min < c_max");
    }
    if (params.c_sum_max < 2.0 * params.c_min) {
        throw ConfigError("c_sum_max must be >= 2 * c_min");
    }
    if (params.delta_range.lo < 0.0 || params.delta_range.hi >= 1.0 ||
        params.delta_range.lo > params.delta_range.hi) {
        throw ConfigError("delta_range must lie within [0, 1)");
    }
    if (params.els_sigma_range.lo > params.els_sigma_range.hi || params.els_sigma_range.lo < 0.0) {
        throw ConfigError("els_sigma_range must be a nonnegative interval");
    }
}

SwarmSpread swarm_spread(const pso::SwarmState& swarm, int threads) {
    const std::size_t n = swarm.particles.size();
    if (n < 2) throw ContractError("swarm spread needs at least two particles");
    const std::size_t dims = swarm.n_dims();

    // Full pairwise pass; row i accumulates distances to every other particle.
    std::vector<double> sum_dist(n, 0.0);
    parallel_for(
        n,
        [&](std::size_t i) {
            const double* xi = swarm.particles[i].position.data();
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double* xj = swarm.particles[j].position.data();
                double sq = 0.0;
                for (std::size_t d = 0; d < dims; ++d) {
                    const double diff = xi[d] - xj[d];
                    sq += diff * diff;
                }
                acc += std::sqrt(sq);
            }
            sum_dist[i] = acc;
        },
        threads);

    SwarmSpread spread;
    spread.mean_dist.resize(n);
    std::size_t best_idx = 0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        spread.mean_dist[i] = sum_dist[i] / static_cast<double>(n - 1);
        total += sum_dist[i];
        if (swarm.particles[i].pbest_cost < swarm.particles[best_idx].pbest_cost) best_idx = i;
    }
    spread.d_best = spread.mean_dist[best_idx];
    spread.d_min = *std::min_element(spread.mean_dist.begin(), spread.mean_dist.end());
    spread.d_max = *std::max_element(spread.mean_dist.begin(), spread.mean_dist.end());
    spread.mean_pairwise = total / static_cast<double>(n * (n - 1));
    return spread;
}

double evolutionary_factor(const SwarmSpread& spread) {
    const double denom = spread.d_max - spread.d_min;
    if (denom <= 0.0) return 0.0;
    return std::clamp((spread.d_best - spread.d_min) / denom, 0.0, 1.0);
}

double evolutionary_factor(const pso::SwarmState& swarm) {
    return evolutionary_factor(swarm_spread(swarm));
}

EvolutionaryState classify_state(double f, EvolutionaryState /*prev*/) {
    if (f < 0.25) return EvolutionaryState::Convergence;
    if (f < 0.5) return EvolutionaryState::Exploitation;
    if (f < 0.75) return EvolutionaryState::Exploration;
    return EvolutionaryState::JumpingOut;
}

std::pair<double, double> adapt_coefficients(EvolutionaryState state, double c1, double c2, Rng& rng,
                                             const ApsoParams& params) {
    const double d1 = rng.uniform(params.delta_range.lo, params.delta_range.hi);
    const double d2 = rng.uniform(params.delta_range.lo, params.delta_range.hi);
    switch (state) {
        case EvolutionaryState::Exploration:
            c1 += d1;
            c2 -= d2;
            break;
        case EvolutionaryState::Exploitation:
            c1 += 0.5 * d1;
            c2 -= 0.5 * d2;
            break;
        case EvolutionaryState::Convergence:
            c1 += 0.5 * d1;
            c2 += 0.5 * d2;
            break;
        case EvolutionaryState::JumpingOut:
            c1 -= d1;
            c2 += d2;
            break;
    }
    c1 = std::clamp(c1, params.c_min, params.c_max);
    c2 = std::clamp(c2, params.c_min, params.c_max);
    const double sum = c1 + c2;
    if (sum > params.c_sum_max) {
        const double scale = params.c_sum_max / sum;
        c1 *= scale;
        c2 *= scale;
    }
    return {c1, c2};
}

double adapt_inertia(double f) { return 1.0 / (1.0 + 1.5 * std::exp(-2.6 * f)); }

void elitist_learning(pso::SwarmState& swarm, Rng& rng, const ApsoParams& params, int iteration,
                      int max_iters, const pso::Objective& objective) {
    const std::size_t dims = swarm.n_dims();
    const double pos_hi = static_cast<double>(swarm.n_servers) - pso::kPositionEpsilon;

    const double frac = max_iters > 0
                            ? std::clamp(static_cast<double>(iteration) / max_iters, 0.0, 1.0)
                            : 0.0;
    const double sigma =
        params.els_sigma_range.hi - frac * (params.els_sigma_range.hi - params.els_sigma_range.lo);

    std::vector<double> candidate = swarm.gbest_position;
    const std::size_t d = rng.uniform_index(dims);
    candidate[d] = std::clamp(candidate[d] + sigma * rng.normal(), 0.0, pos_hi);
    const double cost = objective(pso::decode(candidate, swarm.n_servers));

    std::size_t worst = 0;
    for (std::size_t i = 1; i < swarm.particles.size(); ++i) {
        if (swarm.particles[i].pbest_cost > swarm.particles[worst].pbest_cost) worst = i;
    }
    if (cost < swarm.particles[worst].pbest_cost) {
        pso::Particle& p = swarm.particles[worst];
        p.position = candidate;
        p.pbest_position = candidate;
        p.pbest_cost = cost;
        if (cost < swarm.gbest_cost) {
            swarm.gbest_cost = cost;
            swarm.gbest_position = candidate;
        }
    }
}

pso::RunResult run_apso(const Environment& env, const ApsoParams& params, const Weights& weights,
                        const FeasibilityMode& mode, std::uint64_t seed, double mb_to_mbit) {
    validate(params);
    const CostEvaluator evaluate(env, weights, mode, mb_to_mbit);
    const pso::Objective objective = [&evaluate](const Assignment& a) { return evaluate(a); };

    Rng swarm_rng(derive_seed(seed, "swarm"));
    Rng adapt_rng(derive_seed(seed, "adapt"));
    const auto t0 = std::chrono::steady_clock::now();

    pso::SwarmState swarm =
        pso::init_swarm(env.devices.size(), env.servers.size(), params.base, objective, swarm_rng);

    pso::RunResult result;
    result.curve.reserve(static_cast<std::size_t>(params.base.max_iters) + 1);
    result.curve.push_back(swarm.gbest_cost);

    double c1 = std::clamp(params.base.c1, params.c_min, params.c_max);
    double c2 = std::clamp(params.base.c2, params.c_min, params.c_max);
    EvolutionaryState state = EvolutionaryState::Exploration;
    for (int it = 0; it < params.base.max_iters; ++it) {
        const SwarmSpread spread = swarm_spread(swarm);
        const double f = evolutionary_factor(spread);
        state = classify_state(f, state);

        pso::Coefficients coef{params.base.inertia, params.base.c1, params.base.c2};
        if (params.inertia_adaptation) coef.inertia = adapt_inertia(f);
        if (params.coefficient_adaptation) {
            std::tie(c1, c2) = adapt_coefficients(state, c1, c2, adapt_rng, params);
            coef.c1 = c1;
            coef.c2 = c2;
        }

        pso::step(swarm, coef, params.base, objective, swarm_rng);
        if (params.els_enabled) {
            elitist_learning(swarm, adapt_rng, params, it, params.base.max_iters, objective);
        }
        result.curve.push_back(swarm.gbest_cost);
        result.coefficient_trace.push_back(coef);
    }

    const auto t1 = std::chrono::steady_clock::now();
    result.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.best_cost = swarm.gbest_cost;
    result.best_assignment = pso::decode(swarm.gbest_position, swarm.n_servers);
    return result;
}

} // namespace mecswarm::apso
