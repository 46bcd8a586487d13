#include "mecswarm/pso.hpp"

#include "mecswarm/errors.hpp"
#include "mecswarm/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace mecswarm::pso {

void validate(const PsoParams& params) {
    if (params.n_particles < 2) throw ConfigError("n_particles must be >= 2");
    if (params.max_iters < 0) throw ConfigError("max_iters must be >= 0");
    if (params.u_low > params.u_high) throw ConfigError("u_low must not exceed u_high");
    if (params.inertia < 0.0 || params.c1 < 0.0 || params.c2 < 0.0) {
        throw ConfigError("inertia and acceleration coefficients must be >= 0");
    }
}

double resolve_v_max(const PsoParams& params, std::size_t n_servers) {
    if (params.v_max > 0.0) return params.v_max;
    return 0.2 * static_cast<double>(n_servers);
}

Assignment decode(std::span<const double> position, std::size_t n_servers) {
    Assignment a;
    a.server_of.resize(position.size());
    const auto max_index = static_cast<double>(n_servers) - 1.0;
    for (std::size_t d = 0; d < position.size(); ++d) {
        const double rounded = std::floor(position[d] + 0.5); // round half up
        a.server_of[d] = static_cast<std::int32_t>(std::clamp(rounded, 0.0, max_index));
    }
    return a;
}

namespace {

// Decode + evaluate for every particle, writing costs[i]; safe to split
// across workers because each index owns its slots.
void evaluate_swarm(const SwarmState& swarm, const Objective& objective, std::vector<double>& costs,
                    int threads) {
    costs.resize(swarm.particles.size());
    parallel_for(
        swarm.particles.size(),
        [&](std::size_t i) {
            costs[i] = objective(decode(swarm.particles[i].position, swarm.n_servers));
        },
        threads);
}

} // namespace

SwarmState init_swarm(std::size_t n_devices, std::size_t n_servers, const PsoParams& params,
                      const Objective& objective, Rng& rng) {
    validate(params);
    if (n_devices == 0 || n_servers == 0) {
        throw ConfigError("cannot initialize a swarm over an empty instance");
    }

    const double pos_hi = static_cast<double>(n_servers) - kPositionEpsilon;
    const double v_max = resolve_v_max(params, n_servers);

    SwarmState swarm;
    swarm.n_servers = n_servers;
    swarm.particles.resize(static_cast<std::size_t>(params.n_particles));
    for (Particle& p : swarm.particles) {
        p.position.resize(n_devices);
        p.velocity.resize(n_devices);
        for (std::size_t d = 0; d < n_devices; ++d) p.position[d] = rng.uniform(0.0, pos_hi);
        for (std::size_t d = 0; d < n_devices; ++d) p.velocity[d] = rng.uniform(-v_max, v_max);
        p.pbest_position = p.position;
    }

    std::vector<double> costs;
    evaluate_swarm(swarm, objective, costs, -1);
    swarm.gbest_cost = costs[0];
    swarm.gbest_position = swarm.particles[0].position;
    for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
        swarm.particles[i].pbest_cost = costs[i];
        if (costs[i] < swarm.gbest_cost) {
            swarm.gbest_cost = costs[i];
            swarm.gbest_position = swarm.particles[i].position;
        }
    }
    return swarm;
}

void step(SwarmState& swarm, const Coefficients& coef, const PsoParams& params,
          const Objective& objective, Rng& rng, int threads) {
    const std::size_t dims = swarm.n_dims();
    const double pos_hi = static_cast<double>(swarm.n_servers) - kPositionEpsilon;
    const double v_max = resolve_v_max(params, swarm.n_servers);

    for (Particle& p : swarm.particles) {
        double r1 = 0.0, r2 = 0.0;
        if (params.scalar_draws) {
            r1 = rng.uniform(params.u_low, params.u_high);
            r2 = rng.uniform(params.u_low, params.u_high);
        }
        for (std::size_t d = 0; d < dims; ++d) {
            if (!params.scalar_draws) {
                r1 = rng.uniform(params.u_low, params.u_high);
                r2 = rng.uniform(params.u_low, params.u_high);
            }
            double v = velocity_update(p.velocity[d], p.position[d], p.pbest_position[d],
                                       swarm.gbest_position[d], coef.inertia, coef.c1, coef.c2, r1,
                                       r2);
            v = std::clamp(v, -v_max, v_max);
            p.velocity[d] = v;
            p.position[d] = std::clamp(p.position[d] + v, 0.0, pos_hi);
        }
    }

    std::vector<double> costs;
    evaluate_swarm(swarm, objective, costs, threads);

    // pbest/gbest reduction in particle-index order, strict improvement only.
    for (std::size_t i = 0; i < swarm.particles.size(); ++i) {
        Particle& p = swarm.particles[i];
        if (costs[i] < p.pbest_cost) {
            p.pbest_cost = costs[i];
            p.pbest_position = p.position;
        }
        if (costs[i] < swarm.gbest_cost) {
            swarm.gbest_cost = costs[i];
            swarm.gbest_position = p.position;
        }
    }
    ++swarm.iteration;
}

RunResult run(const Environment& env, const PsoParams& params, const Weights& weights,
              const FeasibilityMode& mode, std::uint64_t seed, double mb_to_mbit) {
    validate(params);
    const CostEvaluator evaluate(env, weights, mode, mb_to_mbit);
    const Objective objective = [&evaluate](const Assignment& a) { return evaluate(a); };

    Rng swarm_rng(derive_seed(seed, "swarm"));
    const auto t0 = std::chrono::steady_clock::now();

    SwarmState swarm = init_swarm(env.devices.size(), env.servers.size(), params, objective, swarm_rng);
    RunResult result;
    result.curve.reserve(static_cast<std::size_t>(params.max_iters) + 1);
    result.curve.push_back(swarm.gbest_cost);
    const Coefficients coef{params.inertia, params.c1, params.c2};
    for (int it = 0; it < params.max_iters; ++it) {
        step(swarm, coef, params, objective, swarm_rng);
        result.curve.push_back(swarm.gbest_cost);
        result.coefficient_trace.push_back(coef);
    }

    const auto t1 = std::chrono::steady_clock::now();
    result.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.best_cost = swarm.gbest_cost;
    result.best_assignment = decode(swarm.gbest_position, swarm.n_servers);
    return result;
}

} // namespace mecswarm::pso
