#include "mecswarm/pso.hpp"

#include "mecswarm/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace mecswarm;

namespace {

pso::Objective make_objective(const Environment& env, const Weights& w, const FeasibilityMode& mode) {
    auto eval = std::make_shared<CostEvaluator>(env, w, mode);
    return [eval](const Assignment& a) { return (*eval)(a); };
}

Environment small_env(std::uint64_t seed, std::size_t devices = 4, std::size_t servers = 3) {
    EnvConfig cfg;
    cfg.n_devices = devices;
    cfg.n_servers = servers;
    cfg.seed = seed;
    return generate_environment(cfg);
}

bool same_run(const pso::RunResult& a, const pso::RunResult& b) {
    return a.best_cost == b.best_cost && a.best_assignment == b.best_assignment && a.curve == b.curve;
}

} // namespace

TEST_CASE("decode rounds half up and clamps into the server range") {
    const std::vector<double> pos{0.4, 1.6, 7.9};
    CHECK(pso::decode(pos, 5).server_of == std::vector<std::int32_t>{0, 2, 4});

    const std::vector<double> zeros(6, 0.0);
    CHECK(pso::decode(zeros, 3).server_of == std::vector<std::int32_t>(6, 0));

    const std::vector<double> half{2.5};
    CHECK(pso::decode(half, 10).server_of == std::vector<std::int32_t>{3});

    const std::vector<double> wild{-3.0, 99.0};
    CHECK(pso::decode(wild, 4).server_of == std::vector<std::int32_t>{0, 3});
}

TEST_CASE("velocity update matches the hand-computed case") {
    CHECK(pso::velocity_update(1.0, 2.0, 4.0, 0.0, 0.5, 1.0, 1.0, 0.5, 0.25) ==
          doctest::Approx(1.0).epsilon(1e-15));
    // both attraction terms vanish at x = pbest = gbest with zero inertia
    CHECK(pso::velocity_update(3.0, 2.0, 2.0, 2.0, 0.0, 1.7, 1.7, 0.9, 0.4) == 0.0);
    // zero coefficients leave pure inertial motion
    CHECK(pso::velocity_update(3.0, 2.0, 5.0, 1.0, 0.5, 0.0, 0.0, 0.9, 0.4) == 1.5);
}

TEST_CASE("swarm initialization is seeded, bounded, and scores pbest") {
    const Environment env = small_env(21);
    const auto objective = make_objective(env, Weights{}, FeasibilityMode::penalty());
    pso::PsoParams params;
    params.n_particles = 8;

    Rng r1(123), r2(123);
    const pso::SwarmState a = pso::init_swarm(4, 3, params, objective, r1);
    const pso::SwarmState b = pso::init_swarm(4, 3, params, objective, r2);
    REQUIRE(a.particles.size() == 8);
    const double v_max = pso::resolve_v_max(params, 3);
    for (std::size_t i = 0; i < a.particles.size(); ++i) {
        CHECK(a.particles[i].position == b.particles[i].position);
        CHECK(a.particles[i].velocity == b.particles[i].velocity);
        for (double x : a.particles[i].position) {
            CHECK(x >= 0.0);
            CHECK(x <= 3.0 - pso::kPositionEpsilon);
        }
        for (double v : a.particles[i].velocity) CHECK(std::abs(v) <= v_max);
        CHECK(a.particles[i].pbest_cost ==
              objective(pso::decode(a.particles[i].position, a.n_servers)));
        CHECK(a.gbest_cost <= a.particles[i].pbest_cost);
    }

    CHECK_THROWS_AS(pso::init_swarm(0, 3, params, objective, r1), ConfigError);
}

TEST_CASE("gbest never rises and stays clamped across steps") {
    const Environment env = small_env(33, 6, 4);
    const auto objective = make_objective(env, Weights{}, FeasibilityMode::penalty());
    pso::PsoParams params;
    params.n_particles = 10;
    Rng rng(7);
    pso::SwarmState swarm = pso::init_swarm(6, 4, params, objective, rng);
    const double v_max = pso::resolve_v_max(params, 4);

    double prev = swarm.gbest_cost;
    for (int it = 0; it < 25; ++it) {
        pso::step(swarm, {params.inertia, params.c1, params.c2}, params, objective, rng);
        CHECK(swarm.gbest_cost <= prev);
        prev = swarm.gbest_cost;
        for (const pso::Particle& p : swarm.particles) {
            for (double x : p.position) {
                CHECK(x >= 0.0);
                CHECK(x <= 4.0 - pso::kPositionEpsilon);
            }
            for (double v : p.velocity) CHECK(std::abs(v) <= v_max + 1e-15);
        }
    }
    CHECK(swarm.iteration == 25);
}

TEST_CASE("a fully converged particle with zero inertia stays put") {
    const Environment env = small_env(5, 3, 2);
    const auto objective = make_objective(env, Weights{}, FeasibilityMode::penalty());
    pso::PsoParams params;
    params.n_particles = 2;
    Rng rng(9);
    pso::SwarmState swarm = pso::init_swarm(3, 2, params, objective, rng);

    // collapse particle 0 onto gbest
    swarm.particles[0].position = swarm.gbest_position;
    swarm.particles[0].pbest_position = swarm.gbest_position;
    swarm.particles[0].velocity.assign(3, 0.0);
    const std::vector<double> before = swarm.particles[0].position;
    pso::step(swarm, {0.0, params.c1, params.c2}, params, objective, rng);
    CHECK(swarm.particles[0].position == before);
    CHECK(swarm.particles[0].velocity == std::vector<double>(3, 0.0));
}

TEST_CASE("runs are deterministic in the seed and independent of thread count") {
    const Environment env = small_env(77, 12, 5);
    pso::PsoParams params;
    params.max_iters = 20;
    const auto a = pso::run(env, params, Weights{}, FeasibilityMode::penalty(), 42);
    const auto b = pso::run(env, params, Weights{}, FeasibilityMode::penalty(), 42);
    CHECK(same_run(a, b));
    CHECK(a.curve.size() == 21);
    CHECK(a.best_cost == a.curve.back());
    for (std::size_t t = 1; t < a.curve.size(); ++t) CHECK(a.curve[t] <= a.curve[t - 1]);
    for (const auto& c : a.coefficient_trace) {
        CHECK(c == pso::Coefficients{params.inertia, params.c1, params.c2});
    }

    const auto c = pso::run(env, params, Weights{}, FeasibilityMode::penalty(), 43);
    CHECK_FALSE(same_run(a, c)); // different seed explores differently
}

TEST_CASE("zero-iteration run reports the initialization best") {
    const Environment env = small_env(15);
    pso::PsoParams params;
    params.max_iters = 0;
    const auto r = pso::run(env, params, Weights{}, FeasibilityMode::penalty(), 1);
    CHECK(r.curve.size() == 1);
    CHECK(r.best_cost == r.curve[0]);
    CHECK(r.coefficient_trace.empty());
}

TEST_CASE("swarm search reaches the exhaustive optimum on small instances") {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Environment env = small_env(100 + seed);
        const Weights w{10.0, 0.01};
        const auto [_, oracle_cost] = brute_force_optimum(env, w, FeasibilityMode::penalty());
        const auto r = pso::run(env, pso::PsoParams{}, w, FeasibilityMode::penalty(), seed);
        CHECK(r.best_cost >= oracle_cost - 1e-12);
        if (r.best_cost <= oracle_cost + 1e-12) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("per-particle scalar draws remain a valid swarm update") {
    const Environment env = small_env(55, 8, 4);
    pso::PsoParams params;
    params.scalar_draws = true;
    params.max_iters = 15;
    const auto r = pso::run(env, params, Weights{}, FeasibilityMode::penalty(), 3);
    for (std::size_t t = 1; t < r.curve.size(); ++t) CHECK(r.curve[t] <= r.curve[t - 1]);

    pso::PsoParams vector_mode;
    vector_mode.max_iters = 15;
    const auto v = pso::run(env, vector_mode, Weights{}, FeasibilityMode::penalty(), 3);
    CHECK_FALSE(same_run(r, v)); // the draw pattern genuinely differs
}

TEST_CASE("parameter validation") {
    pso::PsoParams params;
    params.n_particles = 1;
    CHECK_THROWS_AS(pso::validate(params), ConfigError);
    params.n_particles = 2;
    params.u_low = 1.0;
    params.u_high = 0.0;
    CHECK_THROWS_AS(pso::validate(params), ConfigError);
    CHECK(pso::resolve_v_max(pso::PsoParams{}, 20) == doctest::Approx(4.0));
}
