#include "mecswarm/controller.hpp"

#include "mecswarm/errors.hpp"

#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace mecswarm;

namespace {

Environment small_env(std::uint64_t seed, std::size_t devices = 6, std::size_t servers = 3) {
    EnvConfig cfg;
    cfg.n_devices = devices;
    cfg.n_servers = servers;
    cfg.seed = seed;
    return generate_environment(cfg);
}

ctrl::ControllerParams tiny_controller(int iters = 10, int particles = 6) {
    ctrl::ControllerParams p;
    p.base.max_iters = iters;
    p.base.n_particles = particles;
    return p;
}

sac::SacParams tiny_sac(std::size_t action_dim = 2) {
    sac::SacParams p;
    p.obs_dim = ctrl::kObservationDim;
    p.action_dim = action_dim;
    p.hidden = {16, 16};
    p.replay_capacity = 50000;
    p.batch_size = 32;
    p.warmup_steps = 50;
    return p;
}

std::filesystem::path temp_dir(const char* name) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::filesystem::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("action mapping is an affine bijection onto the coefficient box") {
    ctrl::ActionMapping map;
    CHECK(map.to_coefficient(-1.0) == doctest::Approx(0.5));
    CHECK(map.to_coefficient(1.0) == doctest::Approx(2.5));
    CHECK(map.to_coefficient(0.0) == doctest::Approx(1.5));
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const double a = rng.uniform(-1.0, 1.0);
        CHECK(map.to_action(map.to_coefficient(a)) == doctest::Approx(a).epsilon(1e-12));
        const double c = rng.uniform(map.c_min, map.c_max);
        CHECK(map.to_coefficient(map.to_action(c)) == doctest::Approx(c).epsilon(1e-12));
    }
}

TEST_CASE("rewards are relative improvements with a zero floor case") {
    CHECK(ctrl::compute_reward(10.0, 10.0, 100.0) == 0.0);
    CHECK(ctrl::compute_reward(100.0, 58.5, 100.0) == doctest::Approx(0.415));
    CHECK_THROWS_AS(ctrl::compute_reward(1.0, 1.0, 0.0), NumericError);
}

TEST_CASE("observations stay inside their declared ranges over whole episodes") {
    const Environment env = small_env(3, 10, 4);
    sac::SacAgent agent(tiny_sac(), 5);
    const auto params = tiny_controller(15, 8);
    const auto rec = ctrl::run_episode(&agent, env, params, Weights{10.0, 0.01},
                                       FeasibilityMode::penalty(), 21);
    REQUIRE(rec.steps.size() == 15);
    for (const ctrl::EpisodeStep& s : rec.steps) {
        const ctrl::Observation& o = s.observation;
        CHECK(o.evolutionary_factor >= 0.0);
        CHECK(o.evolutionary_factor <= 1.0);
        CHECK(o.improvement >= 0.0);
        CHECK(o.improvement <= 1.0);
        CHECK(o.diversity >= 0.0);
        CHECK(o.diversity <= 1.0);
        CHECK(o.progress >= 0.0);
        CHECK(o.progress <= 1.0);
        CHECK(o.c1_action >= -1.0);
        CHECK(o.c1_action <= 1.0);
        CHECK(o.c2_action >= -1.0);
        CHECK(o.c2_action <= 1.0);
        CHECK(s.reward >= 0.0);
    }
    CHECK(rec.steps.front().observation.improvement == 0.0);
    CHECK(rec.steps.front().observation.progress == 0.0);
}

TEST_CASE("a fully collapsed swarm observes zero factor and diversity") {
    pso::SwarmState swarm;
    swarm.n_servers = 4;
    for (int i = 0; i < 3; ++i) {
        pso::Particle p;
        p.position = {1.0, 1.0};
        p.velocity = {0.0, 0.0};
        p.pbest_position = p.position;
        p.pbest_cost = 5.0;
        swarm.particles.push_back(p);
    }
    swarm.gbest_position = {1.0, 1.0};
    swarm.gbest_cost = 5.0;
    const auto spread = apso::swarm_spread(swarm);
    const auto obs = ctrl::make_observation(swarm, spread, 5.0, 5.0, 1.5, 1.5, 0, 10,
                                            ctrl::ControllerParams{});
    CHECK(obs.evolutionary_factor == 0.0);
    CHECK(obs.diversity == 0.0);
}

TEST_CASE("per-step rewards telescope to the total relative improvement") {
    const Environment env = small_env(9, 8, 3);
    sac::SacAgent agent(tiny_sac(), 2);
    const auto rec = ctrl::run_episode(&agent, env, tiny_controller(20, 8), Weights{10.0, 0.01},
                                       FeasibilityMode::penalty(), 4);
    const double expected = (rec.init_best - rec.final_best) / rec.init_best;
    CHECK(std::abs(rec.episode_return() - expected) < 1e-10);
}

TEST_CASE("pinned coefficients reproduce the fixed-coefficient run bit for bit") {
    const Environment env = small_env(13, 7, 4);
    ctrl::ControllerParams params = tiny_controller(18, 9);
    ctrl::EpisodeOptions options;
    options.pinned = pso::Coefficients{params.base.inertia, params.base.c1, params.base.c2};

    const auto rec = ctrl::run_episode(nullptr, env, params, Weights{10.0, 0.01},
                                       FeasibilityMode::penalty(), 37, options);
    const auto fixed = pso::run(env, params.base, Weights{10.0, 0.01}, FeasibilityMode::penalty(), 37);
    CHECK(rec.result.best_cost == fixed.best_cost);
    CHECK(rec.result.curve == fixed.curve);
    CHECK(rec.result.best_assignment == fixed.best_assignment);
}

TEST_CASE("coefficient trace equals the mapped agent actions") {
    const Environment env = small_env(17, 6, 3);
    sac::SacAgent agent(tiny_sac(), 8);
    ctrl::ControllerParams params = tiny_controller(12, 6);
    const auto rec = ctrl::run_episode(&agent, env, params, Weights{10.0, 0.01},
                                       FeasibilityMode::penalty(), 2);
    REQUIRE(rec.result.coefficient_trace.size() == 12);
    for (std::size_t t = 0; t < rec.steps.size(); ++t) {
        const auto& action = rec.steps[t].action;
        REQUIRE(action.size() == 2);
        CHECK(rec.result.coefficient_trace[t].c1 ==
              doctest::Approx(params.mapping.to_coefficient(action[0])).epsilon(1e-15));
        CHECK(rec.result.coefficient_trace[t].c2 ==
              doctest::Approx(params.mapping.to_coefficient(action[1])).epsilon(1e-15));
        CHECK(rec.result.coefficient_trace[t].inertia ==
              doctest::Approx(apso::adapt_inertia(rec.steps[t].observation.evolutionary_factor))
                  .epsilon(1e-15));
    }
}

TEST_CASE("training episodes store max_iters transitions with one terminal") {
    const Environment env = small_env(23, 6, 3);
    sac::SacAgent agent(tiny_sac(), 9);
    ctrl::EpisodeOptions options;
    options.store_transitions = true;
    options.actions = [&agent](const ctrl::Observation& obs) {
        return agent.select_action(obs.to_vector(), false);
    };
    ctrl::run_episode(&agent, env, tiny_controller(14, 6), Weights{10.0, 0.01},
                      FeasibilityMode::penalty(), 10, options);
    CHECK(agent.buffer().size() == 14);
    std::size_t terminals = 0;
    for (std::size_t i = 0; i < agent.buffer().size(); ++i) {
        if (agent.buffer().at(i).done) ++terminals;
    }
    CHECK(terminals == 1);
    CHECK(agent.buffer().at(13).done);
}

TEST_CASE("mismatched action dimension is rejected") {
    const Environment env = small_env(29, 5, 3);
    sac::SacAgent agent(tiny_sac(3), 1); // 3-dim actions vs 2-dim controller
    CHECK_THROWS_AS(ctrl::run_episode(&agent, env, tiny_controller(), Weights{10.0, 0.01},
                                      FeasibilityMode::penalty(), 1),
                    ContractError);
    CHECK_THROWS_AS(ctrl::run_episode(nullptr, env, tiny_controller(), Weights{10.0, 0.01},
                                      FeasibilityMode::penalty(), 1),
                    ContractError);
}

TEST_CASE("tiny training run: accounting, determinism, and resumability") {
    ctrl::TrainConfig cfg;
    cfg.sac = tiny_sac();
    cfg.controller = tiny_controller(10, 6);
    cfg.env_template.n_devices = 6;
    cfg.env_template.n_servers = 3;
    cfg.weights = Weights{10.0, 0.01};
    cfg.mode = FeasibilityMode::penalty();
    cfg.master_seed = 5;
    cfg.agent_seed = 6;
    cfg.total_env_steps = 300;
    cfg.eval_every_episodes = 10;
    cfg.eval_episodes = 2;
    cfg.checkpoint_every_episodes = 15;

    const auto dir_a = temp_dir("mecswarm_train_a");
    const auto dir_b = temp_dir("mecswarm_train_b");
    cfg.out_dir = dir_a;
    const auto ra = ctrl::train(cfg);
    cfg.out_dir = dir_b;
    const auto rb = ctrl::train(cfg);

    CHECK(ra.env_steps == 300);
    CHECK(ra.episodes == 30); // 300 steps / 10 per episode
    CHECK(ra.episodes == rb.episodes);

    // identical seeds give byte-identical checkpoints
    const auto read = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    };
    CHECK(read(dir_a / "checkpoint.json") == read(dir_b / "checkpoint.json"));
    CHECK(read(dir_a / "train_log.jsonl") == read(dir_b / "train_log.jsonl"));

    SUBCASE("resume halfway reproduces the uninterrupted checkpoint") {
        ctrl::TrainConfig half = cfg;
        const auto dir_c = temp_dir("mecswarm_train_c");
        half.out_dir = dir_c;
        half.total_env_steps = 150;
        ctrl::train(half);

        ctrl::TrainConfig rest = cfg;
        rest.out_dir = dir_c;
        rest.total_env_steps = 300;
        rest.resume_from = dir_c / "resume.json";
        ctrl::train(rest);
        CHECK(read(dir_c / "checkpoint.json") == read(dir_a / "checkpoint.json"));
    }
}

TEST_CASE("evaluation pairs seeds across methods and nulls need no agent") {
    ctrl::EvalSpec spec;
    spec.env_template.n_devices = 6;
    spec.env_template.n_servers = 3;
    spec.env_seeds = {11, 12};
    spec.runs_per_seed = 3;
    spec.methods = {"pso", "apso"};
    spec.pso_params.max_iters = 8;
    spec.pso_params.n_particles = 6;
    spec.apso_params.base = spec.pso_params;
    spec.weights = Weights{10.0, 0.01};

    const auto result = ctrl::evaluate(nullptr, spec);
    REQUIRE(result.methods.size() == 2);
    REQUIRE(result.methods[0].runs.size() == 6);
    for (std::size_t r = 0; r < 6; ++r) {
        CHECK(result.methods[0].runs[r].env_seed == result.methods[1].runs[r].env_seed);
        CHECK(result.methods[0].runs[r].swarm_seed == result.methods[1].runs[r].swarm_seed);
        CHECK(result.methods[0].runs[r].curve.size() == 9);
    }

    spec.methods = {"apsosac"};
    CHECK_THROWS_AS(ctrl::evaluate(nullptr, spec), ConfigError);
    spec.methods = {"nonsense"};
    CHECK_THROWS_AS(ctrl::evaluate(nullptr, spec), ConfigError);
}

TEST_CASE("training improves the evaluation return on a tiny task") {
    ctrl::TrainConfig cfg;
    cfg.sac = tiny_sac();
    cfg.sac.hidden = {32, 32};
    cfg.sac.batch_size = 64;
    cfg.sac.warmup_steps = 500;
    cfg.sac.auto_alpha = true;
    cfg.controller = tiny_controller(10, 6);
    cfg.env_template.n_devices = 6;
    cfg.env_template.n_servers = 3;
    cfg.weights = Weights{10.0, 0.01};
    cfg.master_seed = 77;
    cfg.agent_seed = 78;
    cfg.total_env_steps = 20000;
    cfg.eval_every_episodes = 100;
    cfg.eval_episodes = 3;
    cfg.checkpoint_every_episodes = 0; // no rolling checkpoints needed here
    cfg.out_dir = temp_dir("mecswarm_train_trend");

    ctrl::train(cfg);

    // eval returns: mean of the first fifth vs mean of the last fifth
    std::ifstream in(cfg.out_dir / "train_log.jsonl");
    REQUIRE(in.good());
    std::vector<double> eval_returns;
    std::string line;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        if (j.at("type") == "eval") eval_returns.push_back(j.at("return").get<double>());
    }
    REQUIRE(eval_returns.size() >= 5);
    const std::size_t fifth = eval_returns.size() / 5;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < fifth; ++i) first += eval_returns[i];
    for (std::size_t i = eval_returns.size() - fifth; i < eval_returns.size(); ++i) {
        last += eval_returns[i];
    }
    CHECK(last / fifth >= first / fifth);
}
