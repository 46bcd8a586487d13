#include "mecswarm/apso.hpp"
#include "mecswarm/controller.hpp"
#include "mecswarm/cost.hpp"
#include "mecswarm/env.hpp"
#include "mecswarm/errors.hpp"
#include "mecswarm/harness.hpp"
#include "mecswarm/pso.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

namespace {

using namespace mecswarm;
using nlohmann::json;

struct CommonFlags {
    std::string config_path;
    harness::ExperimentConfig cfg;
};

// Registers the flags shared by run/bench/evaluate/oracle; values parsed
// from --config first, explicit flags override.
void add_experiment_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "JSON config mirroring these flags");
    cmd->add_option("--devices", flags.cfg.env.n_devices, "device count");
    cmd->add_option("--servers", flags.cfg.env.n_servers, "server count");
    cmd->add_option("--env-seed", flags.cfg.env.seed, "environment generation seed");
    cmd->add_option("--seed", flags.cfg.master_seed, "master seed for run derivation")
        ->envname("MEC_SWARM_SEED");
    cmd->add_option("--runs", flags.cfg.runs, "runs per method");
    cmd->add_option("--methods", flags.cfg.methods, "comma-separated subset of pso,apso,apsosac")
        ->delimiter(',');
    cmd->add_option("--checkpoint", flags.cfg.checkpoint, "trained agent checkpoint (apsosac)");
    cmd->add_option("--out-dir", flags.cfg.output_dir, "output directory");
    cmd->add_option("--particles", flags.cfg.pso_params.n_particles, "swarm size");
    cmd->add_option("--iters", flags.cfg.pso_params.max_iters, "iterations per run");
    cmd->add_option("--weight-m", flags.cfg.weights.m, "cost weight m");
    cmd->add_option("--weight-n", flags.cfg.weights.n, "latency weight n");
    cmd->add_flag("--resample-env", flags.cfg.resample_env_per_run,
                  "fresh environment per run instead of one shared per seed");
    cmd->add_flag_callback(
        "--paper-literal",
        [&flags] { flags.cfg.mode = FeasibilityMode::literal(); },
        "zero-cost rule for infeasible devices instead of a penalty");
    cmd->add_flag_callback(
        "--literal-units", [&flags] { flags.cfg.mb_to_mbit = 1.0; },
        "divide MB by Mbps directly (skip the x8 conversion)");
    cmd->add_flag_callback(
        "--els", [&flags] { flags.cfg.apso_params.els_enabled = true; },
        "enable elitist learning in the adaptive optimizer");
}

// --config file first, then explicit flags on top.
void resolve_config(const CLI::App* cmd, CommonFlags& flags) {
    if (flags.config_path.empty()) return;
    harness::ExperimentConfig from_file = harness::load_config(flags.config_path);
    // replay explicit flags over the file values
    harness::ExperimentConfig merged = from_file;
    const harness::ExperimentConfig& cli = flags.cfg;
    auto passed = [cmd](const std::string& name) {
        const CLI::Option* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (passed("--devices")) merged.env.n_devices = cli.env.n_devices;
    if (passed("--servers")) merged.env.n_servers = cli.env.n_servers;
    if (passed("--env-seed")) merged.env.seed = cli.env.seed;
    if (passed("--seed")) merged.master_seed = cli.master_seed;
    if (passed("--runs")) merged.runs = cli.runs;
    if (passed("--methods")) merged.methods = cli.methods;
    if (passed("--checkpoint")) merged.checkpoint = cli.checkpoint;
    if (passed("--out-dir")) merged.output_dir = cli.output_dir;
    if (passed("--particles")) merged.pso_params.n_particles = cli.pso_params.n_particles;
    if (passed("--iters")) merged.pso_params.max_iters = cli.pso_params.max_iters;
    if (passed("--weight-m")) merged.weights.m = cli.weights.m;
    if (passed("--weight-n")) merged.weights.n = cli.weights.n;
    if (passed("--resample-env")) merged.resample_env_per_run = cli.resample_env_per_run;
    if (passed("--paper-literal")) merged.mode = FeasibilityMode::literal();
    if (passed("--literal-units")) merged.mb_to_mbit = 1.0;
    if (passed("--els")) merged.apso_params.els_enabled = true;
    flags.cfg = merged;
}

Environment environment_for(const CommonFlags& flags, const std::string& env_file) {
    if (!env_file.empty()) return load_environment(env_file);
    return generate_environment(flags.cfg.env);
}

json run_result_to_json(const std::string& method, const pso::RunResult& r) {
    json trace = json::array();
    for (const pso::Coefficients& c : r.coefficient_trace) {
        trace.push_back({c.inertia, c.c1, c.c2});
    }
    return json{{"method", method},
                {"best_cost", r.best_cost},
                {"best_assignment", r.best_assignment.server_of},
                {"curve", r.curve},
                {"coefficient_trace", std::move(trace)},
                {"wall_time_s", r.wall_time_seconds}};
}

int cmd_gen_env(const CommonFlags& flags, const std::string& out_path) {
    const Environment env = generate_environment(flags.cfg.env);
    save_environment(env, out_path);
    std::cout << "wrote " << out_path << " (" << env.devices.size() << " devices, "
              << env.servers.size() << " servers)\n";
    return 0;
}

int cmd_run(const CommonFlags& flags, const std::string& method, const std::string& env_file,
            std::uint64_t run_seed) {
    const Environment env = environment_for(flags, env_file);
    const auto& cfg = flags.cfg;
    pso::RunResult result;
    if (method == "pso") {
        result = pso::run(env, cfg.pso_params, cfg.weights, cfg.mode, run_seed, cfg.mb_to_mbit);
    } else if (method == "apso") {
        apso::ApsoParams params = cfg.apso_params;
        params.base = cfg.pso_params;
        result = apso::run_apso(env, params, cfg.weights, cfg.mode, run_seed, cfg.mb_to_mbit);
    } else if (method == "apsosac") {
        if (cfg.checkpoint.empty()) throw ConfigError("method apsosac requires --checkpoint");
        sac::SacAgent agent = sac::SacAgent::load_checkpoint(cfg.checkpoint);
        ctrl::ControllerParams params = cfg.controller_params;
        params.base = cfg.pso_params;
        ctrl::EpisodeOptions options;
        options.mb_to_mbit = cfg.mb_to_mbit;
        result = ctrl::run_episode(&agent, env, params, cfg.weights, cfg.mode, run_seed, options).result;
    } else {
        throw ConfigError("unknown method: " + method);
    }

    std::filesystem::create_directories(cfg.output_dir);
    const auto out_path = cfg.output_dir / ("run_" + method + ".json");
    json j = run_result_to_json(method, result);
    j["run_seed"] = run_seed;
    j["config"] = harness::to_json(cfg);
    std::ofstream out(out_path);
    out << j.dump(2) << '\n';
    std::cout << method << " best cost " << harness::format_double(result.best_cost) << " ("
              << out_path.string() << ")\n";
    return 0;
}

int cmd_oracle(const CommonFlags& flags, const std::string& env_file, std::uint64_t cap,
               const std::string& out_path) {
    const Environment env = environment_for(flags, env_file);
    const auto [assignment, cost] =
        brute_force_optimum(env, flags.cfg.weights, flags.cfg.mode, cap, flags.cfg.mb_to_mbit);
    std::cout << "optimum cost " << harness::format_double(cost) << "\n";
    if (!out_path.empty()) {
        json j{{"best_cost", cost}, {"assignment", assignment.server_of}};
        std::ofstream out(out_path);
        out << j.dump(2) << '\n';
    }
    return 0;
}

int cmd_bench(const CommonFlags& flags) {
    const harness::ComparisonReport report = harness::run_bench(flags.cfg);
    harness::emit_report(report, flags.cfg.output_dir);
    for (const harness::MethodSummary& m : report.methods) {
        std::cout << m.method << " mean " << harness::format_double(m.mean_cost) << " std "
                  << harness::format_double(m.std_cost);
        if (m.has_improvement) {
            std::cout << " improvement_vs_pso " << harness::format_double(m.improvement_vs_pso_pct)
                      << "%";
        }
        std::cout << "\n";
    }
    std::cout << "report written to " << flags.cfg.output_dir.string() << "\n";
    return 0;
}

int cmd_evaluate(CommonFlags flags, const std::vector<std::uint64_t>& env_seeds) {
    if (flags.cfg.checkpoint.empty()) throw ConfigError("evaluate requires --checkpoint");
    if (flags.cfg.methods.empty() ||
        std::find(flags.cfg.methods.begin(), flags.cfg.methods.end(), "apsosac") ==
            flags.cfg.methods.end()) {
        flags.cfg.methods = {"pso", "apso", "apsosac"};
    }
    if (!env_seeds.empty()) flags.cfg.env.seed = env_seeds.front();

    ctrl::EvalSpec spec;
    spec.env_template = flags.cfg.env;
    spec.env_seeds = env_seeds.empty() ? std::vector<std::uint64_t>{flags.cfg.env.seed} : env_seeds;
    spec.resample_env_per_run = flags.cfg.resample_env_per_run;
    spec.runs_per_seed = flags.cfg.runs;
    spec.master_seed = flags.cfg.master_seed;
    spec.methods = flags.cfg.methods;
    spec.pso_params = flags.cfg.pso_params;
    spec.apso_params = flags.cfg.apso_params;
    spec.apso_params.base = flags.cfg.pso_params;
    spec.controller_params = flags.cfg.controller_params;
    spec.controller_params.base = flags.cfg.pso_params;
    spec.weights = flags.cfg.weights;
    spec.mode = flags.cfg.mode;
    spec.mb_to_mbit = flags.cfg.mb_to_mbit;

    sac::SacAgent agent = sac::SacAgent::load_checkpoint(flags.cfg.checkpoint);
    const ctrl::EvaluationResult raw = ctrl::evaluate(&agent, spec);
    const harness::ComparisonReport report = harness::build_report(flags.cfg, raw);
    harness::emit_report(report, flags.cfg.output_dir);
    for (const harness::MethodSummary& m : report.methods) {
        std::cout << m.method << " mean " << harness::format_double(m.mean_cost);
        if (m.has_improvement) {
            std::cout << " improvement_vs_pso " << harness::format_double(m.improvement_vs_pso_pct)
                      << "%";
        }
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Task-offloading optimization toolkit for simulated MEC fleets"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* gen = app.add_subcommand("gen-env", "generate and save an environment snapshot");
    std::string gen_out = "environment.json";
    add_experiment_flags(gen, flags);
    gen->add_option("--out", gen_out, "output file");

    auto* run = app.add_subcommand("run", "run one optimizer on one environment");
    std::string run_method = "pso";
    std::string run_env_file;
    std::uint64_t run_seed = 0;
    add_experiment_flags(run, flags);
    run->add_option("--method", run_method, "pso | apso | apsosac")->required();
    run->add_option("--env", run_env_file, "environment snapshot to load (default: generate)");
    run->add_option("--run-seed", run_seed, "seed for swarm initialization and draws");

    auto* oracle = app.add_subcommand("oracle", "exhaustive optimum for small instances");
    std::string oracle_env_file, oracle_out;
    std::uint64_t oracle_cap = 1'000'000;
    add_experiment_flags(oracle, flags);
    oracle->add_option("--env", oracle_env_file, "environment snapshot to load");
    oracle->add_option("--cap", oracle_cap, "maximum number of enumerated assignments");
    oracle->add_option("--out", oracle_out, "optional JSON output file");

    auto* bench = app.add_subcommand("bench", "paired multi-method comparison report");
    add_experiment_flags(bench, flags);

    auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained agent against baselines");
    std::vector<std::uint64_t> eval_env_seeds;
    add_experiment_flags(evaluate, flags);
    evaluate->add_option("--env-seeds", eval_env_seeds, "environment seeds, comma separated")
        ->delimiter(',');

    auto* train = app.add_subcommand("train", "train the coefficient-control agent");
    ctrl::TrainConfig tc;
    std::string resume_path;
    std::vector<std::size_t> hidden;
    train->add_option("--steps", tc.total_env_steps, "environment-step budget")->required();
    train->add_option("--out-dir", tc.out_dir, "output directory")->required();
    train->add_option("--devices", tc.env_template.n_devices, "devices per training environment");
    train->add_option("--servers", tc.env_template.n_servers, "servers per training environment");
    train->add_option("--seed", tc.master_seed, "master seed")->envname("MEC_SWARM_SEED");
    train->add_option("--agent-seed", tc.agent_seed, "network initialization seed");
    train->add_option("--particles", tc.controller.base.n_particles, "swarm size");
    train->add_option("--iters", tc.controller.base.max_iters, "episode length (iterations)");
    train->add_option("--hidden", hidden, "hidden layer sizes, comma separated")->delimiter(',');
    train->add_option("--batch", tc.sac.batch_size, "update batch size");
    train->add_option("--replay", tc.sac.replay_capacity, "replay buffer capacity");
    train->add_option("--alpha", tc.sac.alpha, "entropy coefficient");
    bool auto_alpha = false;
    train->add_flag("--auto-alpha", auto_alpha, "tune the entropy coefficient automatically");
    train->add_option("--reward-scale", tc.sac.reward_scale, "reward scaling inside updates");
    train->add_option("--warmup", tc.sac.warmup_steps, "uniform-random warmup steps");
    train->add_option("--update-every", tc.sac.update_every, "env steps per gradient step");
    train->add_option("--eval-every", tc.eval_every_episodes, "episodes between eval rounds");
    train->add_option("--checkpoint-every", tc.checkpoint_every_episodes,
                      "episodes between resume checkpoints");
    train->add_option("--ctrl-c-min", tc.controller.mapping.c_min, "coefficient box lower bound");
    train->add_option("--ctrl-c-max", tc.controller.mapping.c_max, "coefficient box upper bound");
    train->add_flag("--control-inertia", tc.controller.control_inertia,
                    "let the agent set the inertia weight too");
    train->add_option("--resume", resume_path, "resume from a rolling checkpoint");
    bool verbose = false;
    train->add_flag("--verbose", verbose, "progress lines on stderr");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen->parsed()) {
            resolve_config(gen, flags);
            return cmd_gen_env(flags, gen_out);
        }
        if (run->parsed()) {
            resolve_config(run, flags);
            return cmd_run(flags, run_method, run_env_file, run_seed);
        }
        if (oracle->parsed()) {
            resolve_config(oracle, flags);
            return cmd_oracle(flags, oracle_env_file, oracle_cap, oracle_out);
        }
        if (bench->parsed()) {
            resolve_config(bench, flags);
            return cmd_bench(flags);
        }
        if (evaluate->parsed()) {
            resolve_config(evaluate, flags);
            return cmd_evaluate(flags, eval_env_seeds);
        }
        if (train->parsed()) {
            if (!hidden.empty()) tc.sac.hidden = hidden;
            tc.sac.auto_alpha = auto_alpha;
            tc.quiet = !verbose;
            if (!resume_path.empty()) tc.resume_from = resume_path;
            const ctrl::TrainResult result = ctrl::train(tc);
            std::cout << "trained " << result.env_steps << " env steps over " << result.episodes
                      << " episodes; checkpoint " << result.checkpoint_path.string()
                      << " (eval best cost "
                      << harness::format_double(result.final_eval_best_cost) << ")\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
