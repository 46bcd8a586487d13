#pragma once

#include "mecswarm/apso.hpp"
#include "mecswarm/pso.hpp"
#include "mecswarm/sac.hpp"

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace mecswarm::ctrl {

/// Affine bijection between agent actions in [-1, 1] and acceleration
/// coefficients in [c_min, c_max].
struct ActionMapping {
    double c_min = 0.5;
    double c_max = 2.5;

    double to_coefficient(double action) const {
        return c_min + 0.5 * (action + 1.0) * (c_max - c_min);
    }
    double to_action(double coefficient) const {
        return 2.0 * (coefficient - c_min) / (c_max - c_min) - 1.0;
    }
};

/// What the agent sees each iteration: swarm statistics plus its own
/// current coefficients, all conditioned into fixed ranges.
struct Observation {
    double evolutionary_factor = 0.0; // [0, 1]
    double improvement = 0.0;         // relative gbest gain last iteration, [0, 1]
    double diversity = 0.0;           // mean pairwise distance, normalized
    double progress = 0.0;            // iteration / max_iters
    double c1_action = 0.0;           // current c1 mapped into [-1, 1]
    double c2_action = 0.0;           // current c2 mapped into [-1, 1]

    std::array<double, 6> to_array() const {
        return {evolutionary_factor, improvement, diversity, progress, c1_action, c2_action};
    }
    std::vector<double> to_vector() const {
        const auto a = to_array();
        return {a.begin(), a.end()};
    }
};

inline constexpr std::size_t kObservationDim = 6;

struct ControllerParams {
    pso::PsoParams base;      // swarm size, horizon, bounds; c1/c2/w are overridden per step
    ActionMapping mapping;
    bool control_inertia = false; // 3-action variant: the agent also sets w
    Interval inertia_range{0.4, 0.9}; // action->w map when control_inertia is set
};

std::size_t action_dim(const ControllerParams& params);

/// Swarm statistics -> observation. `prev_best` is the incumbent before the
/// upcoming step; improvement is (prev_best - gbest) / init_best clipped to
/// [0, 1]. Throws NumericError when init_best is not positive.
Observation make_observation(const pso::SwarmState& swarm, const apso::SwarmSpread& spread,
                             double prev_best, double init_best, double c1, double c2, int iteration,
                             int max_iters, const ControllerParams& params);

/// Relative incumbent improvement; per-episode rewards telescope to
/// (init_best - final_best) / init_best.
double compute_reward(double prev_best, double new_best, double init_best);

struct EpisodeStep {
    Observation observation;
    std::vector<double> action; // empty when coefficients were pinned
    double reward = 0.0;
};

struct EpisodeRecord {
    std::uint64_t env_seed = 0;
    std::uint64_t swarm_seed = 0;
    double init_best = 0.0;
    double final_best = 0.0;
    std::optional<double> baseline_cost; // fixed-coefficient run on the same env/seed
    std::vector<EpisodeStep> steps;
    pso::RunResult result;

    double episode_return() const;
};

struct EpisodeOptions {
    /// Action source; default is the agent's deterministic policy.
    std::function<std::vector<double>(const Observation&)> actions;
    bool store_transitions = false;           // feed the agent's replay buffer
    std::optional<pso::Coefficients> pinned;  // bypass agent and mapping entirely
    std::function<void()> after_env_step;     // training cadence hook
    bool with_baseline = false;               // also run fixed-coefficient PSO for telemetry
    double mb_to_mbit = kMbToMbit;
};

/// One optimization run driven as an episode: observe, act, map to (c1, c2),
/// derive w from the evolutionary factor (or the third action component),
/// step the swarm, reward the relative improvement. The swarm stream is
/// derive_seed(swarm_seed, "swarm"), identical to the fixed and adaptive
/// optimizers, so paired runs share initial swarms.
EpisodeRecord run_episode(sac::SacAgent* agent, const Environment& env, const ControllerParams& params,
                          const Weights& weights, const FeasibilityMode& mode,
                          std::uint64_t swarm_seed, const EpisodeOptions& options = {});

struct TrainConfig {
    sac::SacParams sac;
    ControllerParams controller;
    EnvConfig env_template;  // sizes and ranges; per-episode seeds are derived
    Weights weights;
    FeasibilityMode mode;
    std::uint64_t master_seed = 42;
    std::uint64_t agent_seed = 1;
    std::size_t total_env_steps = 0; // 0: use sac.total_train_steps
    std::size_t eval_every_episodes = 50;
    std::size_t eval_episodes = 5;
    std::size_t checkpoint_every_episodes = 200;
    std::filesystem::path out_dir = "train_out";
    std::optional<std::filesystem::path> resume_from;
    bool quiet = true; // suppress progress lines on stderr
};

struct TrainResult {
    std::filesystem::path checkpoint_path;
    std::size_t episodes = 0;
    std::size_t env_steps = 0;
    double final_eval_return = 0.0;
    double final_eval_best_cost = 0.0;
};

/// Episodic training over freshly generated environments. Writes
/// checkpoint.json (final), resume.json (rolling, with replay buffer), and
/// train_log.jsonl under out_dir. Deterministic in the config seeds;
/// interrupted runs resume exactly from resume.json.
TrainResult train(const TrainConfig& cfg);

struct MethodRun {
    std::uint64_t env_seed = 0;
    std::uint64_t swarm_seed = 0;
    double best_cost = 0.0;
    double wall_time_seconds = 0.0;
    std::vector<double> curve;
};

struct MethodData {
    std::string name; // pso | apso | apsosac
    std::vector<MethodRun> runs;

    double mean_cost() const;
    double std_cost() const;
    double mean_wall_time() const;
};

struct EvalSpec {
    EnvConfig env_template;
    std::vector<std::uint64_t> env_seeds = {42};
    bool resample_env_per_run = false;
    std::size_t runs_per_seed = 10;
    std::uint64_t master_seed = 42;
    std::vector<std::string> methods = {"pso", "apso", "apsosac"};
    pso::PsoParams pso_params;
    apso::ApsoParams apso_params;
    ControllerParams controller_params;
    Weights weights;
    FeasibilityMode mode;
    double mb_to_mbit = kMbToMbit;
};

struct EvaluationResult {
    std::vector<MethodData> methods;

    const MethodData* find(const std::string& name) const;
};

/// Paired multi-method evaluation: every (env seed, run) pair shares its
/// environment and swarm seed across methods. The agent runs its
/// deterministic policy; it may be null when "apsosac" is not requested.
EvaluationResult evaluate(sac::SacAgent* agent, const EvalSpec& spec);

} // namespace mecswarm::ctrl
