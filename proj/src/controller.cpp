#include "mecswarm/controller.hpp"

#include "mecswarm/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

namespace mecswarm::ctrl {

namespace {

using nlohmann::json;

double map_inertia(const Interval& range, double action) {
    return range.lo + 0.5 * (action + 1.0) * (range.hi - range.lo);
}

} // namespace

std::size_t action_dim(const ControllerParams& params) { return params.control_inertia ? 3 : 2; }

Observation make_observation(const pso::SwarmState& swarm, const apso::SwarmSpread& spread,
                             double prev_best, double init_best, double c1, double c2, int iteration,
                             int max_iters, const ControllerParams& params) {
    if (!(init_best > 0.0)) throw NumericError("init_best must be positive for normalization");
    Observation obs;
    obs.evolutionary_factor = apso::evolutionary_factor(spread);
    obs.improvement = std::clamp((prev_best - swarm.gbest_cost) / init_best, 0.0, 1.0);
    const double scale =
        static_cast<double>(swarm.n_servers) * std::sqrt(static_cast<double>(swarm.n_dims()));
    obs.diversity = scale > 0.0 ? std::clamp(spread.mean_pairwise / scale, 0.0, 1.0) : 0.0;
    obs.progress = max_iters > 0 ? std::clamp(static_cast<double>(iteration) / max_iters, 0.0, 1.0)
                                 : 0.0;
    obs.c1_action = std::clamp(params.mapping.to_action(c1), -1.0, 1.0);
    obs.c2_action = std::clamp(params.mapping.to_action(c2), -1.0, 1.0);
    return obs;
}

double compute_reward(double prev_best, double new_best, double init_best) {
    if (!(init_best > 0.0)) throw NumericError("init_best must be positive for normalization");
    return (prev_best - new_best) / init_best;
}

double EpisodeRecord::episode_return() const {
    double total = 0.0;
    for (const EpisodeStep& s : steps) total += s.reward;
    return total;
}

EpisodeRecord run_episode(sac::SacAgent* agent, const Environment& env, const ControllerParams& params,
                          const Weights& weights, const FeasibilityMode& mode,
                          std::uint64_t swarm_seed, const EpisodeOptions& options) {
    pso::validate(params.base);
    if (!options.pinned && !options.actions && agent == nullptr) {
        throw ContractError("run_episode needs an agent, an action source, or pinned coefficients");
    }

    const CostEvaluator evaluate(env, weights, mode, options.mb_to_mbit);
    const pso::Objective objective = [&evaluate](const Assignment& a) { return evaluate(a); };

    Rng swarm_rng(derive_seed(swarm_seed, "swarm"));
    const auto t0 = std::chrono::steady_clock::now();

    pso::SwarmState swarm =
        pso::init_swarm(env.devices.size(), env.servers.size(), params.base, objective, swarm_rng);

    EpisodeRecord record;
    record.env_seed = env.config.seed;
    record.swarm_seed = swarm_seed;
    record.init_best = swarm.gbest_cost;
    record.result.curve.reserve(static_cast<std::size_t>(params.base.max_iters) + 1);
    record.result.curve.push_back(swarm.gbest_cost);

    const double init_best = swarm.gbest_cost;
    double c1 = params.base.c1;
    double c2 = params.base.c2;
    apso::SwarmSpread spread = apso::swarm_spread(swarm);
    Observation obs =
        make_observation(swarm, spread, init_best, init_best, c1, c2, 0, params.base.max_iters, params);

    for (int t = 0; t < params.base.max_iters; ++t) {
        std::vector<double> action;
        pso::Coefficients coef;
        if (options.pinned) {
            coef = *options.pinned;
        } else {
            action = options.actions ? options.actions(obs)
                                     : agent->select_action(obs.to_vector(), true);
            if (action.size() != action_dim(params)) {
                throw ContractError("action dimension does not match the controller");
            }
            c1 = params.mapping.to_coefficient(std::clamp(action[0], -1.0, 1.0));
            c2 = params.mapping.to_coefficient(std::clamp(action[1], -1.0, 1.0));
            coef.c1 = c1;
            coef.c2 = c2;
            coef.inertia = params.control_inertia
                               ? map_inertia(params.inertia_range, std::clamp(action[2], -1.0, 1.0))
                               : apso::adapt_inertia(obs.evolutionary_factor);
        }

        const double prev_best = swarm.gbest_cost;
        pso::step(swarm, coef, params.base, objective, swarm_rng);
        const double reward = compute_reward(prev_best, swarm.gbest_cost, init_best);
        const bool done = t + 1 == params.base.max_iters;

        spread = apso::swarm_spread(swarm);
        const Observation next_obs = make_observation(swarm, spread, prev_best, init_best, c1, c2,
                                                      t + 1, params.base.max_iters, params);

        record.steps.push_back({obs, action, reward});
        record.result.curve.push_back(swarm.gbest_cost);
        record.result.coefficient_trace.push_back(coef);

        if (options.store_transitions) {
            if (agent == nullptr) throw ContractError("cannot store transitions without an agent");
            agent->store({obs.to_vector(), action, reward, next_obs.to_vector(), done});
        }
        if (options.after_env_step) options.after_env_step();
        obs = next_obs;
    }

    const auto t1 = std::chrono::steady_clock::now();
    record.result.wall_time_seconds = std::chrono::duration<double>(t1 - t0).count();
    record.result.best_cost = swarm.gbest_cost;
    record.result.best_assignment = pso::decode(swarm.gbest_position, swarm.n_servers);
    record.final_best = swarm.gbest_cost;

    if (options.with_baseline) {
        record.baseline_cost =
            pso::run(env, params.base, weights, mode, swarm_seed, options.mb_to_mbit).best_cost;
    }
    return record;
}

namespace {

struct EvalSnapshot {
    double mean_return = 0.0;
    double mean_best_cost = 0.0;
    double mean_baseline_cost = 0.0;
};

EvalSnapshot run_eval_episodes(sac::SacAgent& agent, const TrainConfig& cfg) {
    EvalSnapshot snap;
    const std::size_t n = std::max<std::size_t>(1, cfg.eval_episodes);
    for (std::size_t i = 0; i < n; ++i) {
        EnvConfig env_cfg = cfg.env_template;
        env_cfg.seed = derive_seed(cfg.master_seed, "eval-env", i);
        const Environment env = generate_environment(env_cfg);
        EpisodeOptions options;
        options.with_baseline = true;
        const EpisodeRecord rec =
            run_episode(&agent, env, cfg.controller, cfg.weights, cfg.mode,
                        derive_seed(cfg.master_seed, "eval-swarm", i), options);
        snap.mean_return += rec.episode_return();
        snap.mean_best_cost += rec.final_best;
        snap.mean_baseline_cost += rec.baseline_cost.value_or(0.0);
    }
    snap.mean_return /= static_cast<double>(n);
    snap.mean_best_cost /= static_cast<double>(n);
    snap.mean_baseline_cost /= static_cast<double>(n);
    return snap;
}

} // namespace

TrainResult train(const TrainConfig& cfg) {
    sac::SacParams sac_params = cfg.sac;
    sac_params.obs_dim = kObservationDim;
    sac_params.action_dim = action_dim(cfg.controller);
    sac::validate(sac_params);
    pso::validate(cfg.controller.base);
    validate(cfg.env_template);

    std::filesystem::create_directories(cfg.out_dir);
    const auto checkpoint_path = cfg.out_dir / "checkpoint.json";
    const auto resume_path = cfg.out_dir / "resume.json";
    const auto log_path = cfg.out_dir / "train_log.jsonl";

    std::size_t episode = 0;
    std::size_t env_steps = 0;
    std::unique_ptr<sac::SacAgent> agent;
    if (cfg.resume_from) {
        std::ifstream in(*cfg.resume_from);
        if (!in) throw ConfigError("cannot open resume checkpoint: " + cfg.resume_from->string());
        json j;
        in >> j;
        agent = std::make_unique<sac::SacAgent>(sac::SacAgent::from_json(j));
        if (j.contains("trainer")) {
            episode = j["trainer"].at("next_episode").get<std::size_t>();
            env_steps = j["trainer"].at("env_steps").get<std::size_t>();
        }
    } else {
        agent = std::make_unique<sac::SacAgent>(sac_params, cfg.agent_seed);
    }

    std::ofstream log(log_path, cfg.resume_from ? std::ios::app : std::ios::out);
    if (!log) throw ConfigError("cannot open training log: " + log_path.string());

    const std::size_t total_steps =
        cfg.total_env_steps > 0 ? cfg.total_env_steps : sac_params.total_train_steps;
    const std::size_t horizon = static_cast<std::size_t>(cfg.controller.base.max_iters);
    if (horizon == 0) throw ConfigError("training needs max_iters >= 1");

    auto save_resume = [&](std::size_t next_episode) {
        json j = agent->to_json(true);
        j["trainer"] = {{"next_episode", next_episode}, {"env_steps", env_steps}};
        std::ofstream out(resume_path);
        out << j.dump() << '\n';
    };

    while (env_steps < total_steps) {
        EnvConfig env_cfg = cfg.env_template;
        env_cfg.seed = derive_seed(cfg.master_seed, "train-env", episode);
        const Environment env = generate_environment(env_cfg);

        double loss_c1 = 0.0, loss_actor = 0.0;
        std::size_t updates = 0;
        EpisodeOptions options;
        options.store_transitions = true;
        options.actions = [&](const Observation& obs) {
            return env_steps < sac_params.warmup_steps
                       ? agent->uniform_action()
                       : agent->select_action(obs.to_vector(), false);
        };
        options.after_env_step = [&] {
            ++env_steps;
            if (env_steps >= sac_params.warmup_steps && env_steps % sac_params.update_every == 0 &&
                agent->buffer().size() >= sac_params.batch_size) {
                const sac::UpdateLosses losses = agent->update();
                loss_c1 += losses.critic1;
                loss_actor += losses.actor;
                ++updates;
            }
        };

        const EpisodeRecord rec =
            run_episode(agent.get(), env, cfg.controller, cfg.weights, cfg.mode,
                        derive_seed(cfg.master_seed, "train-swarm", episode), options);

        json line = {{"type", "episode"},
                     {"episode", episode},
                     {"env_steps", env_steps},
                     {"return", rec.episode_return()},
                     {"best_cost", rec.final_best},
                     {"init_cost", rec.init_best},
                     {"alpha", agent->alpha()},
                     {"updates", updates}};
        if (updates > 0) {
            line["critic1_loss"] = loss_c1 / static_cast<double>(updates);
            line["actor_loss"] = loss_actor / static_cast<double>(updates);
        }
        log << line.dump() << '\n';

        ++episode;
        if (cfg.eval_every_episodes > 0 && episode % cfg.eval_every_episodes == 0) {
            const EvalSnapshot snap = run_eval_episodes(*agent, cfg);
            log << json{{"type", "eval"},
                        {"episode", episode},
                        {"env_steps", env_steps},
                        {"return", snap.mean_return},
                        {"best_cost", snap.mean_best_cost},
                        {"baseline_cost", snap.mean_baseline_cost}}
                       .dump()
                << '\n';
            if (!cfg.quiet) {
                std::cerr << "episode " << episode << " steps " << env_steps << " eval_return "
                          << snap.mean_return << " eval_cost " << snap.mean_best_cost
                          << " baseline " << snap.mean_baseline_cost << '\n';
            }
        }
        if (cfg.checkpoint_every_episodes > 0 && episode % cfg.checkpoint_every_episodes == 0) {
            save_resume(episode);
        }
    }

    const EvalSnapshot final_snap = run_eval_episodes(*agent, cfg);
    log << json{{"type", "final"},
                {"episodes", episode},
                {"env_steps", env_steps},
                {"return", final_snap.mean_return},
                {"best_cost", final_snap.mean_best_cost},
                {"baseline_cost", final_snap.mean_baseline_cost}}
               .dump()
        << '\n';
    save_resume(episode);
    agent->save_checkpoint(checkpoint_path);

    TrainResult result;
    result.checkpoint_path = checkpoint_path;
    result.episodes = episode;
    result.env_steps = env_steps;
    result.final_eval_return = final_snap.mean_return;
    result.final_eval_best_cost = final_snap.mean_best_cost;
    return result;
}

double MethodData::mean_cost() const {
    double s = 0.0;
    for (const MethodRun& r : runs) s += r.best_cost;
    return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

double MethodData::std_cost() const {
    if (runs.size() < 2) return 0.0;
    const double mean = mean_cost();
    double acc = 0.0;
    for (const MethodRun& r : runs) acc += (r.best_cost - mean) * (r.best_cost - mean);
    return std::sqrt(acc / static_cast<double>(runs.size() - 1));
}

double MethodData::mean_wall_time() const {
    double s = 0.0;
    for (const MethodRun& r : runs) s += r.wall_time_seconds;
    return runs.empty() ? 0.0 : s / static_cast<double>(runs.size());
}

const MethodData* EvaluationResult::find(const std::string& name) const {
    for (const MethodData& m : methods) {
        if (m.name == name) return &m;
    }
    return nullptr;
}

EvaluationResult evaluate(sac::SacAgent* agent, const EvalSpec& spec) {
    if (spec.runs_per_seed == 0) throw ConfigError("runs_per_seed must be >= 1");
    for (const std::string& m : spec.methods) {
        if (m != "pso" && m != "apso" && m != "apsosac") {
            throw ConfigError("unknown method: " + m);
        }
        if (m == "apsosac" && agent == nullptr) {
            throw ConfigError("apsosac evaluation requires a trained agent checkpoint");
        }
    }

    EvaluationResult result;
    for (const std::string& m : spec.methods) result.methods.push_back({m, {}});

    for (std::size_t e = 0; e < spec.env_seeds.size(); ++e) {
        EnvConfig env_cfg = spec.env_template;
        env_cfg.seed = spec.env_seeds[e];
        Environment shared_env = generate_environment(env_cfg);

        for (std::size_t r = 0; r < spec.runs_per_seed; ++r) {
            const Environment* env = &shared_env;
            Environment resampled;
            if (spec.resample_env_per_run) {
                EnvConfig per_run = env_cfg;
                per_run.seed = derive_seed(spec.env_seeds[e], "env-run", r);
                resampled = generate_environment(per_run);
                env = &resampled;
            }
            const std::uint64_t swarm_seed =
                derive_seed(spec.master_seed, "eval-run", e * spec.runs_per_seed + r);

            for (MethodData& method : result.methods) {
                pso::RunResult run;
                if (method.name == "pso") {
                    run = pso::run(*env, spec.pso_params, spec.weights, spec.mode, swarm_seed,
                                   spec.mb_to_mbit);
                } else if (method.name == "apso") {
                    run = apso::run_apso(*env, spec.apso_params, spec.weights, spec.mode, swarm_seed,
                                         spec.mb_to_mbit);
                } else {
                    ctrl::EpisodeOptions opt;
                    opt.mb_to_mbit = spec.mb_to_mbit;
                    run = run_episode(agent, *env, spec.controller_params, spec.weights, spec.mode,
                                      swarm_seed, opt)
                              .result;
                }
                method.runs.push_back({env->config.seed, swarm_seed, run.best_cost,
                                       run.wall_time_seconds, std::move(run.curve)});
            }
        }
    }
    return result;
}

} // namespace mecswarm::ctrl
