#include "mecswarm/sac.hpp"

#include "mecswarm/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace mecswarm::sac {

namespace {

using nlohmann::json;

constexpr int kCheckpointVersion = 1;
constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kTanhEps = 1e-6;      // change-of-variables stabilizer
constexpr double kActionMargin = 1e-12; // keeps actions strictly inside (-1, 1)
constexpr double kHalfLog2Pi = 0.9189385332046727; // 0.5 * log(2 * pi)

double clamp_open_unit(double x) {
    return std::clamp(x, -1.0 + kActionMargin, 1.0 - kActionMargin);
}

json mlp_to_json(const nn::Mlp& net) {
    return json{{"layer_sizes", net.layer_sizes}, {"weights", net.weights}, {"biases", net.biases}};
}

nn::Mlp mlp_from_json(const json& j, const std::vector<std::size_t>& expected_sizes,
                      const std::string& name) {
    nn::Mlp net;
    net.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    if (net.layer_sizes != expected_sizes) {
        throw ParseError("checkpoint network '" + name + "' has mismatched layer shapes");
    }
    net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        if (net.weights.size() != net.layer_sizes.size() - 1 ||
            net.weights[l].size() != net.layer_sizes[l] * net.layer_sizes[l + 1] ||
            net.biases[l].size() != net.layer_sizes[l + 1]) {
            throw ParseError("checkpoint network '" + name + "' has mismatched layer shapes");
        }
    }
    return net;
}

json adam_to_json(const nn::AdamState& s) {
    return json{{"learning_rate", s.learning_rate}, {"beta1", s.beta1},       {"beta2", s.beta2},
                {"epsilon", s.epsilon},             {"step_count", s.step_count},
                {"m_weights", s.m_weights},         {"v_weights", s.v_weights},
                {"m_biases", s.m_biases},           {"v_biases", s.v_biases}};
}

nn::AdamState adam_from_json(const json& j) {
    nn::AdamState s;
    s.learning_rate = j.at("learning_rate").get<double>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.step_count = j.at("step_count").get<long>();
    s.m_weights = j.at("m_weights").get<std::vector<std::vector<double>>>();
    s.v_weights = j.at("v_weights").get<std::vector<std::vector<double>>>();
    s.m_biases = j.at("m_biases").get<std::vector<std::vector<double>>>();
    s.v_biases = j.at("v_biases").get<std::vector<std::vector<double>>>();
    return s;
}

std::vector<std::size_t> actor_sizes(const SacParams& p) {
    std::vector<std::size_t> sizes{p.obs_dim};
    sizes.insert(sizes.end(), p.hidden.begin(), p.hidden.end());
    sizes.push_back(2 * p.action_dim);
    return sizes;
}

std::vector<std::size_t> critic_sizes(const SacParams& p) {
    std::vector<std::size_t> sizes{p.obs_dim + p.action_dim};
    sizes.insert(sizes.end(), p.hidden.begin(), p.hidden.end());
    sizes.push_back(1);
    return sizes;
}

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    out.insert(out.end(), a.begin(), a.end());
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

} // namespace

void validate(const SacParams& p) {
    if (p.obs_dim == 0 || p.action_dim == 0) throw ConfigError("zero observation or action dimension");
    if (!(p.tau > 0.0 && p.tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
    if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
    if (p.alpha < 0.0) throw ConfigError("alpha must be >= 0");
    if (p.batch_size == 0 || p.batch_size > p.replay_capacity) {
        throw ConfigError("batch_size must be in [1, replay_capacity]");
    }
    if (p.update_every == 0) throw ConfigError("update_every must be >= 1");
    if (p.hidden.empty()) throw ConfigError("at least one hidden layer is required");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ConfigError("replay capacity must be positive");
}

void ReplayBuffer::store(Transition t) {
    if (size_ < capacity_) {
        slots_.push_back(std::move(t));
        ++size_;
        cursor_ = size_ % capacity_;
    } else {
        slots_[cursor_] = std::move(t); // overwrite the oldest slot
        cursor_ = (cursor_ + 1) % capacity_;
    }
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
    if (size_ == 0) throw ContractError("sample from an empty replay buffer");
    std::vector<const Transition*> batch;
    batch.reserve(batch_size);
    for (std::size_t i = 0; i < batch_size; ++i) {
        batch.push_back(&slots_[rng.uniform_index(size_)]);
    }
    return batch;
}

std::pair<double, nn::Gradients> critic_loss_gradients(const nn::Mlp& critic,
                                                       std::span<const Transition* const> batch,
                                                       std::span<const double> targets) {
    if (batch.size() != targets.size()) throw ContractError("batch/target size mismatch");
    nn::Gradients grads = nn::Gradients::zeros_like(critic);
    const double inv = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto input = concat(batch[i]->state, batch[i]->action);
        const auto trace = nn::forward_trace(critic, input);
        const double q = trace.output()[0];
        const double residual = q - targets[i];
        loss += residual * residual * inv;
        const double upstream[1] = {2.0 * residual * inv};
        nn::backward_accumulate(critic, trace, upstream, grads);
    }
    return {loss, std::move(grads)};
}

struct SacAgent::PolicyEval {
    nn::ForwardTrace trace;
    std::vector<double> mean;
    std::vector<double> log_std; // clamped
    std::vector<bool> clamped;   // true where the raw log-std left the window
};

SacAgent::PolicyEval SacAgent::eval_policy(std::span<const double> state) const {
    PolicyEval out{nn::forward_trace(actor_, state), {}, {}, {}};
    const std::vector<double>& raw = out.trace.output();
    const std::size_t k = params_.action_dim;
    out.mean.assign(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(k));
    out.log_std.resize(k);
    out.clamped.resize(k);
    for (std::size_t d = 0; d < k; ++d) {
        const double v = raw[k + d];
        out.log_std[d] = std::clamp(v, kLogStdMin, kLogStdMax);
        out.clamped[d] = v < kLogStdMin || v > kLogStdMax;
    }
    return out;
}

SacAgent::SacAgent(SacParams params, std::uint64_t seed)
    : params_(std::move(params)),
      actor_([&] {
          Rng rng(derive_seed(seed, "actor"));
          return nn::make_mlp(actor_sizes(params_), rng, 1e-3);
      }()),
      critic1_([&] {
          Rng rng(derive_seed(seed, "critic1"));
          return nn::make_mlp(critic_sizes(params_), rng);
      }()),
      critic2_([&] {
          Rng rng(derive_seed(seed, "critic2"));
          return nn::make_mlp(critic_sizes(params_), rng);
      }()),
      target1_(critic1_),
      target2_(critic2_),
      actor_opt_(nn::make_adam(actor_, params_.actor_lr)),
      critic1_opt_(nn::make_adam(critic1_, params_.critic_lr)),
      critic2_opt_(nn::make_adam(critic2_, params_.critic_lr)),
      alpha_(params_.alpha),
      log_alpha_(std::log(std::max(params_.alpha, 1e-12))),
      buffer_(params_.replay_capacity),
      noise_rng_(derive_seed(seed, "noise")),
      sample_rng_(derive_seed(seed, "replay")) {
    validate(params_);
}

std::vector<double> SacAgent::select_action(std::span<const double> state, bool deterministic,
                                            Rng& rng) const {
    const PolicyEval policy = eval_policy(state);
    std::vector<double> action(params_.action_dim);
    for (std::size_t d = 0; d < params_.action_dim; ++d) {
        double u = policy.mean[d];
        if (!deterministic) u += std::exp(policy.log_std[d]) * rng.normal();
        action[d] = clamp_open_unit(std::tanh(u));
    }
    return action;
}

std::vector<double> SacAgent::select_action(std::span<const double> state, bool deterministic) {
    return select_action(state, deterministic, noise_rng_);
}

std::vector<double> SacAgent::uniform_action() {
    std::vector<double> action(params_.action_dim);
    for (double& a : action) a = clamp_open_unit(noise_rng_.uniform(-1.0, 1.0));
    return action;
}

double SacAgent::log_prob(std::span<const double> state, std::span<const double> action_pre_tanh) const {
    if (action_pre_tanh.size() != params_.action_dim) {
        throw ContractError("pre-squash action length mismatch");
    }
    const PolicyEval policy = eval_policy(state);
    double logp = 0.0;
    for (std::size_t d = 0; d < params_.action_dim; ++d) {
        const double sigma = std::exp(policy.log_std[d]);
        const double z = (action_pre_tanh[d] - policy.mean[d]) / sigma;
        logp += -policy.log_std[d] - kHalfLog2Pi - 0.5 * z * z;
        const double t = std::tanh(action_pre_tanh[d]);
        logp -= std::log(1.0 - t * t + kTanhEps);
    }
    return logp;
}

UpdateLosses SacAgent::update() {
    if (buffer_.size() < params_.batch_size) {
        throw ContractError("replay buffer holds fewer transitions than batch_size");
    }
    const auto batch = buffer_.sample(params_.batch_size, sample_rng_);
    return update(batch);
}

UpdateLosses SacAgent::update(std::span<const Transition* const> batch) {
    const std::size_t B = batch.size();
    if (B == 0) throw ContractError("empty update batch");
    const std::size_t k = params_.action_dim;
    const double inv = 1.0 / static_cast<double>(B);

    // critic targets from freshly sampled squashed next actions
    std::vector<double> targets(B);
    for (std::size_t i = 0; i < B; ++i) {
        const Transition& tr = *batch[i];
        const PolicyEval policy = eval_policy(tr.next_state);
        double logp = 0.0;
        std::vector<double> next_action(k);
        for (std::size_t d = 0; d < k; ++d) {
            const double eps = noise_rng_.normal();
            const double sigma = std::exp(policy.log_std[d]);
            const double u = policy.mean[d] + sigma * eps;
            const double t = std::tanh(u);
            next_action[d] = clamp_open_unit(t);
            logp += -policy.log_std[d] - kHalfLog2Pi - 0.5 * eps * eps;
            logp -= std::log(1.0 - t * t + kTanhEps);
        }
        const auto input = concat(tr.next_state, next_action);
        const double q1 = nn::forward(target1_, input)[0];
        const double q2 = nn::forward(target2_, input)[0];
        targets[i] = soft_target(tr.reward * params_.reward_scale, tr.done, params_.gamma,
                                 std::min(q1, q2), alpha_, logp);
    }

    UpdateLosses losses;
    losses.alpha = alpha_;

    {
        auto [loss1, grads1] = critic_loss_gradients(critic1_, batch, targets);
        nn::adam_step(critic1_, grads1, critic1_opt_);
        losses.critic1 = loss1;
        auto [loss2, grads2] = critic_loss_gradients(critic2_, batch, targets);
        nn::adam_step(critic2_, grads2, critic2_opt_);
        losses.critic2 = loss2;
    }

    // actor: ascend E[min(Q1, Q2)(s, a) - alpha * log pi(a|s)] through the
    // reparameterized sample a = tanh(mean + sigma * eps)
    nn::Gradients actor_grads = nn::Gradients::zeros_like(actor_);
    double actor_loss = 0.0;
    double mean_logp = 0.0;
    double mean_q = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        const Transition& tr = *batch[i];
        const PolicyEval policy = eval_policy(tr.state);
        std::vector<double> eps(k), u(k), act(k), sigma(k);
        double logp = 0.0;
        for (std::size_t d = 0; d < k; ++d) {
            eps[d] = noise_rng_.normal();
            sigma[d] = std::exp(policy.log_std[d]);
            u[d] = policy.mean[d] + sigma[d] * eps[d];
            const double t = std::tanh(u[d]);
            act[d] = clamp_open_unit(t);
            logp += -policy.log_std[d] - kHalfLog2Pi - 0.5 * eps[d] * eps[d];
            logp -= std::log(1.0 - t * t + kTanhEps);
        }

        const auto input = concat(tr.state, act);
        const auto trace1 = nn::forward_trace(critic1_, input);
        const auto trace2 = nn::forward_trace(critic2_, input);
        const double q1 = trace1.output()[0];
        const double q2 = trace2.output()[0];
        const bool use1 = q1 <= q2;
        const double min_q = use1 ? q1 : q2;

        const double upstream_q[1] = {1.0};
        const std::vector<double> dq_dinput =
            nn::input_gradient(use1 ? critic1_ : critic2_, use1 ? trace1 : trace2, upstream_q);

        // loss term L = alpha * logp - min_q, averaged over the batch
        std::vector<double> upstream(2 * k, 0.0);
        for (std::size_t d = 0; d < k; ++d) {
            const double t = std::tanh(u[d]);
            const double dtanh = 1.0 - t * t;
            const double dlogp_du = 2.0 * t * dtanh / (dtanh + kTanhEps);
            const double dq_da = dq_dinput[params_.obs_dim + d];
            const double dL_du = alpha_ * dlogp_du - dq_da * dtanh;
            upstream[d] = dL_du * inv;
            if (!policy.clamped[d]) {
                upstream[k + d] = (-alpha_ + dL_du * eps[d] * sigma[d]) * inv;
            }
        }
        nn::backward_accumulate(actor_, policy.trace, upstream, actor_grads);

        actor_loss += (alpha_ * logp - min_q) * inv;
        mean_logp += logp * inv;
        mean_q += min_q * inv;
    }
    nn::adam_step(actor_, actor_grads, actor_opt_);
    losses.actor = actor_loss;
    losses.mean_q = mean_q;

    if (params_.auto_alpha) {
        const double target_h =
            params_.target_entropy.value_or(-static_cast<double>(params_.action_dim));
        losses.alpha_loss = -log_alpha_ * (mean_logp + target_h);
        const double g = -(mean_logp + target_h);
        ++alpha_steps_;
        alpha_m_ = 0.9 * alpha_m_ + 0.1 * g;
        alpha_v_ = 0.999 * alpha_v_ + 0.001 * g * g;
        const double m_hat = alpha_m_ / (1.0 - std::pow(0.9, static_cast<double>(alpha_steps_)));
        const double v_hat = alpha_v_ / (1.0 - std::pow(0.999, static_cast<double>(alpha_steps_)));
        log_alpha_ -= params_.alpha_lr * m_hat / (std::sqrt(v_hat) + 1e-8);
        alpha_ = std::exp(log_alpha_);
        losses.alpha = alpha_;
    }

    soft_update_targets();
    ++update_count_;
    return losses;
}

void SacAgent::soft_update_targets() {
    const double tau = params_.tau;
    auto mix = [tau](nn::Mlp& target, const nn::Mlp& online) {
        for (std::size_t l = 0; l < online.layer_count(); ++l) {
            for (std::size_t i = 0; i < online.weights[l].size(); ++i) {
                target.weights[l][i] = tau * online.weights[l][i] + (1.0 - tau) * target.weights[l][i];
            }
            for (std::size_t i = 0; i < online.biases[l].size(); ++i) {
                target.biases[l][i] = tau * online.biases[l][i] + (1.0 - tau) * target.biases[l][i];
            }
        }
    };
    mix(target1_, critic1_);
    mix(target2_, critic2_);
}

json SacAgent::to_json(bool include_replay) const {
    json j;
    j["format_version"] = kCheckpointVersion;
    j["rng"] = std::string(Rng::kAlgorithmId);
    j["params"] = {{"obs_dim", params_.obs_dim},
                   {"action_dim", params_.action_dim},
                   {"hidden", params_.hidden},
                   {"actor_lr", params_.actor_lr},
                   {"critic_lr", params_.critic_lr},
                   {"replay_capacity", params_.replay_capacity},
                   {"tau", params_.tau},
                   {"gamma", params_.gamma},
                   {"batch_size", params_.batch_size},
                   {"alpha", params_.alpha},
                   {"auto_alpha", params_.auto_alpha},
                   {"alpha_lr", params_.alpha_lr},
                   {"total_train_steps", params_.total_train_steps},
                   {"warmup_steps", params_.warmup_steps},
                   {"update_every", params_.update_every},
                   {"reward_scale", params_.reward_scale}};
    if (params_.target_entropy) j["params"]["target_entropy"] = *params_.target_entropy;
    j["alpha"] = alpha_;
    j["log_alpha"] = log_alpha_;
    j["alpha_m"] = alpha_m_;
    j["alpha_v"] = alpha_v_;
    j["alpha_steps"] = alpha_steps_;
    j["update_count"] = update_count_;
    j["actor"] = mlp_to_json(actor_);
    j["critic1"] = mlp_to_json(critic1_);
    j["critic2"] = mlp_to_json(critic2_);
    j["target1"] = mlp_to_json(target1_);
    j["target2"] = mlp_to_json(target2_);
    j["adam_actor"] = adam_to_json(actor_opt_);
    j["adam_critic1"] = adam_to_json(critic1_opt_);
    j["adam_critic2"] = adam_to_json(critic2_opt_);
    j["noise_rng"] = noise_rng_.serialize();
    j["sample_rng"] = sample_rng_.serialize();
    if (include_replay) {
        json slots = json::array();
        for (std::size_t i = 0; i < buffer_.size(); ++i) {
            const Transition& t = buffer_.at(i);
            slots.push_back({{"s", t.state},
                             {"a", t.action},
                             {"r", t.reward},
                             {"ns", t.next_state},
                             {"d", t.done}});
        }
        j["replay"] = {{"size", buffer_.size()}, {"slots", std::move(slots)}};
    }
    return j;
}

SacAgent SacAgent::from_json(const json& j) {
    if (!j.contains("format_version") || j["format_version"].get<int>() != kCheckpointVersion) {
        throw ParseError("unsupported checkpoint format_version");
    }
    SacParams p;
    const json& jp = j.at("params");
    p.obs_dim = jp.at("obs_dim").get<std::size_t>();
    p.action_dim = jp.at("action_dim").get<std::size_t>();
    p.hidden = jp.at("hidden").get<std::vector<std::size_t>>();
    p.actor_lr = jp.at("actor_lr").get<double>();
    p.critic_lr = jp.at("critic_lr").get<double>();
    p.replay_capacity = jp.at("replay_capacity").get<std::size_t>();
    p.tau = jp.at("tau").get<double>();
    p.gamma = jp.at("gamma").get<double>();
    p.batch_size = jp.at("batch_size").get<std::size_t>();
    p.alpha = jp.at("alpha").get<double>();
    p.auto_alpha = jp.at("auto_alpha").get<bool>();
    p.alpha_lr = jp.at("alpha_lr").get<double>();
    if (jp.contains("target_entropy")) p.target_entropy = jp.at("target_entropy").get<double>();
    p.total_train_steps = jp.at("total_train_steps").get<std::size_t>();
    p.warmup_steps = jp.at("warmup_steps").get<std::size_t>();
    p.update_every = jp.at("update_every").get<std::size_t>();
    p.reward_scale = jp.at("reward_scale").get<double>();

    SacAgent agent(p, 0);
    agent.actor_ = mlp_from_json(j.at("actor"), actor_sizes(p), "actor");
    agent.critic1_ = mlp_from_json(j.at("critic1"), critic_sizes(p), "critic1");
    agent.critic2_ = mlp_from_json(j.at("critic2"), critic_sizes(p), "critic2");
    agent.target1_ = mlp_from_json(j.at("target1"), critic_sizes(p), "target1");
    agent.target2_ = mlp_from_json(j.at("target2"), critic_sizes(p), "target2");
    agent.actor_opt_ = adam_from_json(j.at("adam_actor"));
    agent.critic1_opt_ = adam_from_json(j.at("adam_critic1"));
    agent.critic2_opt_ = adam_from_json(j.at("adam_critic2"));
    agent.alpha_ = j.at("alpha").get<double>();
    agent.log_alpha_ = j.at("log_alpha").get<double>();
    agent.alpha_m_ = j.at("alpha_m").get<double>();
    agent.alpha_v_ = j.at("alpha_v").get<double>();
    agent.alpha_steps_ = j.at("alpha_steps").get<long>();
    agent.update_count_ = j.at("update_count").get<std::size_t>();
    agent.noise_rng_ = Rng::deserialize(j.at("noise_rng").get<std::string>());
    agent.sample_rng_ = Rng::deserialize(j.at("sample_rng").get<std::string>());
    if (j.contains("replay")) {
        for (const json& s : j.at("replay").at("slots")) {
            Transition t;
            t.state = s.at("s").get<std::vector<double>>();
            t.action = s.at("a").get<std::vector<double>>();
            t.reward = s.at("r").get<double>();
            t.next_state = s.at("ns").get<std::vector<double>>();
            t.done = s.at("d").get<bool>();
            agent.buffer_.store(std::move(t));
        }
    }
    return agent;
}

void SacAgent::save_checkpoint(const std::filesystem::path& path, bool include_replay) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open checkpoint for writing: " + path.string());
    out << to_json(include_replay).dump() << '\n';
    if (!out) throw ConfigError("checkpoint write failed: " + path.string());
}

SacAgent SacAgent::load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

bool SacAgent::same_parameters(const SacAgent& other) const {
    auto same_net = [](const nn::Mlp& a, const nn::Mlp& b) {
        return a.layer_sizes == b.layer_sizes && a.weights == b.weights && a.biases == b.biases;
    };
    return same_net(actor_, other.actor_) && same_net(critic1_, other.critic1_) &&
           same_net(critic2_, other.critic2_) && same_net(target1_, other.target1_) &&
           same_net(target2_, other.target2_) && alpha_ == other.alpha_ &&
           update_count_ == other.update_count_;
}

} // namespace mecswarm::sac
