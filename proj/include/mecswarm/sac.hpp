#pragma once

#include "mecswarm/nn.hpp"
#include "mecswarm/rng.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace mecswarm::sac {

struct SacParams {
    std::size_t obs_dim = 6;
    std::size_t action_dim = 2;
    std::vector<std::size_t> hidden = {256, 256};
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    std::size_t replay_capacity = 1'000'000;
    double tau = 5e-3;     // target soft-update rate
    double gamma = 0.99;   // discount
    std::size_t batch_size = 256;
    double alpha = 0.2;    // entropy coefficient
    bool auto_alpha = false;
    double alpha_lr = 3e-4;
    std::optional<double> target_entropy; // default: -action_dim
    std::size_t total_train_steps = 1'000'000;
    std::size_t warmup_steps = 1'000; // uniform-random actions before learning
    std::size_t update_every = 1;     // environment steps per gradient step
    double reward_scale = 1.0;        // applied inside updates only
};

void validate(const SacParams& params);

struct Transition {
    std::vector<double> state;
    std::vector<double> action; // squashed, components in (-1, 1)
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
};

/// Ring buffer with FIFO eviction and uniform with-replacement sampling.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    void store(Transition t);
    std::vector<const Transition*> sample(std::size_t batch_size, Rng& rng) const;

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t slot) const { return slots_[slot]; }

private:
    std::size_t capacity_;
    std::size_t size_ = 0;
    std::size_t cursor_ = 0;
    std::vector<Transition> slots_;
};

/// Bootstrapped critic regression target:
/// y = r + gamma * (1 - done) * (min_target_q - alpha * log_prob).
inline double soft_target(double reward, bool done, double gamma, double min_target_q, double alpha,
                          double log_prob) {
    return reward + gamma * (done ? 0.0 : 1.0) * (min_target_q - alpha * log_prob);
}

/// Mean squared regression of critic(s, a) onto fixed targets over a batch,
/// with parameter gradients; the critic half of update(), exposed so the
/// assembled loss gradient can be checked against finite differences.
std::pair<double, nn::Gradients> critic_loss_gradients(const nn::Mlp& critic,
                                                       std::span<const Transition* const> batch,
                                                       std::span<const double> targets);

struct UpdateLosses {
    double critic1 = 0.0;
    double critic2 = 0.0;
    double actor = 0.0;
    double alpha_loss = 0.0;
    double alpha = 0.0;
    double mean_q = 0.0;
};

/// Soft actor-critic over continuous [-1, 1]^k actions: tanh-squashed
/// Gaussian policy, twin critics with the clipped double-Q target, soft
/// target updates, and optional entropy-coefficient tuning.
class SacAgent {
public:
    SacAgent(SacParams params, std::uint64_t seed);

    /// Squashed policy action; stochastic unless `deterministic`. Every
    /// component is strictly inside (-1, 1).
    std::vector<double> select_action(std::span<const double> state, bool deterministic, Rng& rng) const;

    /// Convenience overload on the agent's own exploration stream.
    std::vector<double> select_action(std::span<const double> state, bool deterministic);

    /// Uniform action in [-1, 1]^k from the exploration stream (warmup).
    std::vector<double> uniform_action();

    /// Log-density of the squashed policy at the given pre-squash action.
    double log_prob(std::span<const double> state, std::span<const double> action_pre_tanh) const;

    void store(Transition t) { buffer_.store(std::move(t)); }

    /// One gradient step on a uniformly sampled batch; throws ContractError
    /// when the buffer holds fewer than batch_size transitions.
    UpdateLosses update();

    /// Same update on a caller-supplied batch (testing seam).
    UpdateLosses update(std::span<const Transition* const> batch);

    void save_checkpoint(const std::filesystem::path& path, bool include_replay = false) const;
    static SacAgent load_checkpoint(const std::filesystem::path& path);

    nlohmann::json to_json(bool include_replay) const;
    static SacAgent from_json(const nlohmann::json& j);

    const SacParams& params() const { return params_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    ReplayBuffer& buffer() { return buffer_; }
    double alpha() const { return alpha_; }
    std::size_t update_count() const { return update_count_; }
    const nn::Mlp& actor() const { return actor_; }
    const nn::Mlp& critic1() const { return critic1_; }
    const nn::Mlp& critic2() const { return critic2_; }
    const nn::Mlp& target1() const { return target1_; }
    const nn::Mlp& target2() const { return target2_; }

    bool same_parameters(const SacAgent& other) const;

private:
    struct PolicyEval; // mean/log-std split of an actor pass

    PolicyEval eval_policy(std::span<const double> state) const;
    void soft_update_targets();

    SacParams params_;
    nn::Mlp actor_, critic1_, critic2_, target1_, target2_;
    nn::AdamState actor_opt_, critic1_opt_, critic2_opt_;
    double alpha_ = 0.2;
    double log_alpha_ = 0.0;
    double alpha_m_ = 0.0, alpha_v_ = 0.0; // Adam accumulators for log_alpha
    long alpha_steps_ = 0;
    std::size_t update_count_ = 0;
    ReplayBuffer buffer_;
    Rng noise_rng_;
    Rng sample_rng_;
};

} // namespace mecswarm::sac
