#pragma once

#include "mecswarm/rng.hpp"

#include <span>
#include <utility>
#include <vector>

namespace mecswarm::nn {

/// Dense multilayer perceptron: rectifier hidden units, identity output.
/// weights[l] is (layer_sizes[l+1] x layer_sizes[l]) row-major.
struct Mlp {
    std::vector<std::size_t> layer_sizes;
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return weights.size(); }
    std::size_t parameter_count() const;
};

/// Seeded uniform fan-in initialization; `final_layer_scale` shrinks the last
/// layer (used for near-zero initial policy outputs).
Mlp make_mlp(const std::vector<std::size_t>& layer_sizes, Rng& rng, double final_layer_scale = 1.0);

/// Post-activation values per layer; activations[0] is the input and the
/// last entry is the network output.
struct ForwardTrace {
    std::vector<std::vector<double>> activations;

    const std::vector<double>& output() const { return activations.back(); }
};

std::vector<double> forward(const Mlp& net, std::span<const double> input);
ForwardTrace forward_trace(const Mlp& net, std::span<const double> input);

/// Partials of output . upstream with respect to every parameter, plus the
/// input gradient (needed to steer an actor through a critic).
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<double> input;

    static Gradients zeros_like(const Mlp& net);
    void scale(double factor);
};

Gradients backward(const Mlp& net, const ForwardTrace& trace, std::span<const double> upstream);

/// Accumulating form for batches: adds this sample's parameter partials into
/// `into` (input gradient is overwritten, callers rarely need it per-sample).
void backward_accumulate(const Mlp& net, const ForwardTrace& trace, std::span<const double> upstream,
                         Gradients& into);

/// Input gradient only; skips parameter partials.
std::vector<double> input_gradient(const Mlp& net, const ForwardTrace& trace,
                                   std::span<const double> upstream);

/// Mean squared error and its gradient 2 (pred - target) / len.
std::pair<double, std::vector<double>> mse_loss(std::span<const double> pred,
                                                std::span<const double> target);

struct AdamState {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step_count = 0;
    std::vector<std::vector<double>> m_weights, v_weights, m_biases, v_biases;
};

AdamState make_adam(const Mlp& net, double learning_rate);

/// Bias-corrected Adam update in place. Rejects non-finite gradients with
/// NumericError before touching any parameter.
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

} // namespace mecswarm::nn
