#include "mecswarm/nn.hpp"

#include "mecswarm/errors.hpp"

#include <cmath>
#include <string>

namespace mecswarm::nn {

namespace {

void check_finite(const std::vector<double>& values, const char* what, std::size_t layer) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite ") + what + " in layer " +
                               std::to_string(layer));
        }
    }
}

void check_input_size(const Mlp& net, std::size_t got) {
    if (got != net.input_size()) {
        throw ContractError("input length " + std::to_string(got) + " does not match layer size " +
                            std::to_string(net.input_size()));
    }
}

} // namespace

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

Mlp make_mlp(const std::vector<std::size_t>& layer_sizes, Rng& rng, double final_layer_scale) {
    if (layer_sizes.size() < 2) throw ConfigError("an MLP needs at least input and output layers");
    Mlp net;
    net.layer_sizes = layer_sizes;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const std::size_t fan_in = layer_sizes[l];
        const std::size_t fan_out = layer_sizes[l + 1];
        double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        if (l + 2 == layer_sizes.size()) bound *= final_layer_scale;
        std::vector<double> w(fan_out * fan_in);
        for (double& x : w) x = rng.uniform(-bound, bound);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    return net;
}

ForwardTrace forward_trace(const Mlp& net, std::span<const double> input) {
    check_input_size(net, input.size());
    ForwardTrace trace;
    trace.activations.reserve(net.layer_count() + 1);
    trace.activations.emplace_back(input.begin(), input.end());
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const std::vector<double>& prev = trace.activations.back();
        const std::size_t out_n = net.layer_sizes[l + 1];
        const std::size_t in_n = net.layer_sizes[l];
        std::vector<double> next(out_n);
        const double* w = net.weights[l].data();
        const bool hidden = l + 1 < net.layer_count();
        for (std::size_t o = 0; o < out_n; ++o) {
            double acc = net.biases[l][o];
            const double* row = w + o * in_n;
            for (std::size_t i = 0; i < in_n; ++i) acc += row[i] * prev[i];
            next[o] = hidden ? std::max(0.0, acc) : acc;
        }
        check_finite(next, "activation", l);
        trace.activations.push_back(std::move(next));
    }
    return trace;
}

std::vector<double> forward(const Mlp& net, std::span<const double> input) {
    return forward_trace(net, input).activations.back();
}

Gradients Gradients::zeros_like(const Mlp& net) {
    Gradients g;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        g.weights.emplace_back(net.weights[l].size(), 0.0);
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    g.input.assign(net.input_size(), 0.0);
    return g;
}

void Gradients::scale(double factor) {
    for (auto& w : weights)
        for (double& x : w) x *= factor;
    for (auto& b : biases)
        for (double& x : b) x *= factor;
    for (double& x : input) x *= factor;
}

void backward_accumulate(const Mlp& net, const ForwardTrace& trace, std::span<const double> upstream,
                         Gradients& into) {
    const std::size_t layers = net.layer_count();
    if (upstream.size() != net.output_size()) {
        throw ContractError("upstream gradient length does not match the output layer");
    }

    std::vector<double> delta(upstream.begin(), upstream.end());
    for (std::size_t l = layers; l-- > 0;) {
        const std::vector<double>& prev = trace.activations[l];
        const std::size_t out_n = net.layer_sizes[l + 1];
        const std::size_t in_n = net.layer_sizes[l];
        const double* w = net.weights[l].data();

        check_finite(delta, "gradient", l);
        double* gw = into.weights[l].data();
        for (std::size_t o = 0; o < out_n; ++o) {
            const double d = delta[o];
            into.biases[l][o] += d;
            double* grow = gw + o * in_n;
            for (std::size_t i = 0; i < in_n; ++i) grow[i] += d * prev[i];
        }

        std::vector<double> prev_delta(in_n, 0.0);
        for (std::size_t o = 0; o < out_n; ++o) {
            const double d = delta[o];
            const double* row = w + o * in_n;
            for (std::size_t i = 0; i < in_n; ++i) prev_delta[i] += d * row[i];
        }
        if (l > 0) {
            // rectifier gate: positive activation means the unit was live
            for (std::size_t i = 0; i < in_n; ++i) {
                if (prev[i] <= 0.0) prev_delta[i] = 0.0;
            }
        }
        delta = std::move(prev_delta);
    }
    into.input = std::move(delta);
}

Gradients backward(const Mlp& net, const ForwardTrace& trace, std::span<const double> upstream) {
    Gradients g = Gradients::zeros_like(net);
    backward_accumulate(net, trace, upstream, g);
    return g;
}

std::vector<double> input_gradient(const Mlp& net, const ForwardTrace& trace,
                                   std::span<const double> upstream) {
    const std::size_t layers = net.layer_count();
    if (upstream.size() != net.output_size()) {
        throw ContractError("upstream gradient length does not match the output layer");
    }
    std::vector<double> delta(upstream.begin(), upstream.end());
    for (std::size_t l = layers; l-- > 0;) {
        const std::vector<double>& prev = trace.activations[l];
        const std::size_t out_n = net.layer_sizes[l + 1];
        const std::size_t in_n = net.layer_sizes[l];
        const double* w = net.weights[l].data();
        std::vector<double> prev_delta(in_n, 0.0);
        for (std::size_t o = 0; o < out_n; ++o) {
            const double d = delta[o];
            const double* row = w + o * in_n;
            for (std::size_t i = 0; i < in_n; ++i) prev_delta[i] += d * row[i];
        }
        if (l > 0) {
            for (std::size_t i = 0; i < in_n; ++i) {
                if (prev[i] <= 0.0) prev_delta[i] = 0.0;
            }
        }
        delta = std::move(prev_delta);
    }
    return delta;
}

std::pair<double, std::vector<double>> mse_loss(std::span<const double> pred,
                                                std::span<const double> target) {
    if (pred.size() != target.size()) throw ContractError("mse_loss length mismatch");
    const double inv = pred.empty() ? 0.0 : 1.0 / static_cast<double>(pred.size());
    double loss = 0.0;
    std::vector<double> grad(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double r = pred[i] - target[i];
        loss += r * r * inv;
        grad[i] = 2.0 * r * inv;
    }
    return {loss, std::move(grad)};
}

AdamState make_adam(const Mlp& net, double learning_rate) {
    AdamState s;
    s.learning_rate = learning_rate;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        s.m_weights.emplace_back(net.weights[l].size(), 0.0);
        s.v_weights.emplace_back(net.weights[l].size(), 0.0);
        s.m_biases.emplace_back(net.biases[l].size(), 0.0);
        s.v_biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(std::vector<double>& params, const std::vector<double>& grads,
                 std::vector<double>& m, std::vector<double>& v, const AdamState& s, double bc1,
                 double bc2) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * grads[i];
        v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * grads[i] * grads[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= s.learning_rate * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
}

} // namespace

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        check_finite(grads.weights[l], "weight gradient", l);
        check_finite(grads.biases[l], "bias gradient", l);
    }
    ++state.step_count;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        adam_update(net.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l], state,
                    bc1, bc2);
        adam_update(net.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l], state, bc1,
                    bc2);
    }
}

} // namespace mecswarm::nn
