#include "mecswarm/nn.hpp"

#include "mecswarm/errors.hpp"

#include <doctest.h>

#include <cmath>

using namespace mecswarm;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Finite-difference oracle for d(output . upstream)/d(parameter).
double fd_weight(nn::Mlp net, std::size_t layer, std::size_t idx, const std::vector<double>& input,
                 const std::vector<double>& upstream, double h = 1e-5) {
    net.weights[layer][idx] += h;
    const double plus = dot(nn::forward(net, input), upstream);
    net.weights[layer][idx] -= 2.0 * h;
    const double minus = dot(nn::forward(net, input), upstream);
    return (plus - minus) / (2.0 * h);
}

double fd_bias(nn::Mlp net, std::size_t layer, std::size_t idx, const std::vector<double>& input,
               const std::vector<double>& upstream, double h = 1e-5) {
    net.biases[layer][idx] += h;
    const double plus = dot(nn::forward(net, input), upstream);
    net.biases[layer][idx] -= 2.0 * h;
    const double minus = dot(nn::forward(net, input), upstream);
    return (plus - minus) / (2.0 * h);
}

bool close(double a, double b, double rel = 1e-4, double abs_floor = 1e-7) {
    return std::abs(a - b) <= abs_floor + rel * std::max(std::abs(a), std::abs(b));
}

} // namespace

TEST_CASE("forward basics") {
    Rng rng(1);
    nn::Mlp zero = nn::make_mlp({3, 4, 2}, rng);
    for (auto& w : zero.weights) std::fill(w.begin(), w.end(), 0.0);
    CHECK(nn::forward(zero, std::vector<double>{1.0, -2.0, 3.0}) == std::vector<double>{0.0, 0.0});

    nn::Mlp identity = nn::make_mlp({1, 1}, rng);
    identity.weights[0] = {1.0};
    identity.biases[0] = {0.0};
    CHECK(nn::forward(identity, std::vector<double>{3.5}) == std::vector<double>{3.5});

    // a rectifier unit driven negative emits zero
    nn::Mlp gate = nn::make_mlp({1, 1, 1}, rng);
    gate.weights[0] = {-1.0};
    gate.weights[1] = {5.0};
    gate.biases[0] = {0.0};
    gate.biases[1] = {0.25};
    CHECK(nn::forward(gate, std::vector<double>{2.0}) == std::vector<double>{0.25});

    CHECK_THROWS_AS(nn::forward(gate, std::vector<double>{1.0, 2.0}), ContractError);
}

TEST_CASE("backward matches central finite differences on random nets") {
    Rng rng(7);
    const std::vector<std::vector<std::size_t>> shapes = {
        {2, 3, 1}, {3, 5, 4, 2}, {1, 1}, {4, 8, 8, 3}, {6, 16, 16, 4}};
    for (int trial = 0; trial < 40; ++trial) {
        const auto& shape = shapes[static_cast<std::size_t>(trial) % shapes.size()];
        nn::Mlp net = nn::make_mlp(shape, rng);
        std::vector<double> input(shape.front());
        for (double& x : input) x = rng.uniform(-2.0, 2.0);
        std::vector<double> upstream(shape.back());
        for (double& u : upstream) u = rng.uniform(-1.5, 1.5);

        const auto trace = nn::forward_trace(net, input);
        const auto grads = nn::backward(net, trace, upstream);

        for (std::size_t l = 0; l < net.layer_count(); ++l) {
            for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
                CHECK(close(grads.weights[l][i], fd_weight(net, l, i, input, upstream)));
            }
            for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
                CHECK(close(grads.biases[l][i], fd_bias(net, l, i, input, upstream)));
            }
        }

        // input gradient against finite differences as well
        for (std::size_t i = 0; i < input.size(); ++i) {
            std::vector<double> shifted = input;
            shifted[i] += 1e-5;
            const double plus = dot(nn::forward(net, shifted), upstream);
            shifted[i] -= 2e-5;
            const double minus = dot(nn::forward(net, shifted), upstream);
            CHECK(close(grads.input[i], (plus - minus) / 2e-5));
        }
        CHECK(nn::input_gradient(net, trace, upstream) == grads.input);
    }
}

TEST_CASE("zero upstream gradient yields zero partials") {
    Rng rng(3);
    nn::Mlp net = nn::make_mlp({3, 6, 2}, rng);
    const std::vector<double> input{0.4, -0.2, 1.1};
    const auto grads = nn::backward(net, nn::forward_trace(net, input), std::vector<double>{0.0, 0.0});
    for (const auto& w : grads.weights)
        for (double g : w) CHECK(g == 0.0);
    for (const auto& b : grads.biases)
        for (double g : b) CHECK(g == 0.0);
}

TEST_CASE("linear net weight gradient is exactly the input") {
    Rng rng(4);
    nn::Mlp net = nn::make_mlp({1, 1}, rng);
    const std::vector<double> input{2.25};
    const auto grads = nn::backward(net, nn::forward_trace(net, input), std::vector<double>{1.0});
    CHECK(grads.weights[0][0] == 2.25);
    CHECK(grads.biases[0][0] == 1.0);
}

TEST_CASE("mse loss and gradient") {
    const auto [zero_loss, zero_grad] =
        nn::mse_loss(std::vector<double>{1.0, 2.0}, std::vector<double>{1.0, 2.0});
    CHECK(zero_loss == 0.0);
    CHECK(zero_grad == std::vector<double>{0.0, 0.0});

    const auto [loss, grad] = nn::mse_loss(std::vector<double>{1.0}, std::vector<double>{0.0});
    CHECK(loss == 1.0);
    CHECK(grad == std::vector<double>{2.0});

    // scaling residuals by k scales the loss by k^2
    const auto [base, g1] = nn::mse_loss(std::vector<double>{0.5, -1.0}, std::vector<double>{0.0, 0.0});
    const auto [scaled, g2] = nn::mse_loss(std::vector<double>{1.5, -3.0}, std::vector<double>{0.0, 0.0});
    CHECK(scaled == doctest::Approx(9.0 * base).epsilon(1e-12));

    CHECK_THROWS_AS(nn::mse_loss(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}),
                    ContractError);
}

TEST_CASE("adam step behaviour") {
    Rng rng(5);

    SUBCASE("zero gradients leave parameters untouched") {
        nn::Mlp net = nn::make_mlp({2, 3, 1}, rng);
        const nn::Mlp before = net;
        auto adam = nn::make_adam(net, 1e-3);
        nn::adam_step(net, nn::Gradients::zeros_like(net), adam);
        CHECK(adam.step_count == 1);
        CHECK(net.weights == before.weights);
        CHECK(net.biases == before.biases);
    }

    SUBCASE("first step matches the hand-computed scalar update") {
        nn::Mlp net = nn::make_mlp({1, 1}, rng);
        net.weights[0] = {1.0};
        net.biases[0] = {0.0};
        auto adam = nn::make_adam(net, 1e-3);
        nn::Gradients g = nn::Gradients::zeros_like(net);
        g.weights[0][0] = 0.5;
        nn::adam_step(net, g, adam);
        // m=0.05, v=2.5e-4, m_hat=0.5, v_hat=0.25 -> step = lr * 0.5/(0.5 + 1e-8)
        CHECK(net.weights[0][0] ==
              doctest::Approx(1.0 - 1e-3 * 0.5 / (0.5 + 1e-8)).epsilon(1e-15));
        CHECK(net.biases[0][0] == 0.0);
    }

    SUBCASE("identical states give identical results") {
        nn::Mlp net1 = nn::make_mlp({2, 4, 2}, rng);
        nn::Mlp net2 = net1;
        auto a1 = nn::make_adam(net1, 3e-4);
        auto a2 = nn::make_adam(net2, 3e-4);
        nn::Gradients g = nn::Gradients::zeros_like(net1);
        for (auto& w : g.weights)
            for (double& x : w) x = 0.123;
        nn::adam_step(net1, g, a1);
        nn::adam_step(net2, g, a2);
        CHECK(net1.weights == net2.weights);
        CHECK(net1.biases == net2.biases);
    }

    SUBCASE("non-finite gradients are rejected before any change") {
        nn::Mlp net = nn::make_mlp({1, 1}, rng);
        const nn::Mlp before = net;
        auto adam = nn::make_adam(net, 1e-3);
        nn::Gradients g = nn::Gradients::zeros_like(net);
        g.weights[0][0] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(nn::adam_step(net, g, adam), NumericError);
        CHECK(net.weights == before.weights);
        CHECK(adam.step_count == 0);
    }
}

TEST_CASE("non-finite activations raise an error naming the layer") {
    Rng rng(6);
    nn::Mlp net = nn::make_mlp({1, 2, 1}, rng);
    net.weights[0][0] = std::numeric_limits<double>::infinity();
    try {
        nn::forward(net, std::vector<double>{1.0});
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
    }
}
