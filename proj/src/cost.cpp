#include "mecswarm/cost.hpp"

#include "mecswarm/errors.hpp"

#include <cmath>
#include <string>

namespace mecswarm {

namespace {

// Per-device term of the objective: m*C + n*T, plus the flat penalty when
// the device is infeasible under Penalty mode. total_cost and CostEvaluator
// both sum these terms in device order, so their results are bit-identical.
double device_term(const Device& d, const Server& s, const Weights& w, const FeasibilityMode& mode,
                   double mb_to_mbit, double* time_out, double* cost_out, bool* feasible_out) {
    const double t = device_time(d, s, mb_to_mbit);
    const bool feasible = d.ram_req_gb <= s.ram_gb;
    const double c = feasible ? s.cost_rate * t : 0.0;
    if (time_out) *time_out = t;
    if (cost_out) *cost_out = c;
    if (feasible_out) *feasible_out = feasible;
    double term = w.m * c + w.n * t;
    if (!feasible && mode.kind == FeasibilityMode::Kind::Penalty) {
        term += mode.penalty_per_violation;
    }
    return term;
}

void check_assignment(const Environment& env, const Assignment& a) {
    if (a.server_of.size() != env.devices.size()) {
        throw ContractError("assignment length " + std::to_string(a.server_of.size()) +
                            " does not match device count " + std::to_string(env.devices.size()));
    }
    for (std::size_t j = 0; j < a.server_of.size(); ++j) {
        const std::int32_t s = a.server_of[j];
        if (s < 0 || static_cast<std::size_t>(s) >= env.servers.size()) {
            throw ContractError("assignment[" + std::to_string(j) + "] = " + std::to_string(s) +
                                " out of range for " + std::to_string(env.servers.size()) +
                                " servers");
        }
    }
}

} // namespace

double device_time(const Device& device, const Server& server, double mb_to_mbit) {
    if (!(device.network_speed_mbps > 0.0)) {
        throw NumericError("device network speed must be positive");
    }
    if (!(server.speed_mips > 0.0)) {
        throw NumericError("server speed must be positive");
    }
    return device.data_size_mb * mb_to_mbit / device.network_speed_mbps +
           device.completion_req_mi / server.speed_mips;
}

double device_comp_cost(const Device& device, const Server& server, const FeasibilityMode& mode,
                        double mb_to_mbit) {
    double cost = 0.0;
    device_term(device, server, Weights{1.0, 0.0}, mode, mb_to_mbit, nullptr, &cost, nullptr);
    return cost;
}

CostBreakdown total_cost(const Environment& env, const Assignment& assignment, const Weights& weights,
                         const FeasibilityMode& mode, double mb_to_mbit) {
    check_assignment(env, assignment);
    CostBreakdown out;
    out.per_device_time.reserve(env.devices.size());
    out.per_device_cost.reserve(env.devices.size());
    for (std::size_t j = 0; j < env.devices.size(); ++j) {
        const Server& s = env.servers[static_cast<std::size_t>(assignment.server_of[j])];
        double t = 0.0, c = 0.0;
        bool feasible = true;
        out.total += device_term(env.devices[j], s, weights, mode, mb_to_mbit, &t, &c, &feasible);
        out.per_device_time.push_back(t);
        out.per_device_cost.push_back(c);
        if (!feasible) ++out.infeasible_count;
    }
    return out;
}

CostEvaluator::CostEvaluator(const Environment& env, Weights weights, FeasibilityMode mode,
                             double mb_to_mbit)
    : n_devices_(env.devices.size()), n_servers_(env.servers.size()) {
    contribution_.resize(n_devices_ * n_servers_);
    for (std::size_t j = 0; j < n_devices_; ++j) {
        for (std::size_t s = 0; s < n_servers_; ++s) {
            contribution_[j * n_servers_ + s] = device_term(
                env.devices[j], env.servers[s], weights, mode, mb_to_mbit, nullptr, nullptr, nullptr);
        }
    }
}

double CostEvaluator::operator()(const Assignment& assignment) const {
    if (assignment.server_of.size() != n_devices_) {
        throw ContractError("assignment length does not match evaluator");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n_devices_; ++j) {
        const auto s = static_cast<std::size_t>(assignment.server_of[j]);
        total += contribution_[j * n_servers_ + s];
    }
    return total;
}

std::pair<Assignment, double> brute_force_optimum(const Environment& env, const Weights& weights,
                                                  const FeasibilityMode& mode, std::uint64_t cap,
                                                  double mb_to_mbit) {
    const std::size_t n = env.devices.size();
    const std::size_t k = env.servers.size();
    if (n > 0 && k == 0) throw ConfigError("no servers to assign");

    // Refuse instances beyond the cap; never fall back to sampling.
    double log_count = static_cast<double>(n) * std::log(static_cast<double>(std::max<std::size_t>(k, 1)));
    if (log_count > std::log(static_cast<double>(cap)) + 1e-9) {
        throw ConfigError("instance too large for exhaustive search: " + std::to_string(k) + "^" +
                          std::to_string(n) + " exceeds cap " + std::to_string(cap));
    }

    const CostEvaluator evaluate(env, weights, mode, mb_to_mbit);
    Assignment current;
    current.server_of.assign(n, 0);
    Assignment best = current;
    double best_cost = evaluate(current);

    // Odometer enumeration in ascending lexicographic order; strict
    // improvement keeps the lexicographically smallest minimizer.
    while (true) {
        std::size_t d = n;
        while (d > 0) {
            --d;
            if (static_cast<std::size_t>(current.server_of[d]) + 1 < k) {
                ++current.server_of[d];
                for (std::size_t e = d + 1; e < n; ++e) current.server_of[e] = 0;
                break;
            }
            if (d == 0) return {best, best_cost};
        }
        if (n == 0) return {best, best_cost};
        const double c = evaluate(current);
        if (c < best_cost) {
            best_cost = c;
            best = current;
        }
    }
}

} // namespace mecswarm
