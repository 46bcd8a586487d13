#pragma once

#include "mecswarm/env.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace mecswarm {

/// Device -> server mapping; server_of[j] is the server index for device j.
struct Assignment {
    std::vector<std::int32_t> server_of;

    bool operator==(const Assignment&) const = default;
};

/// Objective weights: m scales computational cost, n scales latency.
struct Weights {
    double m = 10.0;
    double n = 0.01;
};

/// Handling of devices whose RAM requirement exceeds the assigned server.
/// Literal keeps the zero-cost rule for such devices, which means making a
/// device infeasible can never raise the total; Penalty instead adds a flat
/// charge per violation so infeasibility never pays off. Penalty is the
/// default.
struct FeasibilityMode {
    enum class Kind { Literal, Penalty };

    Kind kind = Kind::Penalty;
    double penalty_per_violation = 1000.0;

    static FeasibilityMode literal() { return {Kind::Literal, 0.0}; }
    static FeasibilityMode penalty(double per_violation = 1000.0) {
        return {Kind::Penalty, per_violation};
    }
};

/// Megabyte payloads over megabit-per-second links. Pass 1.0 instead to
/// reproduce the unit-free division used by models that ignore the factor.
inline constexpr double kMbToMbit = 8.0;

struct CostBreakdown {
    double total = 0.0;
    std::vector<double> per_device_time; // T_j, seconds
    std::vector<double> per_device_cost; // C_j, currency
    std::size_t infeasible_count = 0;
};

/// Transfer plus processing time, seconds. Throws NumericError on a
/// non-positive network or server speed.
double device_time(const Device& device, const Server& server, double mb_to_mbit = kMbToMbit);

/// Metered server cost for one device: cost_rate x time when the server has
/// the RAM, zero otherwise (the penalty, if any, is applied at total level).
double device_comp_cost(const Device& device, const Server& server, const FeasibilityMode& mode,
                        double mb_to_mbit = kMbToMbit);

/// Weighted fleet objective: sum over devices of m*C_j + n*T_j, plus
/// penalty_per_violation per infeasible device in Penalty mode. Pure;
/// throws ContractError when the assignment does not match the environment.
CostBreakdown total_cost(const Environment& env, const Assignment& assignment, const Weights& weights,
                         const FeasibilityMode& mode, double mb_to_mbit = kMbToMbit);

/// Precomputed per-device/per-server contribution table for optimizer inner
/// loops. operator() returns exactly the total that total_cost would report.
class CostEvaluator {
public:
    CostEvaluator(const Environment& env, Weights weights, FeasibilityMode mode,
                  double mb_to_mbit = kMbToMbit);

    double operator()(const Assignment& assignment) const;

    std::size_t n_devices() const { return n_devices_; }
    std::size_t n_servers() const { return n_servers_; }

private:
    std::size_t n_devices_ = 0;
    std::size_t n_servers_ = 0;
    std::vector<double> contribution_; // [device * n_servers + server]
};

/// Exhaustive minimizer over all n_servers^n_devices assignments, ties broken
/// by the lexicographically smallest assignment. Refuses instances whose
/// enumeration would exceed `cap` evaluations.
std::pair<Assignment, double> brute_force_optimum(const Environment& env, const Weights& weights,
                                                  const FeasibilityMode& mode,
                                                  std::uint64_t cap = 1'000'000,
                                                  double mb_to_mbit = kMbToMbit);

} // namespace mecswarm
