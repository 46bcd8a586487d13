#pragma once

#include "mecswarm/controller.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mecswarm::harness {

/// Shortest decimal round-trip representation; the one float formatter used
/// for every emitted file, so regenerated outputs are byte-identical.
std::string format_double(double value);

struct ExperimentConfig {
    EnvConfig env;
    std::vector<std::string> methods = {"pso", "apso"};
    Weights weights;
    FeasibilityMode mode = FeasibilityMode::penalty();
    std::size_t runs = 10;
    std::uint64_t master_seed = 42;
    bool resample_env_per_run = false;
    std::string checkpoint;                 // required when methods include apsosac
    std::filesystem::path output_dir = "out";
    pso::PsoParams pso_params;
    apso::ApsoParams apso_params;
    ctrl::ControllerParams controller_params;
    double mb_to_mbit = kMbToMbit;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
void apply_json(ExperimentConfig& cfg, const nlohmann::json& j); // partial overrides allowed
ExperimentConfig load_config(const std::filesystem::path& path);

struct PairedStats {
    std::size_t n_pairs = 0;     // nonzero differences
    double mean_diff = 0.0;      // mean(a - b) over all pairs
    double sign_test_p = 1.0;     // exact two-sided binomial
    double wilcoxon_w = 0.0;      // min of the signed-rank sums
};

/// Paired statistics for per-seed cost lists. Requires equal lengths >= 5.
PairedStats paired_stats(std::span<const double> a, std::span<const double> b);

struct MethodSummary {
    std::string method;
    double mean_cost = 0.0;
    double std_cost = 0.0;
    double mean_wall_time = 0.0;
    double improvement_vs_pso_pct = 0.0; // (pso_mean - mean) / pso_mean * 100
    bool has_improvement = false;        // false when pso itself is absent
};

struct PairedComparison {
    std::string method_a;
    std::string method_b;
    PairedStats stats;
    double pct_improvement_of_b = 0.0; // (mean_a - mean_b) / mean_a * 100
};

struct CurveStats {
    std::string method;
    std::vector<double> mean, min, max; // per iteration, across runs
};

struct ComparisonReport {
    ExperimentConfig config;
    ctrl::EvaluationResult raw;
    std::vector<MethodSummary> methods;
    std::vector<PairedComparison> pairs;
    std::vector<CurveStats> curves;
};

ComparisonReport build_report(const ExperimentConfig& cfg, const ctrl::EvaluationResult& raw);

/// Runs the configured methods with paired seeds and builds the report.
/// Loads the checkpoint when apsosac is requested.
ComparisonReport run_bench(const ExperimentConfig& cfg);

/// Writes summary.json, summary.csv, curves/<method>.csv, curves.svg, and
/// config_resolved.json into `dir`.
void emit_report(const ComparisonReport& report, const std::filesystem::path& dir);

} // namespace mecswarm::harness
