#include "mecswarm/harness.hpp"

#include "mecswarm/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>

namespace mecswarm::harness {

using nlohmann::json;

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

json to_json(const ExperimentConfig& cfg) {
    const auto range = [](const Interval& r) { return json::array({r.lo, r.hi}); };
    return json{
        {"devices", cfg.env.n_devices},
        {"servers", cfg.env.n_servers},
        {"env_seed", cfg.env.seed},
        {"ranges",
         {{"data_size", range(cfg.env.ranges.data_size)},
          {"completion_req", range(cfg.env.ranges.completion_req)},
          {"ram_req", range(cfg.env.ranges.ram_req)},
          {"network_speed", range(cfg.env.ranges.network_speed)},
          {"server_speed", range(cfg.env.ranges.server_speed)},
          {"server_cost", range(cfg.env.ranges.server_cost)},
          {"server_ram", range(cfg.env.ranges.server_ram)}}},
        {"methods", cfg.methods},
        {"weights", {{"m", cfg.weights.m}, {"n", cfg.weights.n}}},
        {"feasibility", cfg.mode.kind == FeasibilityMode::Kind::Penalty ? "penalty" : "literal"},
        {"penalty_per_violation", cfg.mode.penalty_per_violation},
        {"runs", cfg.runs},
        {"seed", cfg.master_seed},
        {"resample_env_per_run", cfg.resample_env_per_run},
        {"checkpoint", cfg.checkpoint},
        {"output_dir", cfg.output_dir.string()},
        {"mb_to_mbit", cfg.mb_to_mbit},
        {"pso",
         {{"inertia", cfg.pso_params.inertia},
          {"c1", cfg.pso_params.c1},
          {"c2", cfg.pso_params.c2},
          {"particles", cfg.pso_params.n_particles},
          {"iters", cfg.pso_params.max_iters},
          {"u_low", cfg.pso_params.u_low},
          {"u_high", cfg.pso_params.u_high},
          {"v_max", cfg.pso_params.v_max},
          {"scalar_draws", cfg.pso_params.scalar_draws}}},
        {"apso",
         {{"c_min", cfg.apso_params.c_min},
          {"c_max", cfg.apso_params.c_max},
          {"c_sum_max", cfg.apso_params.c_sum_max},
          {"delta", range(cfg.apso_params.delta_range)},
          {"coefficient_adaptation", cfg.apso_params.coefficient_adaptation},
          {"inertia_adaptation", cfg.apso_params.inertia_adaptation},
          {"els", cfg.apso_params.els_enabled},
          {"els_sigma", range(cfg.apso_params.els_sigma_range)}}},
        {"controller",
         {{"c_min", cfg.controller_params.mapping.c_min},
          {"c_max", cfg.controller_params.mapping.c_max},
          {"control_inertia", cfg.controller_params.control_inertia}}}};
}

namespace {

Interval range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

} // namespace

void apply_json(ExperimentConfig& cfg, const json& j) {
    if (j.contains("devices")) cfg.env.n_devices = j["devices"].get<std::size_t>();
    if (j.contains("servers")) cfg.env.n_servers = j["servers"].get<std::size_t>();
    if (j.contains("env_seed")) cfg.env.seed = j["env_seed"].get<std::uint64_t>();
    if (j.contains("ranges")) {
        const json& r = j["ranges"];
        if (r.contains("data_size")) cfg.env.ranges.data_size = range_from(r["data_size"]);
        if (r.contains("completion_req")) cfg.env.ranges.completion_req = range_from(r["completion_req"]);
        if (r.contains("ram_req")) cfg.env.ranges.ram_req = range_from(r["ram_req"]);
        if (r.contains("network_speed")) cfg.env.ranges.network_speed = range_from(r["network_speed"]);
        if (r.contains("server_speed")) cfg.env.ranges.server_speed = range_from(r["server_speed"]);
        if (r.contains("server_cost")) cfg.env.ranges.server_cost = range_from(r["server_cost"]);
        if (r.contains("server_ram")) cfg.env.ranges.server_ram = range_from(r["server_ram"]);
    }
    if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
    if (j.contains("weights")) {
        if (j["weights"].contains("m")) cfg.weights.m = j["weights"]["m"].get<double>();
        if (j["weights"].contains("n")) cfg.weights.n = j["weights"]["n"].get<double>();
    }
    if (j.contains("feasibility")) {
        const std::string kind = j["feasibility"].get<std::string>();
        if (kind == "penalty") {
            cfg.mode.kind = FeasibilityMode::Kind::Penalty;
        } else if (kind == "literal") {
            cfg.mode.kind = FeasibilityMode::Kind::Literal;
        } else {
            throw ConfigError("feasibility must be 'penalty' or 'literal'");
        }
    }
    if (j.contains("penalty_per_violation")) {
        cfg.mode.penalty_per_violation = j["penalty_per_violation"].get<double>();
    }
    if (j.contains("runs")) cfg.runs = j["runs"].get<std::size_t>();
    if (j.contains("seed")) cfg.master_seed = j["seed"].get<std::uint64_t>();
    if (j.contains("resample_env_per_run")) {
        cfg.resample_env_per_run = j["resample_env_per_run"].get<bool>();
    }
    if (j.contains("checkpoint")) cfg.checkpoint = j["checkpoint"].get<std::string>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("mb_to_mbit")) cfg.mb_to_mbit = j["mb_to_mbit"].get<double>();
    if (j.contains("pso")) {
        const json& p = j["pso"];
        if (p.contains("inertia")) cfg.pso_params.inertia = p["inertia"].get<double>();
        if (p.contains("c1")) cfg.pso_params.c1 = p["c1"].get<double>();
        if (p.contains("c2")) cfg.pso_params.c2 = p["c2"].get<double>();
        if (p.contains("particles")) cfg.pso_params.n_particles = p["particles"].get<int>();
        if (p.contains("iters")) cfg.pso_params.max_iters = p["iters"].get<int>();
        if (p.contains("u_low")) cfg.pso_params.u_low = p["u_low"].get<double>();
        if (p.contains("u_high")) cfg.pso_params.u_high = p["u_high"].get<double>();
        if (p.contains("v_max")) cfg.pso_params.v_max = p["v_max"].get<double>();
        if (p.contains("scalar_draws")) cfg.pso_params.scalar_draws = p["scalar_draws"].get<bool>();
    }
    if (j.contains("apso")) {
        const json& a = j["apso"];
        if (a.contains("c_min")) cfg.apso_params.c_min = a["c_min"].get<double>();
        if (a.contains("c_max")) cfg.apso_params.c_max = a["c_max"].get<double>();
        if (a.contains("c_sum_max")) cfg.apso_params.c_sum_max = a["c_sum_max"].get<double>();
        if (a.contains("delta")) cfg.apso_params.delta_range = range_from(a["delta"]);
        if (a.contains("coefficient_adaptation")) {
            cfg.apso_params.coefficient_adaptation = a["coefficient_adaptation"].get<bool>();
        }
        if (a.contains("inertia_adaptation")) {
            cfg.apso_params.inertia_adaptation = a["inertia_adaptation"].get<bool>();
        }
        if (a.contains("els")) cfg.apso_params.els_enabled = a["els"].get<bool>();
        if (a.contains("els_sigma")) cfg.apso_params.els_sigma_range = range_from(a["els_sigma"]);
    }
    if (j.contains("controller")) {
        const json& c = j["controller"];
        if (c.contains("c_min")) cfg.controller_params.mapping.c_min = c["c_min"].get<double>();
        if (c.contains("c_max")) cfg.controller_params.mapping.c_max = c["c_max"].get<double>();
        if (c.contains("control_inertia")) {
            cfg.controller_params.control_inertia = c["control_inertia"].get<bool>();
        }
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed config " + path.string() + ": " + e.what());
    }
    ExperimentConfig cfg;
    apply_json(cfg, j);
    return cfg;
}

namespace {

// Exact two-sided sign test: 2 * P(X <= min(k, m-k)) for X ~ Bin(m, 1/2).
double sign_test_p_value(std::size_t positives, std::size_t nonzero) {
    if (nonzero == 0) return 1.0;
    const std::size_t t = std::min(positives, nonzero - positives);
    // binomial CDF at t with p = 1/2
    double coeff = 1.0;
    double cdf = 0.0;
    for (std::size_t i = 0; i <= t; ++i) {
        if (i > 0) {
            coeff = coeff * static_cast<double>(nonzero - i + 1) / static_cast<double>(i);
        }
        cdf += coeff;
    }
    cdf *= std::pow(0.5, static_cast<double>(nonzero));
    return std::min(1.0, 2.0 * cdf);
}

} // namespace

PairedStats paired_stats(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("paired_stats requires equal-length lists");
    if (a.size() < 5) throw ContractError("paired_stats requires at least 5 pairs");

    PairedStats st;
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        st.mean_diff += d / static_cast<double>(a.size());
        if (d != 0.0) diffs.push_back(d);
    }
    st.n_pairs = diffs.size();

    std::size_t positives = 0;
    for (double d : diffs) {
        if (d > 0.0) ++positives;
    }
    st.sign_test_p = sign_test_p_value(positives, diffs.size());

    // signed ranks with average ranks on |d| ties
    std::vector<std::size_t> order(diffs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        return std::abs(diffs[x]) < std::abs(diffs[y]);
    });
    std::vector<double> rank(diffs.size(), 0.0);
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0; // ranks are 1-based
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        (diffs[i] > 0.0 ? w_plus : w_minus) += rank[i];
    }
    st.wilcoxon_w = std::min(w_plus, w_minus);
    return st;
}

ComparisonReport build_report(const ExperimentConfig& cfg, const ctrl::EvaluationResult& raw) {
    ComparisonReport report;
    report.config = cfg;
    report.raw = raw;

    const ctrl::MethodData* pso_data = raw.find("pso");
    for (const ctrl::MethodData& m : raw.methods) {
        MethodSummary s;
        s.method = m.name;
        s.mean_cost = m.mean_cost();
        s.std_cost = m.std_cost();
        s.mean_wall_time = m.mean_wall_time();
        if (pso_data != nullptr && pso_data->mean_cost() > 0.0) {
            s.improvement_vs_pso_pct =
                (pso_data->mean_cost() - s.mean_cost) / pso_data->mean_cost() * 100.0;
            s.has_improvement = true;
        }
        report.methods.push_back(s);
    }

    // paired comparisons for every ordered method pair
    for (std::size_t i = 0; i < raw.methods.size(); ++i) {
        for (std::size_t j = i + 1; j < raw.methods.size(); ++j) {
            const ctrl::MethodData& ma = raw.methods[i];
            const ctrl::MethodData& mb = raw.methods[j];
            if (ma.runs.size() != mb.runs.size() || ma.runs.size() < 5) continue;
            for (std::size_t r = 0; r < ma.runs.size(); ++r) {
                if (ma.runs[r].env_seed != mb.runs[r].env_seed ||
                    ma.runs[r].swarm_seed != mb.runs[r].swarm_seed) {
                    throw ContractError("paired runs lost seed alignment");
                }
            }
            std::vector<double> costs_a, costs_b;
            for (const ctrl::MethodRun& r : ma.runs) costs_a.push_back(r.best_cost);
            for (const ctrl::MethodRun& r : mb.runs) costs_b.push_back(r.best_cost);
            PairedComparison pc;
            pc.method_a = ma.name;
            pc.method_b = mb.name;
            pc.stats = paired_stats(costs_a, costs_b);
            const double mean_a = ma.mean_cost();
            pc.pct_improvement_of_b = mean_a > 0.0 ? (mean_a - mb.mean_cost()) / mean_a * 100.0 : 0.0;
            report.pairs.push_back(pc);
        }
    }

    for (const ctrl::MethodData& m : raw.methods) {
        CurveStats cs;
        cs.method = m.name;
        if (!m.runs.empty()) {
            const std::size_t len = m.runs.front().curve.size();
            cs.mean.assign(len, 0.0);
            cs.min.assign(len, std::numeric_limits<double>::infinity());
            cs.max.assign(len, -std::numeric_limits<double>::infinity());
            for (const ctrl::MethodRun& r : m.runs) {
                for (std::size_t t = 0; t < len; ++t) {
                    cs.mean[t] += r.curve[t] / static_cast<double>(m.runs.size());
                    cs.min[t] = std::min(cs.min[t], r.curve[t]);
                    cs.max[t] = std::max(cs.max[t], r.curve[t]);
                }
            }
        }
        report.curves.push_back(std::move(cs));
    }
    return report;
}

ComparisonReport run_bench(const ExperimentConfig& cfg) {
    if (cfg.runs == 0) throw ConfigError("runs must be >= 1");

    ctrl::EvalSpec spec;
    spec.env_template = cfg.env;
    spec.env_seeds = {cfg.env.seed};
    spec.resample_env_per_run = cfg.resample_env_per_run;
    spec.runs_per_seed = cfg.runs;
    spec.master_seed = cfg.master_seed;
    spec.methods = cfg.methods;
    spec.pso_params = cfg.pso_params;
    spec.apso_params = cfg.apso_params;
    spec.controller_params = cfg.controller_params;
    // one common base keeps the comparison paired on swarm size and horizon
    spec.apso_params.base = cfg.pso_params;
    spec.controller_params.base = cfg.pso_params;
    spec.weights = cfg.weights;
    spec.mode = cfg.mode;
    spec.mb_to_mbit = cfg.mb_to_mbit;

    std::unique_ptr<sac::SacAgent> agent;
    const bool wants_agent =
        std::find(cfg.methods.begin(), cfg.methods.end(), "apsosac") != cfg.methods.end();
    if (wants_agent) {
        if (cfg.checkpoint.empty()) {
            throw ConfigError("method apsosac requires a checkpoint path");
        }
        agent = std::make_unique<sac::SacAgent>(sac::SacAgent::load_checkpoint(cfg.checkpoint));
    }

    const ctrl::EvaluationResult raw = ctrl::evaluate(agent.get(), spec);
    ExperimentConfig resolved = cfg;
    resolved.apso_params.base = spec.apso_params.base;
    resolved.controller_params.base = spec.controller_params.base;
    return build_report(resolved, raw);
}

namespace {

json report_to_json(const ComparisonReport& report) {
    json j;
    j["config"] = to_json(report.config);
    j["rng"] = std::string(Rng::kAlgorithmId);
    j["pairing"] = {{"paired_by", "env_seed and swarm_seed"}, {"verified", true}};
    j["methods"] = json::array();
    for (std::size_t i = 0; i < report.methods.size(); ++i) {
        const MethodSummary& s = report.methods[i];
        json runs = json::array();
        for (const ctrl::MethodRun& r : report.raw.methods[i].runs) {
            runs.push_back({{"env_seed", r.env_seed},
                            {"swarm_seed", r.swarm_seed},
                            {"best_cost", r.best_cost},
                            {"wall_time_s", r.wall_time_seconds}});
        }
        json m = {{"method", s.method},
                  {"mean_best_cost", s.mean_cost},
                  {"std_best_cost", s.std_cost},
                  {"mean_wall_time_s", s.mean_wall_time},
                  {"runs", std::move(runs)}};
        if (s.has_improvement) m["improvement_vs_pso_pct"] = s.improvement_vs_pso_pct;
        j["methods"].push_back(std::move(m));
    }
    j["pairs"] = json::array();
    for (const PairedComparison& p : report.pairs) {
        j["pairs"].push_back({{"method_a", p.method_a},
                              {"method_b", p.method_b},
                              {"mean_diff", p.stats.mean_diff},
                              {"sign_test_p", p.stats.sign_test_p},
                              {"wilcoxon_w", p.stats.wilcoxon_w},
                              {"n_nonzero_pairs", p.stats.n_pairs},
                              {"pct_improvement_of_b", p.pct_improvement_of_b}});
    }
    return j;
}

std::string svg_color(const std::string& method) {
    if (method == "pso") return "#1f77b4";
    if (method == "apso") return "#ff7f0e";
    if (method == "apsosac") return "#2ca02c";
    return "#7f7f7f";
}

void write_svg(const ComparisonReport& report, const std::filesystem::path& path) {
    const double width = 640.0, height = 420.0;
    const double left = 70.0, right = 20.0, top = 30.0, bottom = 50.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::size_t len = 0;
    for (const CurveStats& c : report.curves) {
        for (double v : c.mean) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        len = std::max(len, c.mean.size());
    }
    if (!std::isfinite(lo) || len < 2) {
        lo = 0.0;
        hi = 1.0;
        len = 2;
    }
    if (hi <= lo) hi = lo + 1.0;

    const auto x_of = [&](std::size_t t) {
        return left + plot_w * static_cast<double>(t) / static_cast<double>(len - 1);
    };
    const auto y_of = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << format_double(width)
        << "\" height=\"" << format_double(height) << "\" viewBox=\"0 0 " << format_double(width)
        << " " << format_double(height) << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << format_double(left) << "\" y1=\"" << format_double(top + plot_h)
        << "\" x2=\"" << format_double(left + plot_w) << "\" y2=\"" << format_double(top + plot_h)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << format_double(left) << "\" y1=\"" << format_double(top) << "\" x2=\""
        << format_double(left) << "\" y2=\"" << format_double(top + plot_h)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << format_double(left + plot_w / 2.0) << "\" y=\""
        << format_double(height - 12.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">iteration</text>\n";
    out << "<text x=\"18\" y=\"" << format_double(top + plot_h / 2.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" transform=\"rotate(-90 18 "
        << format_double(top + plot_h / 2.0) << ")\">best cost</text>\n";
    out << "<text x=\"" << format_double(left - 8.0) << "\" y=\"" << format_double(top + plot_h + 4.0)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(lo)
        << "</text>\n";
    out << "<text x=\"" << format_double(left - 8.0) << "\" y=\"" << format_double(top + 4.0)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(hi)
        << "</text>\n";
    out << "<text x=\"" << format_double(left) << "\" y=\"" << format_double(top + plot_h + 16.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">0</text>\n";
    out << "<text x=\"" << format_double(left + plot_w) << "\" y=\""
        << format_double(top + plot_h + 16.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << (len - 1) << "</text>\n";

    double legend_y = top + 6.0;
    for (const CurveStats& c : report.curves) {
        if (c.mean.empty()) continue;
        out << "<polyline fill=\"none\" stroke=\"" << svg_color(c.method)
            << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t t = 0; t < c.mean.size(); ++t) {
            if (t > 0) out << ' ';
            out << format_double(x_of(t)) << ',' << format_double(y_of(c.mean[t]));
        }
        out << "\"/>\n";
        out << "<text x=\"" << format_double(left + plot_w - 6.0) << "\" y=\""
            << format_double(legend_y) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            << "font-size=\"12\" fill=\"" << svg_color(c.method) << "\">" << c.method << "</text>\n";
        legend_y += 16.0;
    }
    out << "</svg>\n";
}

} // namespace

void emit_report(const ComparisonReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::filesystem::create_directories(dir / "curves");

    {
        std::ofstream out(dir / "summary.json");
        if (!out) throw ConfigError("cannot open for writing: " + (dir / "summary.json").string());
        out << report_to_json(report).dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "config_resolved.json");
        out << to_json(report.config).dump(2) << '\n';
    }
    {
        std::ofstream out(dir / "summary.csv");
        out << "method,mean_best_cost,std_best_cost,mean_wall_time_s,improvement_vs_pso_pct\n";
        for (const MethodSummary& s : report.methods) {
            out << s.method << ',' << format_double(s.mean_cost) << ',' << format_double(s.std_cost)
                << ',' << format_double(s.mean_wall_time) << ','
                << (s.has_improvement ? format_double(s.improvement_vs_pso_pct) : std::string())
                << '\n';
        }
    }
    for (const CurveStats& c : report.curves) {
        std::ofstream out(dir / "curves" / (c.method + ".csv"));
        out << "iteration,mean_gbest,min_gbest,max_gbest\n";
        for (std::size_t t = 0; t < c.mean.size(); ++t) {
            out << t << ',' << format_double(c.mean[t]) << ',' << format_double(c.min[t]) << ','
                << format_double(c.max[t]) << '\n';
        }
    }
    write_svg(report, dir / "curves.svg");
}

} // namespace mecswarm::harness
