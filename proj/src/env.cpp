#include "mecswarm/env.hpp"

#include "mecswarm/errors.hpp"
#include "mecswarm/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <string>

namespace mecswarm {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

void check_range(const Interval& r, const char* name) {
    if (!(r.lo <= r.hi)) {
        throw ConfigError(std::string("invalid range for ") + name + ": lower bound exceeds upper");
    }
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) {
        throw ConfigError(std::string("non-finite range for ") + name);
    }
}

json range_to_json(const Interval& r) { return json::array({r.lo, r.hi}); }

Interval range_from_json(const json& j, const char* name) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ParseError(std::string("ranges.") + name + ": expected [lo, hi]");
    }
    return Interval{j[0].get<double>(), j[1].get<double>()};
}

double require_positive(const json& j, const std::string& field) {
    if (!j.contains(field) || !j[field].is_number()) {
        throw ParseError("missing or non-numeric field: " + field);
    }
    const double v = j[field].get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ParseError("field must be strictly positive: " + field);
    }
    return v;
}

} // namespace

void validate(const EnvConfig& config) {
    if (config.n_devices > 0 && config.n_servers == 0) {
        throw ConfigError("n_servers must be >= 1 when devices are present");
    }
    check_range(config.ranges.data_size, "data_size");
    check_range(config.ranges.completion_req, "completion_req");
    check_range(config.ranges.ram_req, "ram_req");
    check_range(config.ranges.network_speed, "network_speed");
    check_range(config.ranges.server_speed, "server_speed");
    check_range(config.ranges.server_cost, "server_cost");
    check_range(config.ranges.server_ram, "server_ram");
}

Environment generate_environment(const EnvConfig& config) {
    validate(config);
    Environment env;
    env.config = config;
    env.devices.reserve(config.n_devices);
    env.servers.reserve(config.n_servers);

    Rng rng(config.seed);
    const EnvRanges& r = config.ranges;
    for (std::size_t j = 0; j < config.n_devices; ++j) {
        Device d;
        d.data_size_mb = rng.uniform(r.data_size.lo, r.data_size.hi);
        d.completion_req_mi = rng.uniform(r.completion_req.lo, r.completion_req.hi);
        d.ram_req_gb = rng.uniform(r.ram_req.lo, r.ram_req.hi);
        d.network_speed_mbps = rng.uniform(r.network_speed.lo, r.network_speed.hi);
        env.devices.push_back(d);
    }
    for (std::size_t s = 0; s < config.n_servers; ++s) {
        Server sv;
        sv.speed_mips = rng.uniform(r.server_speed.lo, r.server_speed.hi);
        sv.cost_rate = rng.uniform(r.server_cost.lo, r.server_cost.hi);
        sv.ram_gb = rng.uniform(r.server_ram.lo, r.server_ram.hi);
        env.servers.push_back(sv);
    }
    return env;
}

void save_environment(const Environment& env, const std::filesystem::path& path) {
    json j;
    j["format_version"] = kFormatVersion;
    j["rng"] = std::string(Rng::kAlgorithmId);
    j["config"] = {
        {"n_devices", env.config.n_devices},
        {"n_servers", env.config.n_servers},
        {"seed", env.config.seed},
        {"ranges",
         {{"data_size", range_to_json(env.config.ranges.data_size)},
          {"completion_req", range_to_json(env.config.ranges.completion_req)},
          {"ram_req", range_to_json(env.config.ranges.ram_req)},
          {"network_speed", range_to_json(env.config.ranges.network_speed)},
          {"server_speed", range_to_json(env.config.ranges.server_speed)},
          {"server_cost", range_to_json(env.config.ranges.server_cost)},
          {"server_ram", range_to_json(env.config.ranges.server_ram)}}}};
    j["devices"] = json::array();
    for (const Device& d : env.devices) {
        j["devices"].push_back({{"data_size", d.data_size_mb},
                                {"completion_req", d.completion_req_mi},
                                {"ram_req", d.ram_req_gb},
                                {"network_speed", d.network_speed_mbps}});
    }
    j["servers"] = json::array();
    for (const Server& s : env.servers) {
        j["servers"].push_back(
            {{"speed", s.speed_mips}, {"cost_rate", s.cost_rate}, {"ram", s.ram_gb}});
    }

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError("write failed: " + path.string());
}

Environment load_environment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open for reading: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed environment file " + path.string() + ": " + e.what());
    }

    if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion) {
        throw ParseError("unsupported or missing format_version");
    }

    Environment env;
    try {
        const json& c = j.at("config");
        env.config.n_devices = c.at("n_devices").get<std::size_t>();
        env.config.n_servers = c.at("n_servers").get<std::size_t>();
        env.config.seed = c.at("seed").get<std::uint64_t>();
        const json& r = c.at("ranges");
        env.config.ranges.data_size = range_from_json(r.at("data_size"), "data_size");
        env.config.ranges.completion_req = range_from_json(r.at("completion_req"), "completion_req");
        env.config.ranges.ram_req = range_from_json(r.at("ram_req"), "ram_req");
        env.config.ranges.network_speed = range_from_json(r.at("network_speed"), "network_speed");
        env.config.ranges.server_speed = range_from_json(r.at("server_speed"), "server_speed");
        env.config.ranges.server_cost = range_from_json(r.at("server_cost"), "server_cost");
        env.config.ranges.server_ram = range_from_json(r.at("server_ram"), "server_ram");
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad config block: ") + e.what());
    }

    if (!j.contains("devices") || !j["devices"].is_array()) throw ParseError("missing devices array");
    if (!j.contains("servers") || !j["servers"].is_array()) throw ParseError("missing servers array");

    for (const json& d : j["devices"]) {
        Device dev;
        dev.data_size_mb = require_positive(d, "data_size");
        dev.completion_req_mi = require_positive(d, "completion_req");
        dev.ram_req_gb = require_positive(d, "ram_req");
        dev.network_speed_mbps = require_positive(d, "network_speed");
        env.devices.push_back(dev);
    }
    for (const json& s : j["servers"]) {
        Server sv;
        sv.speed_mips = require_positive(s, "speed");
        sv.cost_rate = require_positive(s, "cost_rate");
        sv.ram_gb = require_positive(s, "ram");
        env.servers.push_back(sv);
    }

    if (env.devices.size() != env.config.n_devices) {
        throw ParseError("devices array length does not match config.n_devices");
    }
    if (env.servers.size() != env.config.n_servers) {
        throw ParseError("servers array length does not match config.n_servers");
    }
    validate(env.config);
    return env;
}

} // namespace mecswarm
