#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mecswarm {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double x) const { return x >= lo && x <= hi; }
    double midpoint() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }
};

/// One IIoT device: payload to ship and work to run on the assigned server.
struct Device {
    double data_size_mb = 0.0;       // payload, megabytes
    double completion_req_mi = 0.0;  // workload, million instructions
    double ram_req_gb = 0.0;         // memory the task needs on its server
    double network_speed_mbps = 0.0; // uplink from this device, megabits/s
};

/// One edge server: throughput, metered price, and memory on offer.
struct Server {
    double speed_mips = 0.0; // million instructions per second
    double cost_rate = 0.0;  // currency per second of busy time
    double ram_gb = 0.0;
};

/// Sampling intervals for every generated attribute.
struct EnvRanges {
    Interval data_size{50.0, 150.0};
    Interval completion_req{20.0, 40.0};
    Interval ram_req{1.0, 2.0};
    Interval network_speed{60.0, 900.0};
    Interval server_speed{10.0, 200.0};
    Interval server_cost{0.02, 0.06};
    Interval server_ram{2.0, 8.0};
};

struct EnvConfig {
    std::size_t n_devices = 250;
    std::size_t n_servers = 20;
    std::uint64_t seed = 42;
    EnvRanges ranges;
};

/// A fixed fleet of devices plus a server pool. Immutable after generation;
/// regenerating from the stored config reproduces it bit for bit.
struct Environment {
    std::vector<Device> devices;
    std::vector<Server> servers;
    EnvConfig config;
};

/// Throws ConfigError on inverted ranges or a nonzero fleet with no servers.
void validate(const EnvConfig& config);

/// Draws every attribute independently and uniformly from its configured
/// interval. Draw order is fixed (devices in index order, fields in
/// declaration order, then servers likewise) so seeds stay portable.
Environment generate_environment(const EnvConfig& config);

/// JSON snapshot, full-precision numbers. Round-trips field-for-field.
void save_environment(const Environment& env, const std::filesystem::path& path);
Environment load_environment(const std::filesystem::path& path);

} // namespace mecswarm
