#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace mecswarm {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Derives an independent stream seed from a master seed, a component tag,
/// and an optional index. Fixed scheme so seeds stay portable across builds.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    return mix64(mix64(base ^ fnv1a64(tag)) + index);
}

/// Deterministic random stream: the mt19937-64 engine (bit-exact per the
/// standard) with a fixed 53-bit mapping to doubles, so sequences are
/// identical across standard libraries and platforms. Files that depend on
/// a stream embed kAlgorithmId so saved artifacts stay reproducible.
class Rng {
public:
    static constexpr std::string_view kAlgorithmId = "mt19937-64/canon53";

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi). Degenerate lo == hi returns lo exactly.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform index in [0, n), n > 0. Modulo mapping; the bias is below
    /// 2^-40 for every n used here.
    std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    /// Standard normal via Box-Muller. Always consumes exactly two engine
    /// outputs and discards the paired value, so the stream position is a
    /// pure function of the call count.
    double normal() {
        // (0, 1] for the log argument
        double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Engine state as text, for checkpoints.
    std::string serialize() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    static Rng deserialize(const std::string& state) {
        Rng r(0);
        std::istringstream is(state);
        is >> r.engine_;
        return r;
    }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace mecswarm
