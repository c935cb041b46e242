#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace amdreg {

// Deterministic random source. The engine (std::mt19937_64) and every
// derived draw below are fixed by this project, so identical seeds give
// identical sequences on any conforming platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // 53-bit mantissa in [0, 1).
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Box-Muller; the spare draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform01(); // (0, 1]
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.28318530717958647692 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }
    double normal(double mean, double sigma) { return mean + sigma * normal(); }

    // Uniform integer in [0, n) via multiply-shift; bias is O(n / 2^64).
    std::uint64_t below(std::uint64_t n) {
        return std::uint64_t((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Independent child stream; derivation depends only on the construction
    // seed and the stream id, not on how much of this stream was consumed.
    Rng stream(std::uint64_t stream_id) const {
        return Rng(mix(seed_ ^ mix(stream_id + 0x9E3779B97F4A7C15ull)));
    }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace amdreg
