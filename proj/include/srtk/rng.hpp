#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace srtk::rng {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Counter-based generator: every draw is a pure function of (key, counter),
// so parallel or out-of-order generation yields identical streams.
struct CounterRng {
    std::uint64_t key = 0;

    CounterRng(std::uint64_t seed, std::uint64_t stream_a = 0,
               std::uint64_t stream_b = 0) {
        key = mix64(mix64(mix64(seed) ^ stream_a) ^ stream_b);
    }

    std::uint64_t bits(std::uint64_t counter) const {
        return mix64(key ^ (counter * 0xD6E8FEB86659FD93ull));
    }

    // uniform in [0,1)
    double uniform(std::uint64_t counter) const {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    // standard normal via Box-Muller; consumes counters 2c and 2c+1
    double gaussian(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }
};

}  // namespace srtk::rng
