#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>

namespace llmpc {

// splitmix64 finalizer. Used to turn structured integers (seed, sweep point,
// trial index) into well-mixed engine seeds.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for the stream identified by (master, a, b). Streams for different
// (a, b) pairs are independent of how many other streams exist, so parallel
// and sequential execution see the same draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = mix64(master);
    s = mix64(s ^ a);
    s = mix64(s ^ b);
    return s;
}

// Deterministic random stream. The engine (mt19937_64) is bit-specified by
// the standard; the floating-point conversions below are explicit so results
// do not depend on the standard library's distribution implementations.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, 1), 53-bit resolution
    double next_double() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // one pair of independent standard normals (Box-Muller)
    std::pair<double, double> gaussian_pair() {
        const double u1 = 1.0 - next_double();  // (0, 1], keeps log() finite
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(t), r * std::sin(t)};
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace llmpc
