#pragma once

// Counter-derived random streams. A stream is fully determined by (master_seed, index, purpose),
// so a trial can be replayed in isolation and results do not depend on scheduling.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace mixspec {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t index, std::uint64_t purpose = 0)
        : engine_(splitmix64(splitmix64(splitmix64(master_seed) ^ index) ^ (purpose * 0xd1b54a32d192ed03ULL))) {}

    /// Uniform on [0, 1) with 53 random bits. Spelled out so draws are identical across standard libraries.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; both outputs of a pair are used.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Circularly symmetric complex normal with E|w|^2 = variance.
    std::complex<double> complex_normal(double variance = 1.0) {
        const double s = std::sqrt(0.5 * variance);
        const double re = normal();
        const double im = normal();
        return {s * re, s * im};
    }

    /// Phase uniform on (-pi, pi].
    double phase() { return std::numbers::pi - 2.0 * std::numbers::pi * uniform(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mixspec
