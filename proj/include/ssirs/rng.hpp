#pragma once

// Deterministic random number generation.
//
// std::normal_distribution is implementation-defined, so Gaussian draws go
// through an explicit Box-Muller transform on top of mt19937_64.  This keeps
// channel realizations and therefore every downstream result bit-identical
// for a given seed, independent of the standard library in use.

#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "ssirs/units.hpp"

namespace ssirs {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on [0, 1).
    double uniform() {
        // 53-bit mantissa draw; avoids the closed upper endpoint.
        return (engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        assert(hi >= lo);
        return lo + (hi - lo) * uniform();
    }

    // Standard normal via Box-Muller (both outputs used).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        // Guard the log: uniform() can return exactly 0.
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

    // Circularly symmetric complex normal CN(0, 1): E|z|^2 = 1.
    std::complex<double> cgaussian() {
        const double re = gaussian();
        const double im = gaussian();
        return {re / std::sqrt(2.0), im / std::sqrt(2.0)};
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Collision-resistant stream derivation for experiment grids: every
// (base seed, value index, trial index) triple owns an independent stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t value_index,
                                 std::uint64_t trial_index) {
    auto mix = [](std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    h = mix(h ^ (0xA24BAED4963EE407ULL + value_index));
    h = mix(h ^ (0x9FB21C651E98DF25ULL + trial_index));
    return h;
}

}  // namespace ssirs
