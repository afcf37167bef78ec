#pragma once

// Discrete operation modes of one IRS element.  An element either harvests
// (coefficient 0) or reflects with one of B = 2^b uniformly quantized unit
// phase shifts.  Mode index 0 is always the harvesting mode; reflection mode
// i >= 1 applies phase (i-1) * 2*pi/B.

#include <complex>
#include <stdexcept>
#include <vector>

#include "ssirs/units.hpp"

namespace ssirs {

using cd = std::complex<double>;

// F: the B reflection phase angles, starting at 0.
inline std::vector<double> phase_set(int b) {
    if (b < 1) throw std::domain_error("phase_set: b must be >= 1");
    const int B = 1 << b;
    std::vector<double> out(B);
    for (int i = 0; i < B; ++i) out[i] = 2.0 * kPi * i / B;
    return out;
}

// F~: harvesting coefficient 0 followed by the unit-modulus reflection
// coefficients e^{j theta}, theta in phase_set(b).  Size B + 1.
inline std::vector<cd> mode_set(int b) {
    const std::vector<double> phases = phase_set(b);
    std::vector<cd> out;
    out.reserve(phases.size() + 1);
    out.emplace_back(0.0, 0.0);
    for (double th : phases) out.emplace_back(std::cos(th), std::sin(th));
    return out;
}

}  // namespace ssirs
