#pragma once

// Unit conversions and physical constants shared across the library.
// All internal computations are carried out in linear SI units (watts,
// meters, hertz); decibel quantities appear only at configuration
// boundaries.

#include <cassert>
#include <cmath>

namespace ssirs {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;

// dBm -> watts.  0 dBm == 1 mW.
inline double dbm_to_watts(double dbm) {
    return 1e-3 * std::pow(10.0, dbm / 10.0);
}

// watts -> dBm.  Inverse of dbm_to_watts for any positive power.
inline double watts_to_dbm(double watts) {
    assert(watts > 0.0);
    return 10.0 * std::log10(watts / 1e-3);
}

// dB -> linear power ratio.
inline double db_to_linear(double db) {
    return std::pow(10.0, db / 10.0);
}

// linear power ratio -> dB.
inline double linear_to_db(double lin) {
    assert(lin > 0.0);
    return 10.0 * std::log10(lin);
}

}  // namespace ssirs
