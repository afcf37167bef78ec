#pragma once

// Scenario configuration: system dimensions, geometry, RF parameters and
// noise budget for the simulated downlink.  Defaults reproduce the desk
// reference scenario used throughout the test suite.

#include <cstdint>
#include <stdexcept>
#include <string>

#include "ssirs/units.hpp"

namespace ssirs {

enum class LosModel {
    kGeometric,  // steering-vector LoS from array geometry (default)
    kUnitPhase,  // i.i.d. unit-modulus random-phase LoS factors
};

struct ScenarioConfig {
    // Dimensions.
    int M = 8;    // AP antennas
    int N = 256;  // IRS elements
    int K = 2;    // users

    // Geometry (meters).  The AP sits at the origin, the user circle is
    // centered at (d0, 0), the IRS at (d, d_y).
    double d0 = 60.0;
    double d = 30.0;
    double d_y = 1.0;
    double r = 1.0;

    // Carrier.
    double f_c = 470e6;        // Hz
    double bandwidth = 200e3;  // Hz, recorded as metadata only

    // Power and IRS hardware.
    double p_max_dbm = 38.0;
    int b = 3;                // phase-shifter resolution, bits
    double p_irs_dbm = 1.0;   // per-element consumption while reflecting
    double eta_h = 0.8;       // harvesting efficiency

    // Path-loss exponents per link.
    double alpha_AU = 3.6;
    double alpha_AI = 2.2;
    double alpha_IU = 2.2;

    // Rician factors per link (0 = Rayleigh).
    double beta_AU = 0.0;
    double beta_AI = 2.0;
    double beta_IU = 2.0;

    // Antenna gains (dBi).
    double gain_ap_dbi = 10.0;
    double gain_irs_dbi = 10.0;
    double gain_user_dbi = 0.0;

    // Noise budget (dBm).  User noise combines the thermal floor with
    // quantization noise; the IRS energy harvester sees thermal noise only.
    double noise_thermal_dbm = -110.0;
    double noise_quantization_dbm = -47.0;
    double noise_irs_dbm = -110.0;

    LosModel los = LosModel::kGeometric;

    // IRS panel rows for the steering model; 0 selects the largest divisor
    // of N not exceeding sqrt(N) (a square panel whenever N is a square).
    int irs_rows = 0;

    std::uint64_t seed = 1;

    // ---- Derived quantities ----

    double p_max_w() const { return dbm_to_watts(p_max_dbm); }
    double p_irs_w() const { return dbm_to_watts(p_irs_dbm); }
    double sigma_k2() const {
        return dbm_to_watts(noise_thermal_dbm) + dbm_to_watts(noise_quantization_dbm);
    }
    double sigma_a2() const { return dbm_to_watts(noise_irs_dbm); }
    double wavelength() const { return kSpeedOfLight / f_c; }
    int num_phases() const { return 1 << b; }  // |F| = 2^b

    int rows() const {
        if (irs_rows > 0) return irs_rows;
        int best = 1;
        for (int p = 1; p * p <= N; ++p)
            if (N % p == 0) best = p;
        return best;
    }
    int cols() const { return N / rows(); }

    void validate() const {
        auto fail = [](const std::string& what) {
            throw std::invalid_argument("ScenarioConfig: " + what);
        };
        if (M < 1) fail("M must be >= 1");
        if (N < 0) fail("N must be >= 0");
        if (K < 1) fail("K must be >= 1");
        if (d0 <= 0 || r < 0 || d <= 0) fail("distances must be positive");
        if (f_c <= 0) fail("carrier frequency must be positive");
        if (b < 1) fail("b must be >= 1");
        if (eta_h <= 0.0 || eta_h > 1.0) fail("eta_h must lie in (0, 1]");
        if (alpha_AU <= 0 || alpha_AI <= 0 || alpha_IU <= 0) fail("path-loss exponents must be positive");
        if (beta_AU < 0 || beta_AI < 0 || beta_IU < 0) fail("Rician factors must be non-negative");
        if (irs_rows > 0 && N > 0 && N % irs_rows != 0) fail("irs_rows must divide N");
    }
};

}  // namespace ssirs
