#pragma once

// Channel model for the IRS-assisted downlink.
//
// Scene layout (2-D, meters): the AP sits at the origin with a half-wavelength
// ULA along the y axis, users are drawn uniformly on a circle of radius r
// centered at (d0, 0), and the IRS panel is at (d, d_y).  The IRS is modeled
// as a rows() x cols() URA with half-wavelength spacing whose in-plane axis is
// x; for in-plane propagation the out-of-plane rows add no steering phase.
//
// Large-scale fading follows a Friis-referenced power law
//     path_gain = G_tx * G_rx * PL_ref * (dist / 10)^(-exponent),
// with PL_ref the free-space gain at 10 m.  Small-scale fading is Rician:
//     entry = sqrt(path_gain) * ( sqrt(beta/(1+beta)) * L
//                               + sqrt(1/(1+beta))   * z ),   z ~ CN(0,1),
// where L is a deterministic unit-modulus LoS factor from the array geometry
// (or an i.i.d. random-phase factor under LosModel::kUnitPhase).

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "ssirs/config.hpp"
#include "ssirs/modes.hpp"
#include "ssirs/rng.hpp"

namespace ssirs {

enum class Link { AU, AI, IU };

struct Geometry {
    Eigen::Vector2d ap{0.0, 0.0};
    Eigen::Vector2d irs{0.0, 0.0};
    std::vector<Eigen::Vector2d> users;

    double ap_irs_dist() const { return (irs - ap).norm(); }
    double ap_user_dist(int k) const { return (users.at(k) - ap).norm(); }
    double irs_user_dist(int k) const { return (users.at(k) - irs).norm(); }
};

inline Geometry build_geometry(const ScenarioConfig& cfg, Rng& rng) {
    cfg.validate();
    Geometry g;
    g.ap = {0.0, 0.0};
    g.irs = {cfg.d, cfg.d_y};
    g.users.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        g.users[k] = {cfg.d0 + cfg.r * std::cos(phi), cfg.r * std::sin(phi)};
    }
    return g;
}

// Free-space reference gain at 10 m.
inline double reference_gain(const ScenarioConfig& cfg) {
    const double lam = cfg.wavelength();
    const double x = lam / (4.0 * kPi * 10.0);
    return x * x;
}

inline double path_gain(double dist, double exponent, const ScenarioConfig& cfg, Link link) {
    if (dist <= 0.0) throw std::invalid_argument("path_gain: distance must be positive");
    double g_tx = 0.0, g_rx = 0.0;
    switch (link) {
        case Link::AU: g_tx = cfg.gain_ap_dbi; g_rx = cfg.gain_user_dbi; break;
        case Link::AI: g_tx = cfg.gain_ap_dbi; g_rx = cfg.gain_irs_dbi; break;
        case Link::IU: g_tx = cfg.gain_irs_dbi; g_rx = cfg.gain_user_dbi; break;
    }
    return db_to_linear(g_tx) * db_to_linear(g_rx) * reference_gain(cfg) *
           std::pow(dist / 10.0, -exponent);
}

// Half-wavelength ULA response at the AP (array along y); u is the unit
// propagation direction of the ray at the AP.
inline Eigen::VectorXcd ap_steering(const ScenarioConfig& cfg, const Eigen::Vector2d& u) {
    Eigen::VectorXcd a(cfg.M);
    for (int m = 0; m < cfg.M; ++m) {
        const double ph = kPi * m * u.y();
        a(m) = cd(std::cos(ph), std::sin(ph));
    }
    return a;
}

// URA response at the IRS; columns lie along the in-plane x axis, rows are
// out of plane and contribute no phase for in-plane rays.  Element order is
// row-major: n = row * cols + col.
inline Eigen::VectorXcd irs_steering(const ScenarioConfig& cfg, const Eigen::Vector2d& u) {
    Eigen::VectorXcd a(cfg.N);
    const int cols = cfg.cols();
    for (int n = 0; n < cfg.N; ++n) {
        const int col = cols > 0 ? n % cols : 0;
        const double ph = kPi * col * u.x();
        a(n) = cd(std::cos(ph), std::sin(ph));
    }
    return a;
}

struct ChannelRealization {
    Eigen::MatrixXcd G;     // N x M, AP -> IRS
    Eigen::MatrixXcd h_r;   // N x K, IRS -> user k in column k
    Eigen::MatrixXcd h_d;   // M x K, AP -> user k in column k
    Eigen::VectorXd sigma_k2;  // per-user noise power, watts
    double sigma_a2 = 0.0;     // IRS harvester noise power, watts
    Geometry geometry;
};

namespace detail {

// One Rician draw with per-entry LoS factor `los`.
inline cd rician_entry(double pg, double beta, cd los, Rng& rng) {
    const cd z = rng.cgaussian();
    const double s_los = std::sqrt(beta / (1.0 + beta));
    const double s_nlos = std::sqrt(1.0 / (1.0 + beta));
    return std::sqrt(pg) * (s_los * los + s_nlos * z);
}

inline cd unit_phase(Rng& rng) {
    const double ph = rng.uniform(0.0, 2.0 * kPi);
    return {std::cos(ph), std::sin(ph)};
}

}  // namespace detail

// Draw a full channel realization for a fixed geometry.  Draw order (fixed
// for reproducibility): G column-major, then h_r per user, then h_d per user.
inline ChannelRealization sample_channels(const ScenarioConfig& cfg, Rng& rng,
                                          const Geometry& geom) {
    cfg.validate();
    if (static_cast<int>(geom.users.size()) != cfg.K)
        throw std::invalid_argument("sample_channels: geometry/user count mismatch");

    ChannelRealization ch;
    ch.geometry = geom;
    ch.G.resize(cfg.N, cfg.M);
    ch.h_r.resize(cfg.N, cfg.K);
    ch.h_d.resize(cfg.M, cfg.K);
    ch.sigma_k2 = Eigen::VectorXd::Constant(cfg.K, cfg.sigma_k2());
    ch.sigma_a2 = cfg.sigma_a2();

    const bool geometric = (cfg.los == LosModel::kGeometric);

    // AP -> IRS.
    if (cfg.N > 0) {
        const double pg = path_gain(geom.ap_irs_dist(), cfg.alpha_AI, cfg, Link::AI);
        const Eigen::Vector2d u = (geom.irs - geom.ap).normalized();
        Eigen::VectorXcd a_i, a_a;
        if (geometric) {
            a_i = irs_steering(cfg, u);
            a_a = ap_steering(cfg, u);
        }
        for (int m = 0; m < cfg.M; ++m)
            for (int n = 0; n < cfg.N; ++n) {
                const cd los = geometric ? a_i(n) * std::conj(a_a(m)) : detail::unit_phase(rng);
                ch.G(n, m) = detail::rician_entry(pg, cfg.beta_AI, los, rng);
            }
    }

    // IRS -> users.
    for (int k = 0; k < cfg.K; ++k) {
        if (cfg.N == 0) continue;
        const double pg = path_gain(geom.irs_user_dist(k), cfg.alpha_IU, cfg, Link::IU);
        const Eigen::Vector2d u = (geom.users[k] - geom.irs).normalized();
        Eigen::VectorXcd a_i;
        if (geometric) a_i = irs_steering(cfg, u);
        for (int n = 0; n < cfg.N; ++n) {
            const cd los = geometric ? a_i(n) : detail::unit_phase(rng);
            ch.h_r(n, k) = detail::rician_entry(pg, cfg.beta_IU, los, rng);
        }
    }

    // AP -> users.
    for (int k = 0; k < cfg.K; ++k) {
        const double pg = path_gain(geom.ap_user_dist(k), cfg.alpha_AU, cfg, Link::AU);
        const Eigen::Vector2d u = (geom.users[k] - geom.ap).normalized();
        Eigen::VectorXcd a_a;
        if (geometric) a_a = ap_steering(cfg, u);
        for (int m = 0; m < cfg.M; ++m) {
            const cd los = geometric ? a_a(m) : detail::unit_phase(rng);
            ch.h_d(m, k) = detail::rician_entry(pg, cfg.beta_AU, los, rng);
        }
    }

    return ch;
}

inline ChannelRealization sample_channels(const ScenarioConfig& cfg, Rng& rng) {
    const Geometry geom = build_geometry(cfg, rng);
    return sample_channels(cfg, rng, geom);
}

}  // namespace ssirs
