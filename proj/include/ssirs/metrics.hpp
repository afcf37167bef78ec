#pragma once

// Link-level metrics of the downlink: effective channels, SINR, sum rate,
// harvested power, IRS consumption, and constraint checking.
//
// With reflection coefficients alpha (diagonal A~) the effective channel of
// user k is
//     m_k = h_d,k + G^H A~^H h_r,k,
// equivalently m_k = h_d,k + L_k^H v with the cascade matrix
// L_k = diag(h_r,k^H) G and v = conj(alpha).  Rates are in bits/s/Hz.

#include <Eigen/Dense>
#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "ssirs/channel.hpp"
#include "ssirs/config.hpp"
#include "ssirs/precoder.hpp"
#include "ssirs/schedule.hpp"

namespace ssirs {

// L_k = diag(h_r,k^H) G, so that h_r,k^H A~ G = v^H L_k.
inline Eigen::MatrixXcd cascade_matrix(const ChannelRealization& ch, int k) {
    return ch.h_r.col(k).conjugate().asDiagonal() * ch.G;
}

// Effective channel of user k.
inline Eigen::VectorXcd effective_channel(const ChannelRealization& ch,
                                          const IrsSchedule& sched, int k) {
    if (ch.G.rows() != sched.size())
        throw std::invalid_argument("effective_channel: schedule/channel size mismatch");
    return ch.h_d.col(k) +
           ch.G.adjoint() * sched.alpha_tilde().conjugate().asDiagonal() * ch.h_r.col(k);
}

// All effective channels as columns of an M x K matrix.
inline Eigen::MatrixXcd effective_channels(const ChannelRealization& ch,
                                           const IrsSchedule& sched) {
    const int K = static_cast<int>(ch.h_d.cols());
    Eigen::MatrixXcd m(ch.h_d.rows(), K);
    for (int k = 0; k < K; ++k) m.col(k) = effective_channel(ch, sched, k);
    return m;
}

inline double sinr(const ChannelRealization& ch, const IrsSchedule& sched,
                   const PrecoderSet& pre, int k) {
    const Eigen::VectorXcd m = effective_channel(ch, sched, k);
    const int K = pre.users();
    const double sig = std::norm(m.dot(pre.W.col(k)));  // |m^H w_k|^2
    double interf = 0.0;
    for (int j = 0; j < K; ++j)
        if (j != k) interf += std::norm(m.dot(pre.W.col(j)));
    return sig / (ch.sigma_k2(k) + interf);
}

inline double sum_rate(const ChannelRealization& ch, const IrsSchedule& sched,
                       const PrecoderSet& pre) {
    double r = 0.0;
    for (int k = 0; k < pre.users(); ++k) r += std::log2(1.0 + sinr(ch, sched, pre, k));
    return r;
}

// Average power collected by the harvesting elements (includes the harvester
// noise pickup), already scaled by the conversion efficiency:
//     eta_h * ( sum_n s1_n * sum_k |(G w_k)_n|^2 + sigma_a^2 * sum_n s1_n ).
inline double harvested_power(const ChannelRealization& ch, const IrsSchedule& sched,
                              const PrecoderSet& pre, const ScenarioConfig& cfg) {
    const Eigen::VectorXd s1 = sched.s1();
    if (s1.size() != ch.G.rows())
        throw std::invalid_argument("harvested_power: schedule/channel size mismatch");
    double rf = 0.0;
    for (int k = 0; k < pre.users(); ++k)
        rf += (ch.G * pre.W.col(k)).cwiseAbs2().dot(s1);
    return cfg.eta_h * (rf + ch.sigma_a2 * s1.sum());
}

// Power drawn by the elements that are not harvesting.
inline double irs_consumption(const IrsSchedule& sched, const ScenarioConfig& cfg) {
    return (sched.size() - sched.s1().sum()) * cfg.p_irs_w();
}

struct FeasibilityChecks {
    bool self_sustain = true;    // enforce harvested >= consumed
    bool discrete_modes = true;  // schedule must be binary over mode_set(b)
};

struct FeasibilityReport {
    double c1_slack = 0.0;   // P_max - total transmit power, watts
    double c3_slack = 0.0;   // harvested - consumed, watts (0 when unchecked)
    bool binary_ok = true;
    bool phase_in_set = true;
    double worst_violation = 0.0;  // max constraint violation, natural units
    bool feasible = true;
};

// Validates a (schedule, precoder) pair against the scheme's constraint set.
// Power budget slack is compared against tol_c1_rel * P_max and the
// self-sustainability slack against tol_c3_w (absolute watts).
inline FeasibilityReport check_feasibility(const ChannelRealization& ch,
                                           const IrsSchedule& sched, const PrecoderSet& pre,
                                           const ScenarioConfig& cfg,
                                           const FeasibilityChecks& checks = {},
                                           double tol_c1_rel = 1e-7,
                                           double tol_c3_w = 1e-9) {
    FeasibilityReport rep;
    rep.c1_slack = cfg.p_max_w() - pre.total_power();
    double worst = std::max(0.0, -rep.c1_slack);
    rep.feasible = rep.c1_slack >= -tol_c1_rel * cfg.p_max_w();

    if (checks.self_sustain) {
        rep.c3_slack = harvested_power(ch, sched, pre, cfg) - irs_consumption(sched, cfg);
        worst = std::max(worst, -rep.c3_slack);
        if (rep.c3_slack < -tol_c3_w) rep.feasible = false;
    }

    if (checks.discrete_modes) {
        if (sched.form() == ScheduleForm::kContinuous) {
            rep.binary_ok = false;
            rep.phase_in_set = false;
            rep.feasible = false;
            worst = std::max(worst, 1.0);
        } else {
            const Eigen::MatrixXd& S = sched.S();
            for (int n = 0; n < S.cols() && rep.binary_ok; ++n) {
                double colsum = 0.0;
                for (int i = 0; i < S.rows(); ++i) {
                    if (S(i, n) != 0.0 && S(i, n) != 1.0) rep.binary_ok = false;
                    colsum += S(i, n);
                }
                if (colsum > 1.0) rep.binary_ok = false;
            }
            // With a valid binary S, alpha is a mode-set member by
            // construction; verify nonetheless (exact membership).
            const std::vector<cd> modes = mode_set(sched.b());
            for (int n = 0; n < sched.size() && rep.phase_in_set; ++n) {
                bool found = false;
                for (const cd& f : modes)
                    if (sched.alpha_tilde()(n) == f) { found = true; break; }
                rep.phase_in_set = found;
            }
            if (!rep.binary_ok || !rep.phase_in_set) {
                rep.feasible = false;
                worst = std::max(worst, 1.0);
            }
        }
    } else if (sched.form() == ScheduleForm::kContinuous) {
        // Idealized continuous phases: require unit modulus after projection.
        for (int n = 0; n < sched.size(); ++n) {
            const double dev = std::abs(std::abs(sched.alpha_tilde()(n)) - 1.0);
            if (dev > 1e-9) {
                rep.phase_in_set = false;
                rep.feasible = false;
                worst = std::max(worst, dev);
            }
        }
    }

    rep.worst_violation = worst;
    return rep;
}

}  // namespace ssirs
