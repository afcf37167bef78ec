#pragma once

// Reflecting-panel schedule design: iterative convex-surrogate optimization of
// the per-element mode weights S and the aggregate reflection vector v, with
// slack variables splitting each user's desired-signal and interference
// powers.  Binary mode selection is recovered through an exact-penalty term
// that is escalated across rounds, followed by deterministic rounding with a
// greedy repair pass that restores the harvested-power balance.
//
// Variable layout of the subproblem (all real):
//   [ S column-major | Re/Im v interleaved | xi' (active users) |
//     iota' (users with interference) | tau' (harvest aggregate) ]
// xi/iota are scaled by each user's noise power and tau by the panel's total
// standby draw so every coordinate is O(1).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ssirs/channel.hpp"
#include "ssirs/config.hpp"
#include "ssirs/convex/problem.hpp"
#include "ssirs/convex/solver.hpp"
#include "ssirs/metrics.hpp"
#include "ssirs/modes.hpp"
#include "ssirs/precoder.hpp"
#include "ssirs/schedule.hpp"
#include "ssirs/units.hpp"

namespace ssirs {

// Derivative of the concave interference term -log2(sigma2 + iota).
inline double grad_D2(double iota, double sigma2) {
    return -1.0 / (kLn2 * (sigma2 + iota));
}

// Iterate of the schedule subproblem.
struct Sp2State {
    Eigen::MatrixXd S;       // mode weights, one row per mode (row 0 harvests
                             // when the mode table starts with the off state)
    Eigen::VectorXcd v;      // conjugated aggregate reflection coefficients
    Eigen::VectorXd xi;      // per-user desired-signal slack, watts
    Eigen::VectorXd iota;    // per-user interference slack, watts
    double penalty_weight = 0.0;
    std::vector<double> objective_trace;  // surrogate optima, current round
    int t2 = 0;                           // inner iterations consumed
};

// Mode table the subproblem optimizes over: complex values (zero = harvest)
// plus each row's index in the full mode set of the bit resolution.
struct Sp2ModeSet {
    std::vector<cd> values;
    std::vector<int> mode_index;
    bool has_harvest = false;

    int rows() const { return static_cast<int>(values.size()); }

    static Sp2ModeSet full(int b) {
        Sp2ModeSet m;
        m.values = mode_set(b);
        m.mode_index.resize(m.values.size());
        std::iota(m.mode_index.begin(), m.mode_index.end(), 0);
        m.has_harvest = true;
        return m;
    }

    // Reflection-only table (no off state): phase rows of the full set.
    static Sp2ModeSet reflect_only(int b) {
        Sp2ModeSet m;
        const auto f = mode_set(b);
        m.values.assign(f.begin() + 1, f.end());
        m.mode_index.resize(m.values.size());
        std::iota(m.mode_index.begin(), m.mode_index.end(), 1);
        m.has_harvest = false;
        return m;
    }
};

// Fixed per-user data of the schedule subproblem: direct-link gains and
// cascaded responses for every active transmit vector.
struct Sp2UserData {
    bool active = false;          // carries slack variables
    cd c_self{};                  // h_d,k^H w_k
    Eigen::VectorXcd u_self;      // L_k w_k
    std::vector<cd> c_cross;      // h_d,k^H w_j over active j != k
    std::vector<Eigen::VectorXcd> u_cross;  // L_k w_j over the same j
};

struct Sp2Coefficients {
    std::vector<Sp2UserData> users;
    Eigen::VectorXd q;        // per-element incident RF power sum_k |(G w_k)_n|^2
    Eigen::VectorXd sigma2;   // per-user noise power
    int num_active = 0;
};

inline Sp2Coefficients sp2_coefficients(const ChannelRealization& ch,
                                        const PrecoderSet& pre,
                                        const ScenarioConfig& cfg) {
    const int K = pre.users();
    const int N = static_cast<int>(ch.G.rows());
    Sp2Coefficients out;
    out.sigma2 = ch.sigma_k2;
    out.users.resize(K);
    out.q = Eigen::VectorXd::Zero(N);
    const double wtol = 1e-12 * cfg.p_max_w();
    std::vector<char> act(K);
    for (int k = 0; k < K; ++k) {
        act[k] = pre.w(k).squaredNorm() > wtol;
        if (act[k]) {
            out.q += (ch.G * pre.w(k)).cwiseAbs2();
            ++out.num_active;
        }
    }
    for (int k = 0; k < K; ++k) {
        auto& u = out.users[k];
        u.active = act[k] != 0;
        if (!u.active) continue;
        const Eigen::MatrixXcd Lk = cascade_matrix(ch, k);
        u.c_self = ch.h_d.col(k).dot(pre.w(k));
        u.u_self = Lk * pre.w(k);
        for (int j = 0; j < K; ++j) {
            if (j == k || !act[j]) continue;
            u.c_cross.push_back(ch.h_d.col(k).dot(pre.w(j)));
            u.u_cross.push_back(Lk * pre.w(j));
        }
    }
    return out;
}

// Rebuilds beam vectors from lifted covariances; refuses inputs that are not
// (numerically) rank-one since the schedule subproblem needs vectors.
inline PrecoderSet precoders_from_lifted(const std::vector<Eigen::MatrixXcd>& lifted,
                                         double ratio_tol = 1e-6) {
    const int K = static_cast<int>(lifted.size());
    if (K == 0) throw std::invalid_argument("precoders_from_lifted: empty input");
    const int M = static_cast<int>(lifted[0].rows());
    Eigen::MatrixXcd W(M, K);
    for (int k = 0; k < K; ++k) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(lifted[k]);
        const auto& ev = es.eigenvalues();
        const double l1 = ev(M - 1);
        const double l2 = (M > 1) ? std::max(0.0, ev(M - 2)) : 0.0;
        if (l1 <= 0.0) {
            W.col(k).setZero();
            continue;
        }
        if (l2 / l1 > ratio_tol)
            throw std::invalid_argument(
                "precoders_from_lifted: covariance is not rank-one; the "
                "schedule subproblem needs beam vectors");
        W.col(k) = std::sqrt(l1) * es.eigenvectors().col(M - 1);
    }
    return PrecoderSet::from_columns(W);
}

// Coordinate map of an assembled subproblem.
struct Sp2Layout {
    int rows = 0, elems = 0;  // mode rows R, panel size N
    int base_v = 0;           // first of the 2N interleaved Re/Im coordinates
    std::vector<int> xi_index, iota_index;  // per user; -1 when absent
    int tau_index = -1;       // scaled harvest-balance aggregate, -1 if off
    int n = 0;
    Eigen::VectorXd sigma2;
    Sp2ModeSet modes;
    Eigen::VectorXd tau_coeffs;  // tau' = tau_coeffs . s_harvest_row
    double tau_min = 1.0;        // box lower bound on tau'

    int idx_s(int i, int col) const { return col * rows + i; }
    int idx_vre(int col) const { return base_v + 2 * col; }
    int idx_vim(int col) const { return base_v + 2 * col + 1; }
};

struct Sp2Problem {
    convex::ConvexProblem problem;
    Sp2Layout layout;
};

namespace detail {

// Realified response of one cross term d = c + v^H u as d_re = c_re + r.z,
// d_im = c_im + s.z over z = (Re v_0, Im v_0, Re v_1, ...).
struct RealifiedTerm {
    double c_re = 0.0, c_im = 0.0;
    Eigen::VectorXd r, s;
};

// Harvest-balance aggregate: with fixed transmit vectors the power balance is
// linear in the harvesting weights, sum_n a_n s_{0,n} >= N * P_draw with
// a_n = P_draw + eta * (q_n + sigma_a^2).  Normalizing by max_n a_n keeps the
// coupling equality row and the box bound well-scaled at any draw level.
inline void tau_terms(const Eigen::VectorXd& q, const ScenarioConfig& cfg,
                      Eigen::VectorXd& coeffs, double& tau_min) {
    const int N = static_cast<int>(q.size());
    if (N == 0) {  // no panel: the balance is vacuous (nothing draws power)
        coeffs.resize(0);
        tau_min = 0.0;
        return;
    }
    coeffs.resize(N);
    for (int n = 0; n < N; ++n)
        coeffs(n) = cfg.p_irs_w() + cfg.eta_h * (q(n) + cfg.sigma_a2());
    const double den = coeffs.maxCoeff();
    coeffs /= den;
    tau_min = N * cfg.p_irs_w() / den;
}

inline RealifiedTerm realify_term(const cd& c, const Eigen::VectorXcd& u) {
    const int N = static_cast<int>(u.size());
    RealifiedTerm t;
    t.c_re = c.real();
    t.c_im = c.imag();
    t.r.resize(2 * N);
    t.s.resize(2 * N);
    for (int n = 0; n < N; ++n) {
        t.r(2 * n) = u(n).real();
        t.r(2 * n + 1) = u(n).imag();
        t.s(2 * n) = u(n).imag();
        t.s(2 * n + 1) = -u(n).real();
    }
    return t;
}

// Affine cap on the desired-signal slack: xi' minus the surrogate expansion
// of |c + v^H u|^2 around v_t, divided by the user's noise power.  The
// surrogate never exceeds the true signal power, so points satisfying the cap
// satisfy the exact constraint as well.
inline convex::Constraint make_signal_cap(const std::string& name, int base_v, int N,
                                          int xi_coord, const cd& c,
                                          const Eigen::VectorXcd& u,
                                          const Eigen::VectorXcd& v_t, double sigma2) {
    const cd beta = v_t.dot(u);  // v_t^H u
    const double c0 = (std::norm(c) - std::norm(beta)) / sigma2;
    const Eigen::VectorXcd w = (2.0 * std::conj(c + beta) / sigma2) * u;

    auto gcoef = std::make_shared<Eigen::VectorXd>(2 * N + 1);
    for (int n = 0; n < N; ++n) {
        (*gcoef)(2 * n) = -w(n).real();
        (*gcoef)(2 * n + 1) = -w(n).imag();
    }
    (*gcoef)(2 * N) = 1.0;

    convex::Constraint con;
    con.name = name;
    con.support.resize(2 * N + 1);
    std::iota(con.support.begin(), con.support.end() - 1, base_v);
    con.support.back() = xi_coord;
    con.value = [gcoef, c0](const Eigen::VectorXd& xs) { return gcoef->dot(xs) - c0; };
    con.grad = [gcoef](const Eigen::VectorXd&) { return *gcoef; };
    return con;
}

// Convex quadratic floor on the interference slack:
//   sum_j |c_j + v^H u_j|^2 / sigma2 - iota' <= 0.
inline convex::Constraint make_interference_cap(const std::string& name, int base_v, int N,
                                                int iota_coord, const std::vector<cd>& c,
                                                const std::vector<Eigen::VectorXcd>& u,
                                                double sigma2) {
    auto terms = std::make_shared<std::vector<RealifiedTerm>>();
    for (size_t j = 0; j < c.size(); ++j) terms->push_back(realify_term(c[j], u[j]));

    auto hess = std::make_shared<Eigen::MatrixXd>(
        Eigen::MatrixXd::Zero(2 * N + 1, 2 * N + 1));
    for (const auto& t : *terms) {
        hess->topLeftCorner(2 * N, 2 * N) +=
            (2.0 / sigma2) * (t.r * t.r.transpose() + t.s * t.s.transpose());
    }

    convex::Constraint con;
    con.name = name;
    con.support.resize(2 * N + 1);
    std::iota(con.support.begin(), con.support.end() - 1, base_v);
    con.support.back() = iota_coord;
    con.value = [terms, sigma2, N](const Eigen::VectorXd& xs) {
        const auto z = xs.head(2 * N);
        double acc = 0.0;
        for (const auto& t : *terms) {
            const double dre = t.c_re + t.r.dot(z);
            const double dim = t.c_im + t.s.dot(z);
            acc += dre * dre + dim * dim;
        }
        return acc / sigma2 - xs(2 * N);
    };
    con.grad = [terms, sigma2, N](const Eigen::VectorXd& xs) {
        const auto z = xs.head(2 * N);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * N + 1);
        for (const auto& t : *terms) {
            const double dre = t.c_re + t.r.dot(z);
            const double dim = t.c_im + t.s.dot(z);
            g.head(2 * N) += (2.0 / sigma2) * (dre * t.r + dim * t.s);
        }
        g(2 * N) = -1.0;
        return g;
    };
    con.hess = [hess](const Eigen::VectorXd&) { return *hess; };
    return con;
}

}  // namespace detail

// Assembles the convex surrogate around the expansion point `st` for fixed
// transmit vectors.  `enforce_c3` keeps the harvested-power balance (requires
// a mode table with the off state).
inline Sp2Problem build_schedule_problem(const Sp2State& st, const Sp2Coefficients& co,
                                         const Sp2ModeSet& modes, const ScenarioConfig& cfg,
                                         double lambda, bool enforce_c3) {
    const int R = modes.rows();
    const int N = static_cast<int>(st.S.cols());
    const int K = static_cast<int>(co.users.size());
    if (st.S.rows() != R)
        throw std::invalid_argument("build_schedule_problem: weight rows do not match the mode table");
    if (static_cast<int>(st.v.size()) != N)
        throw std::invalid_argument("build_schedule_problem: v size mismatch");
    if (enforce_c3 && !modes.has_harvest)
        throw std::invalid_argument(
            "build_schedule_problem: the power balance needs the harvesting mode");
    if (N == 0) enforce_c3 = false;  // empty panel draws nothing

    Sp2Problem out;
    auto& L = out.layout;
    L.rows = R;
    L.elems = N;
    L.sigma2 = co.sigma2;
    L.modes = modes;
    L.base_v = R * N;
    int pos = L.base_v + 2 * N;
    L.xi_index.assign(K, -1);
    L.iota_index.assign(K, -1);
    for (int k = 0; k < K; ++k)
        if (co.users[k].active) L.xi_index[k] = pos++;
    for (int k = 0; k < K; ++k)
        if (co.users[k].active && !co.users[k].c_cross.empty()) L.iota_index[k] = pos++;
    if (enforce_c3) {
        L.tau_index = pos++;
        detail::tau_terms(co.q, cfg, L.tau_coeffs, L.tau_min);
    }
    L.n = pos;

    auto& p = out.problem;
    p.init(L.n);

    // Box bounds.  The reflection coordinates get a redundant box (|v_n| <= 1
    // already follows from the weight rows) that keeps the Newton systems
    // positive definite.
    for (int i = 0; i < L.base_v; ++i) {
        p.lower(i) = 0.0;
        p.upper(i) = 1.0;
    }
    for (int i = L.base_v; i < L.base_v + 2 * N; ++i) {
        p.lower(i) = -1.1;
        p.upper(i) = 1.1;
    }
    for (int k = 0; k < K; ++k) {
        if (L.xi_index[k] >= 0) p.lower(L.xi_index[k]) = 0.0;
        if (L.iota_index[k] >= 0) p.lower(L.iota_index[k]) = 0.0;
    }
    if (L.tau_index >= 0) p.lower(L.tau_index) = L.tau_min;

    // Objective: per-user rate surrogate over the scaled slacks plus the
    // linearized binary-exactness penalty.  Users without transmit power
    // contribute only their noise-floor constant.
    double const_base = 0.0;
    for (int k = 0; k < K; ++k) const_base -= std::log2(co.sigma2(k));

    struct ObjData {
        double const_base = 0.0, lambda = 0.0, pen_const = 0.0;
        Eigen::VectorXd pen_lin;             // over the S block
        std::vector<int> xi_idx, iota_idx;   // aligned active-user lists
        std::vector<double> iota_t;          // scaled expansion values
        int n = 0, s_count = 0;
    };
    auto od = std::make_shared<ObjData>();
    od->const_base = const_base;
    od->lambda = lambda;
    od->n = L.n;
    od->s_count = R * N;
    od->pen_lin.resize(R * N);
    for (int n = 0; n < N; ++n)
        for (int i = 0; i < R; ++i) {
            const double s_t = st.S(i, n);
            od->pen_lin(L.idx_s(i, n)) = lambda * (1.0 - 2.0 * s_t);
            od->pen_const += lambda * s_t * s_t;
        }
    for (int k = 0; k < K; ++k) {
        if (L.xi_index[k] < 0) continue;
        od->xi_idx.push_back(L.xi_index[k]);
        od->iota_idx.push_back(L.iota_index[k]);
        od->iota_t.push_back(L.iota_index[k] >= 0 ? st.iota(k) / co.sigma2(k) : 0.0);
    }

    p.obj.value = [od](const Eigen::VectorXd& x) {
        double f = od->const_base + od->pen_const +
                   od->pen_lin.dot(x.head(od->s_count));
        for (size_t a = 0; a < od->xi_idx.size(); ++a) {
            const double xk = x(od->xi_idx[a]);
            const double ik = od->iota_idx[a] >= 0 ? x(od->iota_idx[a]) : 0.0;
            const double arg = 1.0 + xk + ik;
            if (arg <= 0.0) return convex::kInf;
            f -= std::log2(arg);
            if (od->iota_idx[a] >= 0) {
                const double it = od->iota_t[a];
                f += (ik - it) / (kLn2 * (1.0 + it)) + std::log2(1.0 + it);
            }
        }
        return f;
    };
    p.obj.grad = [od](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(od->n);
        g.head(od->s_count) = od->pen_lin;
        for (size_t a = 0; a < od->xi_idx.size(); ++a) {
            const double xk = x(od->xi_idx[a]);
            const double ik = od->iota_idx[a] >= 0 ? x(od->iota_idx[a]) : 0.0;
            const double d = -1.0 / (kLn2 * (1.0 + xk + ik));
            g(od->xi_idx[a]) = d;
            if (od->iota_idx[a] >= 0)
                g(od->iota_idx[a]) = d + 1.0 / (kLn2 * (1.0 + od->iota_t[a]));
        }
        return g;
    };
    for (size_t a = 0; a < od->xi_idx.size(); ++a) p.obj.hess_support.push_back(od->xi_idx[a]);
    for (size_t a = 0; a < od->xi_idx.size(); ++a)
        if (od->iota_idx[a] >= 0) p.obj.hess_support.push_back(od->iota_idx[a]);
    p.obj.hess = [od](const Eigen::VectorXd& x) {
        const int na = static_cast<int>(od->xi_idx.size());
        int with_iota = 0;
        for (int a = 0; a < na; ++a)
            if (od->iota_idx[a] >= 0) ++with_iota;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(na + with_iota, na + with_iota);
        int ipos = na;
        for (int a = 0; a < na; ++a) {
            const double xk = x(od->xi_idx[a]);
            const double ik = od->iota_idx[a] >= 0 ? x(od->iota_idx[a]) : 0.0;
            const double arg = 1.0 + xk + ik;
            const double d = 1.0 / (kLn2 * arg * arg);
            H(a, a) += d;
            if (od->iota_idx[a] >= 0) {
                H(a, ipos) += d;
                H(ipos, a) += d;
                H(ipos, ipos) += d;
                ++ipos;
            }
        }
        return H;
    };

    // One mode-budget cap per element column.
    for (int n = 0; n < N; ++n) {
        convex::Constraint con;
        con.name = "mode-budget-" + std::to_string(n);
        con.support.resize(R);
        std::iota(con.support.begin(), con.support.end(), L.idx_s(0, n));
        con.value = [](const Eigen::VectorXd& xs) { return xs.sum() - 1.0; };
        con.grad = [R](const Eigen::VectorXd&) { return Eigen::VectorXd::Ones(R); };
        p.ineq.push_back(std::move(con));
    }

    // Per-user caps on the slacks.
    for (int k = 0; k < K; ++k) {
        const auto& u = co.users[k];
        if (L.xi_index[k] >= 0)
            p.ineq.push_back(detail::make_signal_cap(
                "signal-cap-" + std::to_string(k), L.base_v, N, L.xi_index[k], u.c_self,
                u.u_self, st.v, co.sigma2(k)));
        if (L.iota_index[k] >= 0)
            p.ineq.push_back(detail::make_interference_cap(
                "interference-cap-" + std::to_string(k), L.base_v, N, L.iota_index[k],
                u.c_cross, u.u_cross, co.sigma2(k)));
    }

    // Coupling equalities: v_n equals the mode-weighted combination of the
    // conjugated mode values, and tau' aggregates the harvest balance.
    int row = 0;
    for (int n = 0; n < N; ++n) {
        p.eq_triplets.emplace_back(row, L.idx_vre(n), 1.0);
        for (int i = 0; i < R; ++i) {
            const double cre = std::conj(modes.values[i]).real();
            if (cre != 0.0) p.eq_triplets.emplace_back(row, L.idx_s(i, n), -cre);
        }
        ++row;
        p.eq_triplets.emplace_back(row, L.idx_vim(n), 1.0);
        for (int i = 0; i < R; ++i) {
            const double cim = std::conj(modes.values[i]).imag();
            if (cim != 0.0) p.eq_triplets.emplace_back(row, L.idx_s(i, n), -cim);
        }
        ++row;
    }
    if (L.tau_index >= 0) {
        p.eq_triplets.emplace_back(row, L.tau_index, 1.0);
        for (int n = 0; n < N; ++n)
            p.eq_triplets.emplace_back(row, L.idx_s(0, n), -L.tau_coeffs(n));
        ++row;
    }
    p.n_eq = row;
    p.eq_rhs = Eigen::VectorXd::Zero(row);

    return out;
}

// Packs a state into the subproblem coordinates (slack scaling applied, the
// harvest aggregate recomputed so its equality holds exactly).
inline Eigen::VectorXd sp2_pack(const Sp2State& st, const Sp2Layout& L) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(L.n);
    for (int n = 0; n < L.elems; ++n)
        for (int i = 0; i < L.rows; ++i) x(L.idx_s(i, n)) = st.S(i, n);
    for (int n = 0; n < L.elems; ++n) {
        x(L.idx_vre(n)) = st.v(n).real();
        x(L.idx_vim(n)) = st.v(n).imag();
    }
    for (size_t k = 0; k < L.xi_index.size(); ++k) {
        if (L.xi_index[k] >= 0) x(L.xi_index[k]) = st.xi(k) / L.sigma2(k);
        if (L.iota_index[k] >= 0) x(L.iota_index[k]) = st.iota(k) / L.sigma2(k);
    }
    if (L.tau_index >= 0)
        x(L.tau_index) = L.tau_coeffs.dot(st.S.row(0).transpose());
    return x;
}

inline Sp2State sp2_unpack(const Eigen::VectorXd& x, const Sp2Layout& L) {
    Sp2State st;
    const int K = static_cast<int>(L.xi_index.size());
    st.S.resize(L.rows, L.elems);
    for (int n = 0; n < L.elems; ++n)
        for (int i = 0; i < L.rows; ++i) st.S(i, n) = x(L.idx_s(i, n));
    st.v.resize(L.elems);
    if (L.rows > 0) {
        // The reflection coordinates are defined by the mode weights; rebuild
        // them from S so the coupling holds exactly despite solver drift.
        for (int n = 0; n < L.elems; ++n) {
            cd acc(0.0, 0.0);
            for (int i = 0; i < L.rows; ++i)
                acc += st.S(i, n) * std::conj(L.modes.values[i]);
            st.v(n) = acc;
        }
    } else {
        for (int n = 0; n < L.elems; ++n)
            st.v(n) = cd(x(L.idx_vre(n)), x(L.idx_vim(n)));
    }
    st.xi = Eigen::VectorXd::Zero(K);
    st.iota = Eigen::VectorXd::Zero(K);
    for (int k = 0; k < K; ++k) {
        if (L.xi_index[k] >= 0) st.xi(k) = x(L.xi_index[k]) * L.sigma2(k);
        if (L.iota_index[k] >= 0) st.iota(k) = x(L.iota_index[k]) * L.sigma2(k);
    }
    return st;
}

// Wrapper for the standard mode table with the power balance on.
inline convex::ConvexProblem build_sp2(const Sp2State& st, const ChannelRealization& ch,
                                       const PrecoderSet& W_fixed, const ScenarioConfig& cfg,
                                       double lambda) {
    const Sp2Coefficients co = sp2_coefficients(ch, W_fixed, cfg);
    return build_schedule_problem(st, co, Sp2ModeSet::full(cfg.b), cfg, lambda,
                                  /*enforce_c3=*/true)
        .problem;
}

// Overload taking lifted covariances; throws if any is not rank-one.
inline convex::ConvexProblem build_sp2(const Sp2State& st, const ChannelRealization& ch,
                                       const std::vector<Eigen::MatrixXcd>& W_lifted,
                                       const ScenarioConfig& cfg, double lambda) {
    return build_sp2(st, ch, precoders_from_lifted(W_lifted), cfg, lambda);
}

// Strictly interior starting state built from a (possibly binary) weight
// matrix: weights are pulled off the box faces, the coupling equalities are
// satisfied exactly, and the slacks start strictly inside their caps.  The
// softening amount respects the harvest balance margin; an infeasible seed
// falls back to all-harvest.
inline Sp2State sp2_initial_state(const Sp2Coefficients& co, const Sp2ModeSet& modes,
                                  const ScenarioConfig& cfg, Eigen::MatrixXd S0,
                                  bool enforce_c3) {
    const int R = modes.rows();
    const int N = static_cast<int>(S0.cols());
    const int K = static_cast<int>(co.users.size());
    if (S0.rows() != R)
        throw std::invalid_argument("sp2_initial_state: weight rows do not match the mode table");
    if (N == 0) enforce_c3 = false;

    // Defensive normalization of the seed.
    S0 = S0.cwiseMax(0.0).cwiseMin(1.0);
    for (int n = 0; n < N; ++n) {
        const double cs = S0.col(n).sum();
        if (cs > 1.0) S0.col(n) /= cs;
    }

    double eps = 1e-3;
    if (enforce_c3) {
        if (!modes.has_harvest)
            throw std::invalid_argument("sp2_initial_state: the power balance needs the harvesting mode");
        Eigen::VectorXd tau_coeffs;
        double tau_min = 0.0;
        detail::tau_terms(co.q, cfg, tau_coeffs, tau_min);
        double tau0 = tau_coeffs.dot(S0.row(0).transpose());
        if (tau0 <= tau_min + 1e-12 * std::max(1.0, tau_min)) {
            // Seed cannot power the panel; restart from all-harvest.
            S0.setZero();
            S0.row(0).setOnes();
            tau0 = tau_coeffs.sum();
        }
        const double csum = tau_coeffs.sum();
        const double denom = tau0 - csum / (2.0 * R);
        if (denom > 0.0) eps = std::min(eps, 0.5 * (tau0 - tau_min) / denom);
        eps = std::max(eps, 1e-300);
    }

    Sp2State st;
    const double delta = eps / (2.0 * R);
    st.S = (1.0 - eps) * S0;
    st.S.array() += delta;

    st.v.resize(N);
    for (int n = 0; n < N; ++n) {
        cd acc(0.0, 0.0);
        for (int i = 0; i < R; ++i) acc += st.S(i, n) * std::conj(modes.values[i]);
        st.v(n) = acc;
    }

    st.xi = Eigen::VectorXd::Zero(K);
    st.iota = Eigen::VectorXd::Zero(K);
    for (int k = 0; k < K; ++k) {
        const auto& u = co.users[k];
        if (!u.active) continue;
        st.xi(k) = 0.5 * std::norm(u.c_self + st.v.dot(u.u_self));
        if (!u.c_cross.empty()) {
            double interf = 0.0;
            for (size_t j = 0; j < u.c_cross.size(); ++j)
                interf += std::norm(u.c_cross[j] + st.v.dot(u.u_cross[j]));
            st.iota(k) = 1.5 * interf + 1e-3 * co.sigma2(k);
        }
    }
    return st;
}

namespace detail {

// Restores strict feasibility of a warm-start vector: evaluates each slack
// cap at the hint and, when the margin is too thin, moves the slack
// coordinate (its coefficient in the cap is exactly +/-1, so the adjustment
// is exact).  The harvest aggregate is lifted off its box bound.  For hints
// packed from a solved iterate the adjustments are O(1e-9) relative; only the
// hint is touched, never the reported state.
inline void guard_hint(Eigen::VectorXd& x, const Sp2Problem& sp) {
    for (const auto& con : sp.problem.ineq) {
        const bool sig = con.name.rfind("signal-cap-", 0) == 0;
        const bool intf = !sig && con.name.rfind("interference-cap-", 0) == 0;
        if (!sig && !intf) continue;
        Eigen::VectorXd xs(con.support.size());
        for (size_t i = 0; i < con.support.size(); ++i) xs(i) = x(con.support[i]);
        const int coord = con.support.back();
        const double margin = 1e-9 * (1.0 + std::abs(x(coord)));
        const double g = con.value(xs);
        if (g > -margin) {
            if (sig)
                x(coord) = std::max(x(coord) - (g + margin), 0.0);
            else
                x(coord) += g + margin;
        }
    }
    const auto& L = sp.layout;
    if (L.tau_index >= 0)
        x(L.tau_index) =
            std::max(x(L.tau_index), L.tau_min + 1e-12 * (1.0 + L.tau_min));
}

// Re-centers the current iterate strictly inside the feasible region of the
// subproblem anchored at `st`: mode weights are pulled off their box faces
// (coupling kept exact) and the slacks are re-derived midway into the caps of
// the new subproblem.  Restarting a cold barrier solve here skips the long
// crawl away from the previous optimum's boundary.
inline Sp2State interior_restart(const Sp2State& st, const Sp2Coefficients& co,
                                 const Sp2ModeSet& modes, const ScenarioConfig& cfg,
                                 bool enforce_c3) {
    Sp2State hs = sp2_initial_state(co, modes, cfg, st.S, enforce_c3);
    for (size_t k = 0; k < co.users.size(); ++k) {
        const auto& u = co.users[k];
        if (!u.active) continue;
        // The signal cap is the affine under-estimator anchored at st.v;
        // evaluate it at the softened reflection vector and sit halfway in.
        const cd beta = st.v.dot(u.u_self);
        const double bound = std::norm(u.c_self) - std::norm(beta) +
                             2.0 * (std::conj(u.c_self + beta) * hs.v.dot(u.u_self)).real();
        hs.xi(k) = 0.5 * std::max(bound, 0.0);
    }
    return hs;
}

}  // namespace detail

// Relaxed per-user rate implied by the slack variables.
inline double slack_rate(const Sp2State& st, const Sp2Coefficients& co) {
    double r = 0.0;
    for (size_t k = 0; k < co.users.size(); ++k)
        if (co.users[k].active)
            r += std::log2(1.0 + st.xi(k) / (co.sigma2(k) + st.iota(k)));
    return r;
}

// Deterministic rounding: per element pick the heaviest mode row (ties prefer
// harvesting, then the lowest row), then greedily flip reflecting elements
// back to harvesting -- cheapest sum-rate loss first -- until the harvested
// power covers the panel draw.
inline IrsSchedule round_schedule_generic(const Eigen::MatrixXd& S,
                                          const ChannelRealization& ch,
                                          const PrecoderSet& pre, const ScenarioConfig& cfg,
                                          const Sp2ModeSet& modes, bool repair_c3,
                                          int* repair_flips = nullptr) {
    const int R = modes.rows();
    const int N = static_cast<int>(S.cols());
    if (S.rows() != R)
        throw std::invalid_argument("round_schedule: weight rows do not match the mode table");

    std::vector<int> idx(N);
    for (int n = 0; n < N; ++n) {
        int best = 0;
        for (int i = 1; i < R; ++i)
            if (S(i, n) > S(best, n)) best = i;
        // Ties prefer the harvesting row, then the lowest phase row.
        for (int i = 0; i < R; ++i)
            if (S(i, n) == S(best, n)) {
                best = i;
                break;
            }
        idx[n] = modes.mode_index[best];
    }

    auto make = [&](const std::vector<int>& m) { return IrsSchedule::binary(cfg.b, m); };
    IrsSchedule sched = make(idx);
    int flips = 0;
    if (repair_c3 && modes.has_harvest) {
        while (irs_consumption(sched, cfg) >
               harvested_power(ch, sched, pre, cfg) + 1e-15) {
            int pick = -1;
            double best_drop = convex::kInf;
            const double base = sum_rate(ch, sched, pre);
            for (int n = 0; n < N; ++n) {
                if (idx[n] == 0) continue;
                std::vector<int> cand = idx;
                cand[n] = 0;
                const double drop = base - sum_rate(ch, make(cand), pre);
                if (drop < best_drop) {
                    best_drop = drop;
                    pick = n;
                }
            }
            if (pick < 0) break;  // already all-harvest
            idx[pick] = 0;
            sched = make(idx);
            ++flips;
        }
    }
    if (repair_flips) *repair_flips = flips;
    return sched;
}

inline IrsSchedule round_schedule(const Eigen::MatrixXd& S_relaxed,
                                  const ChannelRealization& ch, const PrecoderSet& W_fixed,
                                  const ScenarioConfig& cfg) {
    return round_schedule_generic(S_relaxed, ch, W_fixed, cfg, Sp2ModeSet::full(cfg.b),
                                  /*repair_c3=*/true);
}

struct Alg2Params {
    int t2_max = 50;            // total inner iterations across penalty rounds
    double tol_obj = 1e-5;      // within-round surrogate convergence
    double binary_tol = 1e-2;   // max |s - round(s)| required to stop
    bool penalty_enabled = true;
    double lambda_init_scale = 1e-3;  // x |initial objective|
    double lambda_growth = 5.0;
    double lambda_cap_scale = 1e4;    // x |initial objective|
    convex::SolverOptions solver;
    // Cap on the duality gap used when restarting next to the previous
    // optimum.  A re-solve takes the short path only when a measured bound on
    // the hint's suboptimality fits under this cap AND the result lands at or
    // below the surrogate's value at the expansion point; otherwise (and
    // whenever the estimate is unavailable) it restarts cold from a strictly
    // interior re-centering of the iterate.  Zero forces always-cold solves.
    double warm_gap = 1e-2;
    std::function<void(const Sp2State&)> iterate_hook;

    Alg2Params() { solver.tol = 1e-7; }
};

struct Alg2Result {
    Sp2State state;
    IrsSchedule schedule = IrsSchedule::all_harvest(1, 1);
    double relaxed_objective = std::numeric_limits<double>::quiet_NaN();
    double relaxed_rate = 0.0;
    double rate = 0.0;  // true sum-rate of the rounded schedule
    bool converged = false;
    // A subproblem solve could not descend below its own expansion value
    // (numerical stall, typically a penalty-weight cycle); the loop kept the
    // previous iterate and went straight to rounding.
    bool stalled = false;
    bool repaired = false;
    int repair_flips = 0;
    int rounds = 0;
    // A subproblem solver error aborted the loop (message holds the detail);
    // distinct from the benign notes the no-signal early exit leaves.
    bool solve_failed = false;
    std::string message;
};

// Schedule design for fixed transmit vectors over an arbitrary mode table.
inline Alg2Result run_algorithm2_generic(const ChannelRealization& ch, const PrecoderSet& pre,
                                         const ScenarioConfig& cfg, const Sp2ModeSet& modes,
                                         const Eigen::MatrixXd& S0, const Alg2Params& params,
                                         bool enforce_c3) {
    const int N = static_cast<int>(ch.G.rows());
    if (N == 0) enforce_c3 = false;
    Alg2Result out;
    const Sp2Coefficients co = sp2_coefficients(ch, pre, cfg);

    if (co.num_active == 0) {
        // Nothing to reflect or harvest beyond ambient noise: the off state
        // is optimal (every schedule yields zero rate).
        out.schedule = modes.has_harvest ? IrsSchedule::all_harvest(cfg.b, N)
                                         : IrsSchedule::all_reflect(cfg.b, N);
        out.state.S = Eigen::MatrixXd::Zero(modes.rows(), N);
        out.state.S.row(0).setOnes();
        out.state.v = out.schedule.v();
        out.state.xi = Eigen::VectorXd::Zero(pre.users());
        out.state.iota = Eigen::VectorXd::Zero(pre.users());
        out.rate = 0.0;
        out.converged = true;
        out.message = "no transmit signal; keeping the idle schedule";
        return out;
    }

    Sp2State st = sp2_initial_state(co, modes, cfg, S0, enforce_c3);

    // Penalty scale from the unpenalized objective at the start.
    double f0;
    {
        const Sp2Problem probe = build_schedule_problem(st, co, modes, cfg, 0.0, enforce_c3);
        f0 = probe.problem.obj.value(sp2_pack(st, probe.layout));
    }
    double lambda = params.penalty_enabled ? params.lambda_init_scale * std::abs(f0) : 0.0;
    const double lambda_cap = params.lambda_cap_scale * std::abs(f0);

    convex::SolverOptions cold = params.solver;
    cold.initial_gap = 0.0;
    bool binary_ok = false;
    // Suboptimality bookkeeping for the short restart path.  `prev` is the
    // last surrogate optimum (adjusted across penalty escalations so it stays
    // comparable) and `last_move` the last objective decrease; together they
    // bound how far a re-packed optimum sits from the next subproblem's
    // optimum: gap <= (prev - f_hint) + last_move.  The bound trails reality
    // when the moves are growing (e.g. right after a penalty escalation), so
    // the short path is also gated on a non-increasing move trend.
    double prev = convex::kInf;
    double last_move = convex::kInf;
    double move_trend = convex::kInf;
    while (st.t2 < params.t2_max) {
        st.penalty_weight = lambda;
        st.objective_trace.clear();
        ++out.rounds;
        bool round_converged = false;
        while (st.t2 < params.t2_max) {
            const Sp2Problem sp = build_schedule_problem(st, co, modes, cfg, lambda, enforce_c3);
            Eigen::VectorXd hint = sp2_pack(st, sp.layout);
            detail::guard_hint(hint, sp);
            // The surrogate equals the exact penalized objective at its own
            // expansion point, so f_hint upper-bounds the subproblem optimum;
            // any solve landing above it (beyond slop) was inaccurate.
            const double f_hint = sp.problem.obj.value(hint);
            const double slop = 1e-7 * (1.0 + std::abs(f_hint));
            convex::SolveResult r;
            bool ok = false;
            const double subopt = (prev - f_hint) + last_move;
            if (std::isfinite(subopt) && subopt > 0.0 &&
                10.0 * subopt <= params.warm_gap && last_move <= move_trend) {
                convex::SolverOptions near = params.solver;
                near.initial_gap = std::max(10.0 * subopt, 10.0 * params.solver.tol);
                r = convex::solve(sp.problem, hint, near);
                ok = (r.status == convex::SolveStatus::kOptimal ||
                      r.status == convex::SolveStatus::kMaxIter) &&
                     r.objective <= f_hint + slop;
            }
            if (!ok) {
                Eigen::VectorXd restart = sp2_pack(
                    detail::interior_restart(st, co, modes, cfg, enforce_c3), sp.layout);
                detail::guard_hint(restart, sp);
                r = convex::solve_with_phase1(sp.problem, restart, cold);
                ok = r.status == convex::SolveStatus::kOptimal ||
                     r.status == convex::SolveStatus::kMaxIter;
                if (ok && r.objective > f_hint + 1e-6 * (1.0 + std::abs(f_hint))) {
                    // Even the accurate path cannot descend below a feasible
                    // point we already hold: keep that point and stop.
                    out.stalled = true;
                    break;
                }
            }
            if (!ok) {
                out.solve_failed = true;
                out.message = "subproblem solve failed at iteration " +
                              std::to_string(st.t2) + ": " + r.message;
                break;
            }
            Sp2State next = sp2_unpack(r.x, sp.layout);
            next.penalty_weight = lambda;
            next.objective_trace = std::move(st.objective_trace);
            next.t2 = st.t2 + 1;
            st = std::move(next);
            st.objective_trace.push_back(r.objective);
            out.relaxed_objective = r.objective;
            const double moved = std::abs(prev - r.objective);
            if (params.iterate_hook) params.iterate_hook(st);
            move_trend = last_move;
            last_move = moved;
            prev = r.objective;
            if (moved < params.tol_obj) {
                round_converged = true;
                break;
            }
        }
        if (!out.message.empty() || out.stalled) break;

        double dist = 0.0;
        for (int n = 0; n < N; ++n)
            for (int i = 0; i < modes.rows(); ++i)
                dist = std::max(dist, std::abs(st.S(i, n) - std::round(st.S(i, n))));
        binary_ok = dist < params.binary_tol;

        if (!params.penalty_enabled) {
            out.converged = round_converged;
            break;
        }
        if (round_converged && binary_ok) {
            out.converged = true;
            break;
        }
        if (st.t2 >= params.t2_max) break;
        const double next_lambda = std::min(lambda * params.lambda_growth, lambda_cap);
        if (std::isfinite(prev)) {
            // At the expansion point the linearized penalty is exact, so the
            // weight change shifts the last optimum by a computable amount.
            const double pen = (st.S.array() - st.S.array().square()).sum();
            prev += (next_lambda - lambda) * pen;
        }
        lambda = next_lambda;
    }

    out.schedule =
        round_schedule_generic(st.S, ch, pre, cfg, modes, enforce_c3, &out.repair_flips);
    out.repaired = out.repair_flips > 0;
    out.rate = sum_rate(ch, out.schedule, pre);
    out.relaxed_rate = slack_rate(st, co);
    out.state = std::move(st);
    return out;
}

// Spec-shaped entry point: standard mode table, power balance on.
inline Alg2Result run_algorithm2(const ChannelRealization& ch, const PrecoderSet& W_fixed,
                                 const Eigen::MatrixXd& S0, const ScenarioConfig& cfg,
                                 const Alg2Params& params = {}) {
    return run_algorithm2_generic(ch, W_fixed, cfg, Sp2ModeSet::full(cfg.b), S0, params,
                                  /*enforce_c3=*/true);
}

// All-harvest seed matrix for a mode table.
inline Eigen::MatrixXd harvest_seed(const Sp2ModeSet& modes, int N) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(modes.rows(), N);
    S.row(0).setOnes();
    return S;
}

// ---- Continuous reflection relaxation --------------------------------------
//
// Drops the mode weights entirely: every element reflects with |v_n| <= 1
// (convex disc constraints) and no power balance.  Used by the idealized
// comparison scheme; the caller projects the result back to unit modulus.

struct ReflectRelaxParams {
    int max_iter = 50;
    double tol_obj = 1e-5;
    convex::SolverOptions solver;
    // Same semantics as Alg2Params::warm_gap: cap on the short-restart gap;
    // zero forces always-cold solves.
    double warm_gap = 1e-2;

    ReflectRelaxParams() { solver.tol = 1e-7; }
};

struct ReflectRelaxResult {
    Eigen::VectorXcd v;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double relaxed_rate = 0.0;
    bool converged = false;
    bool stalled = false;       // see Alg2Result::stalled
    bool solve_failed = false;  // see Alg2Result::solve_failed
    std::vector<double> objective_trace;
    std::string message;
};

inline ReflectRelaxResult run_reflect_relaxation(const ChannelRealization& ch,
                                                 const PrecoderSet& pre,
                                                 const ScenarioConfig& cfg,
                                                 const ReflectRelaxParams& params = {}) {
    const int N = static_cast<int>(ch.G.rows());
    const int K = pre.users();
    ReflectRelaxResult out;
    const Sp2Coefficients co = sp2_coefficients(ch, pre, cfg);
    if (co.num_active == 0) {
        out.v = Eigen::VectorXcd::Zero(N);
        out.converged = true;
        out.message = "no transmit signal";
        return out;
    }

    // State: v centered at the origin (strictly inside every disc), slacks
    // strictly inside their caps.
    Sp2State st;
    st.S.resize(0, N);
    st.v = Eigen::VectorXcd::Zero(N);
    st.xi = Eigen::VectorXd::Zero(K);
    st.iota = Eigen::VectorXd::Zero(K);
    for (int k = 0; k < K; ++k) {
        const auto& u = co.users[k];
        if (!u.active) continue;
        st.xi(k) = 0.5 * std::norm(u.c_self);
        if (!u.c_cross.empty()) {
            double interf = 0.0;
            for (const auto& c : u.c_cross) interf += std::norm(c);
            st.iota(k) = 1.5 * interf + 1e-3 * co.sigma2(k);
        }
    }

    auto build = [&](const Sp2State& s) {
        Sp2Problem sp;
        auto& L = sp.layout;
        L.rows = 0;
        L.elems = N;
        L.sigma2 = co.sigma2;
        L.base_v = 0;
        int pos = 2 * N;
        L.xi_index.assign(K, -1);
        L.iota_index.assign(K, -1);
        for (int k = 0; k < K; ++k)
            if (co.users[k].active) L.xi_index[k] = pos++;
        for (int k = 0; k < K; ++k)
            if (co.users[k].active && !co.users[k].c_cross.empty()) L.iota_index[k] = pos++;
        L.n = pos;

        auto& p = sp.problem;
        p.init(L.n);
        for (int i = 0; i < 2 * N; ++i) {
            p.lower(i) = -1.1;
            p.upper(i) = 1.1;
        }
        for (int k = 0; k < K; ++k) {
            if (L.xi_index[k] >= 0) p.lower(L.xi_index[k]) = 0.0;
            if (L.iota_index[k] >= 0) p.lower(L.iota_index[k]) = 0.0;
        }

        double const_base = 0.0;
        for (int k = 0; k < K; ++k) const_base -= std::log2(co.sigma2(k));
        struct Od {
            double const_base;
            std::vector<int> xi_idx, iota_idx;
            std::vector<double> iota_t;
            int n;
        };
        auto od = std::make_shared<Od>();
        od->const_base = const_base;
        od->n = L.n;
        for (int k = 0; k < K; ++k) {
            if (L.xi_index[k] < 0) continue;
            od->xi_idx.push_back(L.xi_index[k]);
            od->iota_idx.push_back(L.iota_index[k]);
            od->iota_t.push_back(L.iota_index[k] >= 0 ? s.iota(k) / co.sigma2(k) : 0.0);
        }
        p.obj.value = [od](const Eigen::VectorXd& x) {
            double f = od->const_base;
            for (size_t a = 0; a < od->xi_idx.size(); ++a) {
                const double xk = x(od->xi_idx[a]);
                const double ik = od->iota_idx[a] >= 0 ? x(od->iota_idx[a]) : 0.0;
                const double arg = 1.0 + xk + ik;
                if (arg <= 0.0) return convex::kInf;
                f -= std::log2(arg);
                if (od->iota_idx[a] >= 0) {
                    const double it = od->iota_t[a];
                    f += (ik - it) / (kLn2 * (1.0 + it)) + std::log2(1.0 + it);
                }
            }
            return f;
        };
        p.obj.grad = [od](const Eigen::VectorXd& x) {
            Eigen::VectorXd g = Eigen::VectorXd::Zero(od->n);
            for (size_t a = 0; a < od->xi_idx.size(); ++a) {
                const double xk = x(od->xi_idx[a]);
                const double ik = od->iota_idx[a] >= 0 ? x(od->iota_idx[a]) : 0.0;
                const double d = -1.0 / (kLn2 * (1.0 + xk + ik));
                g(od->xi_idx[a]) = d;
                if (od->iota_idx[a] >= 0)
                    g(od->iota_idx[a]) = d + 1.0 / (kLn2 * (1.0 + od->iota_t[a]));
            }
            return g;
        };
        for (size_t a = 0; a < od->xi_idx.size(); ++a)
            p.obj.hess_support.push_back(od->xi_idx[a]);
        for (size_t a = 0; a < od->xi_idx.size(); ++a)
            if (od->iota_idx[a] >= 0) p.obj.hess_support.push_back(od->iota_idx[a]);
        p.obj.hess = [od](const Eigen::VectorXd& x) {
            const int na = static_cast<int>(od->xi_idx.size());
            int with_iota = 0;
            for (int a = 0; a < na; ++a)
                if (od->iota_idx[a] >= 0) ++with_iota;
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(na + with_iota, na + with_iota);
            int ipos = na;
            for (int a = 0; a < na; ++a) {
                const double xk = x(od->xi_idx[a]);
                const double ik = od->iota_idx[a] >= 0 ? x(od->iota_idx[a]) : 0.0;
                const double arg = 1.0 + xk + ik;
                const double d = 1.0 / (kLn2 * arg * arg);
                H(a, a) += d;
                if (od->iota_idx[a] >= 0) {
                    H(a, ipos) += d;
                    H(ipos, a) += d;
                    H(ipos, ipos) += d;
                    ++ipos;
                }
            }
            return H;
        };

        for (int n = 0; n < N; ++n) {
            convex::Constraint con;
            con.name = "unit-disc-" + std::to_string(n);
            con.support = {L.idx_vre(n), L.idx_vim(n)};
            con.value = [](const Eigen::VectorXd& xs) {
                return xs(0) * xs(0) + xs(1) * xs(1) - 1.0;
            };
            con.grad = [](const Eigen::VectorXd& xs) {
                return (Eigen::VectorXd(2) << 2.0 * xs(0), 2.0 * xs(1)).finished();
            };
            con.hess = [](const Eigen::VectorXd&) {
                return (2.0 * Eigen::MatrixXd::Identity(2, 2)).eval();
            };
            p.ineq.push_back(std::move(con));
        }
        for (int k = 0; k < K; ++k) {
            const auto& u = co.users[k];
            if (L.xi_index[k] >= 0)
                p.ineq.push_back(detail::make_signal_cap(
                    "signal-cap-" + std::to_string(k), L.base_v, N, L.xi_index[k],
                    u.c_self, u.u_self, s.v, co.sigma2(k)));
            if (L.iota_index[k] >= 0)
                p.ineq.push_back(detail::make_interference_cap(
                    "interference-cap-" + std::to_string(k), L.base_v, N,
                    L.iota_index[k], u.c_cross, u.u_cross, co.sigma2(k)));
        }
        return sp;
    };

    // Strictly interior re-centering for cold restarts: shrink the reflection
    // coefficients toward the origin and re-derive the slacks against the
    // caps of the subproblem anchored at `cur`.
    auto interior = [&](const Sp2State& cur) {
        Sp2State hs = cur;
        hs.v = (1.0 - 1e-3) * cur.v;
        for (int k = 0; k < K; ++k) {
            const auto& u = co.users[k];
            if (!u.active) continue;
            const cd beta = cur.v.dot(u.u_self);
            const double bound =
                std::norm(u.c_self) - std::norm(beta) +
                2.0 * (std::conj(u.c_self + beta) * hs.v.dot(u.u_self)).real();
            hs.xi(k) = 0.5 * std::max(bound, 0.0);
            if (!u.c_cross.empty()) {
                double interf = 0.0;
                for (size_t j = 0; j < u.c_cross.size(); ++j)
                    interf += std::norm(u.c_cross[j] + hs.v.dot(u.u_cross[j]));
                hs.iota(k) = 1.5 * interf + 1e-3 * co.sigma2(k);
            }
        }
        return hs;
    };

    convex::SolverOptions cold = params.solver;
    cold.initial_gap = 0.0;
    double prev = convex::kInf;
    double last_move = convex::kInf;
    double move_trend = convex::kInf;
    for (int it = 0; it < params.max_iter; ++it) {
        const Sp2Problem sp = build(st);
        Eigen::VectorXd hint = sp2_pack(st, sp.layout);
        detail::guard_hint(hint, sp);
        const double f_hint = sp.problem.obj.value(hint);
        const double slop = 1e-7 * (1.0 + std::abs(f_hint));
        convex::SolveResult r;
        bool ok = false;
        const double subopt = (prev - f_hint) + last_move;
        if (std::isfinite(subopt) && subopt > 0.0 &&
            10.0 * subopt <= params.warm_gap && last_move <= move_trend) {
            convex::SolverOptions near = params.solver;
            near.initial_gap = std::max(10.0 * subopt, 10.0 * params.solver.tol);
            r = convex::solve(sp.problem, hint, near);
            ok = (r.status == convex::SolveStatus::kOptimal ||
                  r.status == convex::SolveStatus::kMaxIter) &&
                 r.objective <= f_hint + slop;
        }
        if (!ok) {
            Eigen::VectorXd restart = sp2_pack(interior(st), sp.layout);
            detail::guard_hint(restart, sp);
            r = convex::solve_with_phase1(sp.problem, restart, cold);
            ok = r.status == convex::SolveStatus::kOptimal ||
                 r.status == convex::SolveStatus::kMaxIter;
            if (ok && r.objective > f_hint + 1e-6 * (1.0 + std::abs(f_hint))) {
                out.stalled = true;
                break;
            }
        }
        if (!ok) {
            out.solve_failed = true;
            out.message = "subproblem solve failed at iteration " + std::to_string(it) +
                          ": " + r.message;
            break;
        }
        Sp2State next = sp2_unpack(r.x, sp.layout);
        st.v = next.v;
        st.xi = next.xi;
        st.iota = next.iota;
        out.objective = r.objective;
        out.objective_trace.push_back(r.objective);
        const double moved = std::abs(prev - r.objective);
        move_trend = last_move;
        last_move = moved;
        prev = r.objective;
        if (moved < params.tol_obj) {
            out.converged = true;
            break;
        }
    }
    out.v = st.v;
    out.relaxed_rate = slack_rate(st, co);
    return out;
}

}  // namespace ssirs
