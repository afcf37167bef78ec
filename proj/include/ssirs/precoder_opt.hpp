#pragma once

// Precoder optimization with the IRS schedule held fixed.
//
// The sum-rate objective is lifted through W_k = w_k w_k^H (semidefinite
// relaxation, rank constraint dropped) and split into a difference of convex
// functions,
//     -sum_rate = N1(W) - D1(W),
//     N1 = -sum_k log2(sigma_k^2 + sum_j   Tr(W_j M_k)),
//     D1 = -sum_k log2(sigma_k^2 + sum_{j!=k} Tr(W_j M_k)),
// with M_k = m_k m_k^H the effective-channel outer products.  Each iteration
// minimizes the convex surrogate N1 - <grad D1(W^t), W - W^t> - D1(W^t)
// subject to the power budget, the self-sustainability constraint (linear in
// W for a fixed schedule) and W_k >= 0, then re-linearizes at the optimum.
// A rank-one precoder set is recovered from the converged iterate by leading
// eigenvector extraction plus a feasibility repair chain.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssirs/channel.hpp"
#include "ssirs/config.hpp"
#include "ssirs/convex/problem.hpp"
#include "ssirs/convex/solver.hpp"
#include "ssirs/metrics.hpp"
#include "ssirs/precoder.hpp"
#include "ssirs/rng.hpp"
#include "ssirs/schedule.hpp"
#include "ssirs/units.hpp"

namespace ssirs {

struct Sp1State {
    std::vector<Eigen::MatrixXcd> W;   // K lifted Hermitian iterates
    std::vector<Eigen::MatrixXcd> Mk;  // K rank-one channel outer products
    std::vector<double> objective_trace;  // surrogate optima (minimization form)
    int t1 = 0;
};

// N1 and D1 evaluated at W (natural units, watts).
inline std::pair<double, double> dc_parts(const std::vector<Eigen::MatrixXcd>& W,
                                          const std::vector<Eigen::MatrixXcd>& Mk,
                                          const Eigen::VectorXd& sigma2) {
    const int K = static_cast<int>(W.size());
    double n1 = 0.0, d1 = 0.0;
    for (int k = 0; k < K; ++k) {
        double all = sigma2(k), others = sigma2(k);
        for (int j = 0; j < K; ++j) {
            const double t = (W[j] * Mk[k]).trace().real();
            all += t;
            if (j != k) others += t;
        }
        n1 -= std::log2(all);
        d1 -= std::log2(others);
    }
    return {n1, d1};
}

// Gradient of D1 with respect to each W_k.  Each user's denominator carries
// its own noise power and interference sum.
inline std::vector<Eigen::MatrixXcd> grad_D1(const std::vector<Eigen::MatrixXcd>& W,
                                             const std::vector<Eigen::MatrixXcd>& Mk,
                                             const Eigen::VectorXd& sigma2) {
    const int K = static_cast<int>(W.size());
    const int M = static_cast<int>(W.empty() ? 0 : W[0].rows());
    Eigen::VectorXd den(K);
    for (int j = 0; j < K; ++j) {
        den(j) = sigma2(j);
        for (int q = 0; q < K; ++q)
            if (q != j) den(j) += (W[q] * Mk[j]).trace().real();
    }
    std::vector<Eigen::MatrixXcd> g(K, Eigen::MatrixXcd::Zero(M, M));
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < K; ++j)
            if (j != k) g[k] -= Mk[j] / (kLn2 * den(j));
    return g;
}

inline Eigen::VectorXd sp1_pack(const std::vector<Eigen::MatrixXcd>& W) {
    const int K = static_cast<int>(W.size());
    const int M = static_cast<int>(W[0].rows());
    const int np = convex::herm_param_count(M);
    Eigen::VectorXd x(K * np);
    for (int k = 0; k < K; ++k) convex::herm_pack(W[k], x.segment(k * np, np));
    return x;
}

inline std::vector<Eigen::MatrixXcd> sp1_unpack(const Eigen::VectorXd& x, int M, int K) {
    const int np = convex::herm_param_count(M);
    std::vector<Eigen::MatrixXcd> W(K);
    for (int k = 0; k < K; ++k) W[k] = convex::herm_unpack(x.segment(k * np, np), M);
    return W;
}

// Convex surrogate around Wt.  The objective value equals
// N1(W) - <grad D1(Wt), W - Wt> - D1(Wt), so evaluating it at Wt reproduces
// dc_parts(Wt) and it upper-bounds the negated sum-rate everywhere.
inline convex::ConvexProblem build_sp1(const std::vector<Eigen::MatrixXcd>& Wt,
                                       const ChannelRealization& ch,
                                       const IrsSchedule& irs_fixed,
                                       const ScenarioConfig& cfg,
                                       bool enforce_c3 = true) {
    using convex::ConvexProblem;
    using convex::Constraint;
    using Eigen::MatrixXcd;
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    const int K = static_cast<int>(Wt.size());
    const int M = static_cast<int>(Wt[0].rows());
    const int np = convex::herm_param_count(M);
    const double p_max = cfg.p_max_w();

    // Channel outer products against the fixed schedule.
    std::vector<MatrixXcd> Mk(K);
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXcd m = effective_channel(ch, irs_fixed, k);
        Mk[k] = m * m.adjoint();
    }
    const VectorXd sigma2 = ch.sigma_k2;

    // Feasibility of the expansion point.
    double pt = 0.0;
    for (const auto& w : Wt) pt += w.trace().real();
    if (pt > p_max * (1.0 + 1e-6))
        throw std::invalid_argument("build_sp1: expansion point violates the power budget; re-initialize");

    const VectorXd s1 = irs_fixed.s1();
    const double s1sum = s1.sum();
    const double need = (irs_fixed.size() - s1sum) * cfg.p_irs_w();
    MatrixXcd Q;
    if (enforce_c3 && need > 0.0) {
        Q = ch.G.adjoint() * s1.asDiagonal() * ch.G;
        double harvest = cfg.eta_h * ch.sigma_a2 * s1sum;
        for (const auto& w : Wt) harvest += cfg.eta_h * (w * Q).trace().real();
        if (s1sum == 0.0)
            throw std::invalid_argument(
                "build_sp1: schedule harvests nothing but must power the panel; re-initialize");
        if (harvest < need * (1.0 - 1e-6) - 1e-12)
            throw std::invalid_argument(
                "build_sp1: expansion point violates self-sustainability; re-initialize");
    }

    // Normalized inner-product coefficients: t_k = chat_k . sum_j x_j.
    std::vector<VectorXd> chat(K);
    for (int k = 0; k < K; ++k) chat[k] = convex::herm_inner_coeffs(Mk[k]) / sigma2(k);

    // Linearization coefficients of D1 at Wt.
    const std::vector<MatrixXcd> gD = grad_D1(Wt, Mk, sigma2);
    std::vector<VectorXd> gcoef(K);
    double lin_const = 0.0;
    for (int k = 0; k < K; ++k) {
        gcoef[k] = convex::herm_inner_coeffs(gD[k]);
        VectorXd xt(np);
        convex::herm_pack(Wt[k], xt);
        lin_const += gcoef[k].dot(xt);
    }
    double noise_const = 0.0;
    for (int k = 0; k < K; ++k) noise_const -= std::log2(sigma2(k));
    const double d1t = dc_parts(Wt, Mk, sigma2).second;
    const double constant = noise_const + lin_const - d1t;

    ConvexProblem p;
    p.init(K * np);
    for (int k = 0; k < K; ++k) p.psd.push_back({k * np, M});

    p.obj.value = [K, np, chat, gcoef, constant](const VectorXd& x) {
        VectorXd xsum = VectorXd::Zero(np);
        for (int k = 0; k < K; ++k) xsum += x.segment(k * np, np);
        double val = constant;
        for (int k = 0; k < K; ++k) {
            const double t = chat[k].dot(xsum);
            if (1.0 + t <= 0.0) return convex::kInf;
            val -= std::log2(1.0 + t);
            val -= gcoef[k].dot(x.segment(k * np, np));
        }
        return val;
    };
    p.obj.grad = [K, np, chat, gcoef](const VectorXd& x) {
        VectorXd xsum = VectorXd::Zero(np);
        for (int k = 0; k < K; ++k) xsum += x.segment(k * np, np);
        VectorXd common = VectorXd::Zero(np);
        for (int k = 0; k < K; ++k) common -= chat[k] / (kLn2 * (1.0 + chat[k].dot(xsum)));
        VectorXd g(K * np);
        for (int k = 0; k < K; ++k) g.segment(k * np, np) = common - gcoef[k];
        return g;
    };
    p.obj.hess_support.resize(K * np);
    std::iota(p.obj.hess_support.begin(), p.obj.hess_support.end(), 0);
    p.obj.hess = [K, np, chat](const VectorXd& x) {
        VectorXd xsum = VectorXd::Zero(np);
        for (int k = 0; k < K; ++k) xsum += x.segment(k * np, np);
        MatrixXd S = MatrixXd::Zero(np, np);
        for (int k = 0; k < K; ++k) {
            const double d = 1.0 + chat[k].dot(xsum);
            S += (chat[k] / (kLn2 * d * d)) * chat[k].transpose();
        }
        MatrixXd H(K * np, K * np);
        for (int a = 0; a < K; ++a)
            for (int b = 0; b < K; ++b) H.block(a * np, b * np, np, np) = S;
        return H;
    };

    // C1: total transmit power within budget (scaled by P_max).
    {
        Constraint c;
        c.name = "power-budget";
        for (int k = 0; k < K; ++k)
            for (int i = 0; i < M; ++i) c.support.push_back(k * np + i);
        const double inv = 1.0 / p_max;
        c.value = [inv](const VectorXd& xs) { return xs.sum() * inv - 1.0; };
        c.grad = [inv](const VectorXd& xs) {
            return VectorXd(VectorXd::Constant(xs.size(), inv));
        };
        p.ineq.push_back(std::move(c));
    }

    // Self-sustainability: consumption <= harvested (linear in W, scaled by
    // the consumption level).  Vacuous when nothing reflects.
    if (enforce_c3 && need > 0.0) {
        Constraint c;
        c.name = "self-sustain";
        c.support.resize(K * np);
        std::iota(c.support.begin(), c.support.end(), 0);
        const VectorXd q = convex::herm_inner_coeffs(Q);
        const double base = cfg.eta_h * ch.sigma_a2 * s1sum;
        const double eta = cfg.eta_h;
        c.value = [K, np, q, base, eta, need](const VectorXd& xs) {
            double harvest = base;
            for (int k = 0; k < K; ++k) harvest += eta * q.dot(xs.segment(k * np, np));
            return (need - harvest) / need;
        };
        c.grad = [K, np, q, eta, need](const VectorXd& xs) {
            VectorXd g(K * np);
            for (int k = 0; k < K; ++k) g.segment(k * np, np) = -eta / need * q;
            return g;
        };
        p.ineq.push_back(std::move(c));
    }

    return p;
}

struct RankOneExtraction {
    PrecoderSet precoders;
    Eigen::VectorXd ratios;  // second-to-first eigenvalue ratio per user
    bool repaired = false;
    bool repair_failed = false;
    FeasibilityReport report;
};

// Leading-eigenvector recovery with a feasibility repair chain: extraction
// can only lower both transmit power and harvested power, so a violated
// self-sustainability constraint is first attacked by scaling every w_k up
// inside the remaining power headroom, then by Gaussian randomization.
inline RankOneExtraction extract_rank_one(const std::vector<Eigen::MatrixXcd>& W,
                                          const ChannelRealization& ch,
                                          const IrsSchedule& sched,
                                          const ScenarioConfig& cfg,
                                          bool enforce_c3 = true,
                                          std::uint64_t seed = 0x51D5) {
    const int K = static_cast<int>(W.size());
    const int M = static_cast<int>(W[0].rows());
    RankOneExtraction out;
    out.ratios = Eigen::VectorXd::Zero(K);

    Eigen::MatrixXcd Wcols(M, K);
    for (int k = 0; k < K; ++k) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W[k]);
        const auto& ev = es.eigenvalues();
        const double l1 = ev(M - 1);
        if (l1 <= 0.0) {
            Wcols.col(k).setZero();
            out.ratios(k) = 0.0;
            continue;
        }
        Wcols.col(k) = std::sqrt(l1) * es.eigenvectors().col(M - 1);
        out.ratios(k) = (M > 1) ? std::max(0.0, ev(M - 2)) / l1 : 0.0;
    }

    FeasibilityChecks checks;
    checks.self_sustain = enforce_c3;
    checks.discrete_modes = false;

    auto feasible = [&](const PrecoderSet& pre) {
        FeasibilityReport rep = check_feasibility(ch, sched, pre, cfg, checks);
        // Only C1/C3 matter here; the schedule is whatever the caller fixed.
        return rep;
    };

    PrecoderSet cand = PrecoderSet::from_columns(Wcols);
    FeasibilityReport rep = feasible(cand);

    if (!rep.feasible && enforce_c3 && rep.c3_slack < 0.0 && rep.c1_slack >= 0.0) {
        // Scale up inside the power headroom.  Harvest grows quadratically
        // while consumption stays fixed, so the required factor is explicit.
        const Eigen::VectorXd s1 = sched.s1();
        const double need = irs_consumption(sched, cfg);
        double rf = 0.0;
        for (int k = 0; k < K; ++k) rf += (ch.G * cand.W.col(k)).cwiseAbs2().dot(s1);
        const double noise_part = cfg.eta_h * ch.sigma_a2 * s1.sum();
        const double pw = cand.total_power();
        if (rf > 0.0 && pw > 0.0 && need > noise_part) {
            const double c2 = (need - noise_part) / (cfg.eta_h * rf);
            const double c2max = cfg.p_max_w() / pw;
            if (c2 <= c2max) {
                const double c = std::sqrt(std::min(c2 * (1.0 + 1e-9), c2max));
                PrecoderSet scaled = PrecoderSet::from_columns(c * cand.W);
                const FeasibilityReport rep2 = feasible(scaled);
                if (rep2.feasible) {
                    cand = scaled;
                    rep = rep2;
                    out.repaired = true;
                }
            }
        }
    }

    if (!rep.feasible) {
        // Gaussian randomization: resample directions from the lifted
        // covariances, keep the best feasible candidate by sum-rate.
        Rng rng(seed);
        std::vector<Eigen::MatrixXcd> half(K);
        for (int k = 0; k < K; ++k) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(W[k]);
            const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
            half[k] = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
        }
        double best_rate = -1.0;
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::MatrixXcd Wc(M, K);
            for (int k = 0; k < K; ++k) {
                Eigen::VectorXcd z(M);
                for (int i = 0; i < M; ++i) z(i) = rng.cgaussian();
                Eigen::VectorXcd w = half[k] * z;
                const double nrm = w.norm();
                const double target = std::sqrt(std::max(0.0, W[k].trace().real()));
                Wc.col(k) = (nrm > 0.0) ? Eigen::VectorXcd(w * (target / nrm))
                                        : Eigen::VectorXcd(Eigen::VectorXcd::Zero(M));
            }
            PrecoderSet trial_set = PrecoderSet::from_columns(Wc);
            const FeasibilityReport r2 = feasible(trial_set);
            if (!r2.feasible) continue;
            const double rate = sum_rate(ch, sched, trial_set);
            if (rate > best_rate) {
                best_rate = rate;
                cand = trial_set;
                rep = r2;
            }
        }
        out.repaired = best_rate >= 0.0;
        out.repair_failed = best_rate < 0.0;
    }

    cand.lifted.resize(K);
    for (int k = 0; k < K; ++k) cand.lifted[k] = cand.W.col(k) * cand.W.col(k).adjoint();
    out.precoders = std::move(cand);
    out.report = rep;
    return out;
}

struct Alg1Params {
    int t1_max = 30;
    double tol_obj = 1e-5;
    bool enforce_c3 = true;
    convex::SolverOptions solver;
    double warm_gap = 1.0;  // initial duality gap for warm re-solves
    std::uint64_t seed = 0x51D5;

    Alg1Params() {
        // Drive the barrier far enough that the terminal lifted iterate is
        // numerically rank-one (the extraction ratio tracks the gap).
        solver.tol = 1e-9;
    }
};

struct Alg1Result {
    PrecoderSet precoders;
    Sp1State state;
    RankOneExtraction extraction;
    double rate = 0.0;
    bool converged = false;
    // A subproblem solver error aborted the loop; the returned precoders are
    // still never worse than the input (message holds the detail).  The
    // kept-input note, by contrast, is informational only.
    bool solve_failed = false;
    std::string message;
};

// Iterative precoder design for a fixed schedule.  Never returns a worse
// precoder set than it was given: the extracted candidate replaces the input
// only if its true sum-rate is at least as good.
inline Alg1Result run_algorithm1(const ChannelRealization& ch, const IrsSchedule& irs_fixed,
                                 const PrecoderSet& W0, const ScenarioConfig& cfg,
                                 const Alg1Params& params = {}) {
    const int M = static_cast<int>(ch.h_d.rows());
    const int K = static_cast<int>(ch.h_d.cols());
    Alg1Result out;

    Sp1State st;
    st.Mk.resize(K);
    for (int k = 0; k < K; ++k) {
        const Eigen::VectorXcd m = effective_channel(ch, irs_fixed, k);
        st.Mk[k] = m * m.adjoint();
    }

    // Lift and nudge the start strictly inside the PSD cone and the power
    // budget; self-sustainability holds at W0 by precondition and is
    // preserved under the blend fallback via phase 1 inside the solver.
    st.W.resize(K);
    const double delta = 1e-7;
    const double ridge = delta * cfg.p_max_w() / (2.0 * K * M);
    for (int k = 0; k < K; ++k)
        st.W[k] = (1.0 - delta) * (W0.W.col(k) * W0.W.col(k).adjoint()) +
                  ridge * Eigen::MatrixXcd::Identity(M, M);

    // Subproblem optima hug the semidefinite boundary, which makes poor warm
    // starts.  Blend the hint toward a trace-preserving multiple of the
    // identity; the blend keeps the power budget exact, so only the
    // self-sustainability margin needs re-checking (shrink the blend if it
    // would cross that constraint).
    const Eigen::VectorXd s1 = irs_fixed.s1();
    const double s1sum = s1.sum();
    const double need =
        (static_cast<double>(irs_fixed.size()) - s1sum) * cfg.p_irs_w();
    Eigen::MatrixXcd Qh;
    if (params.enforce_c3 && need > 0.0)
        Qh = ch.G.adjoint() * s1.asDiagonal() * ch.G;
    const auto warm_hint = [&](const std::vector<Eigen::MatrixXcd>& W) {
        const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(M, M);
        for (const double theta : {1e-3, 1e-5, 1e-7}) {
            std::vector<Eigen::MatrixXcd> Wb(K);
            for (int k = 0; k < K; ++k)
                Wb[k] = (1.0 - theta) * W[k] +
                        theta * (W[k].trace().real() / M) * eye;
            if (Qh.size() == 0) return Wb;
            double rf = 0.0;
            for (int k = 0; k < K; ++k) rf += (Qh * Wb[k]).trace().real();
            const double harvest = cfg.eta_h * (rf + cfg.sigma_a2() * s1sum);
            if (harvest > need * (1.0 + 1e-9)) return Wb;
        }
        return W;
    };

    convex::SolverOptions warm = params.solver;
    double prev = convex::kInf;
    for (st.t1 = 0; st.t1 < params.t1_max; ++st.t1) {
        const convex::ConvexProblem sp1 =
            build_sp1(st.W, ch, irs_fixed, cfg, params.enforce_c3);
        const convex::SolveResult r =
            convex::solve_with_phase1(sp1, sp1_pack(warm_hint(st.W)), warm);
        if (r.status != convex::SolveStatus::kOptimal &&
            r.status != convex::SolveStatus::kMaxIter) {
            out.solve_failed = true;
            out.message = "subproblem solve failed at iteration " +
                          std::to_string(st.t1) + ": " + r.message;
            break;
        }
        st.W = sp1_unpack(r.x, M, K);
        st.objective_trace.push_back(r.objective);
        warm.initial_gap = params.warm_gap;
        if (std::abs(prev - r.objective) < params.tol_obj) {
            out.converged = true;
            ++st.t1;
            break;
        }
        prev = r.objective;
    }

    out.extraction = extract_rank_one(st.W, ch, irs_fixed, cfg, params.enforce_c3, params.seed);
    const double input_rate = sum_rate(ch, irs_fixed, W0);
    const double extracted_rate =
        out.extraction.repair_failed ? -1.0
                                     : sum_rate(ch, irs_fixed, out.extraction.precoders);
    if (extracted_rate >= input_rate) {
        out.precoders = out.extraction.precoders;
        out.rate = extracted_rate;
    } else {
        out.precoders = W0;
        out.rate = input_rate;
        if (out.message.empty()) out.message = "kept input precoders (extraction not better)";
    }
    out.state = std::move(st);
    return out;
}

}  // namespace ssirs
