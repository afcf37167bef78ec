#pragma once

// Comparison schemes of the simulation study. The joint design alternates the
// transmit-vector subproblem (schedule fixed) with the schedule subproblem
// (transmit vectors fixed), keeping whichever pair has the better true
// sum-rate after each half-step so the outer trace never decreases. The
// baselines fix the transmit directions to matched-filter beams and optimize
// only the power split (and, for the second baseline, the panel schedule);
// the upper bounds drop the power balance and force every element to
// reflect, with either the discrete phase set or fully continuous phases.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ssirs/channel.hpp"
#include "ssirs/config.hpp"
#include "ssirs/convex/problem.hpp"
#include "ssirs/convex/solver.hpp"
#include "ssirs/irs_opt.hpp"
#include "ssirs/metrics.hpp"
#include "ssirs/precoder.hpp"
#include "ssirs/precoder_opt.hpp"
#include "ssirs/schedule.hpp"

namespace ssirs {

enum class Scheme {
    kProposed,
    kBaseline1,
    kBaseline2,
    kUpperBound,
    kUpperBoundContinuous,
};

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::kProposed: return "Proposed";
        case Scheme::kBaseline1: return "Baseline1";
        case Scheme::kBaseline2: return "Baseline2";
        case Scheme::kUpperBound: return "UpperBound";
        case Scheme::kUpperBoundContinuous: return "UpperBoundContinuous";
    }
    return "?";
}

inline std::optional<Scheme> scheme_from_name(const std::string& name) {
    for (Scheme s : {Scheme::kProposed, Scheme::kBaseline1, Scheme::kBaseline2,
                     Scheme::kUpperBound, Scheme::kUpperBoundContinuous})
        if (name == scheme_name(s)) return s;
    return std::nullopt;
}

struct SchemeResult {
    Scheme scheme = Scheme::kProposed;
    double sum_rate = 0.0;
    // False for the no-panel baseline; its rate/feasibility are evaluated
    // against an internal all-harvest schedule (identical channel, zero
    // reflection, zero draw).
    bool has_schedule = false;
    IrsSchedule schedule = IrsSchedule::all_harvest(1, 0);
    PrecoderSet precoders;
    std::vector<double> outer_trace;  // sum-rate at init, then per outer round
    FeasibilityReport feasibility;
    double wall_time = 0.0;  // seconds
    bool converged = false;
    std::string message;
};

enum class MrtBasis { kDirect, kEffective };

struct SchemeParams {
    int t3_max = 20;
    double tol_outer = 1e-4;  // outer sum-rate change, bits/s/Hz
    // Direction rule of the fixed-beam baseline: matched filter on the direct
    // link alone, or on the schedule-dependent effective channel (default).
    MrtBasis mrt_basis = MrtBasis::kEffective;
    // Joint design: besides the all-harvest start, also run the alternation
    // from a self-sustainability-repaired projection of the continuous
    // reflection design and keep the better endpoint. Roughly doubles the
    // cost but escapes the poor local optima the cold start sometimes hits.
    bool multi_start = true;
    Alg1Params alg1;
    Alg2Params alg2;
    ReflectRelaxParams relax;
};

namespace detail {

struct PowerAllocation {
    Eigen::VectorXd p;  // per-user transmit power, watts
    bool ok = false;
    std::string message;
};

// Sum-rate-optimal power split for fixed unit-norm transmit directions:
//   maximize  sum_k log2(1 + p_k a_kk / (sigma_k^2 + sum_{j!=k} p_j a_kj))
//   s.t.      p >= 0,  sum_k p_k <= P,
//             optional harvest floor  sum_k h_k p_k >= floor  (linear).
// Desired signal and interference are linear in p, so the caps are exact and
// only the concave interference log needs re-anchoring; each pass solves a
// small convex program. Users with a_kk = 0 cannot carry rate and are pinned
// to zero power.
inline PowerAllocation optimize_powers(const Eigen::MatrixXd& a,
                                       const Eigen::VectorXd& sigma2, double P,
                                       const Eigen::VectorXd& harvest_per_p,
                                       double harvest_floor,
                                       convex::SolverOptions sopt = {}) {
    const int K = static_cast<int>(a.rows());
    PowerAllocation out;
    out.p = Eigen::VectorXd::Zero(K);

    std::vector<int> act;
    for (int k = 0; k < K; ++k)
        if (a(k, k) > 0.0) act.push_back(k);
    const int na = static_cast<int>(act.size());
    const bool c3 = harvest_per_p.size() == K && harvest_floor > 0.0;
    if (na == 0) {
        out.ok = !c3;  // nothing transmits; a positive floor is unreachable
        if (c3) out.message = "harvest floor unreachable without transmit power";
        return out;
    }
    if (na == 1 && (!c3 || harvest_per_p(act[0]) * P >= harvest_floor)) {
        // Boundary power is optimal (scaling up raises both the rate and the
        // harvest), and a single user sees no interference.
        out.p(act[0]) = P;
        out.ok = true;
        return out;
    }
    if (na == 1) {
        out.message = "harvest floor unreachable at full power";
        return out;
    }

    sopt.initial_gap = 0.0;
    if (sopt.tol > 1e-8) sopt.tol = 1e-8;

    // Coordinates: [p (active) | xi' (active) | iota' (active)].
    const int xi0 = na, io0 = 2 * na;
    const int n = 3 * na;
    auto interference = [&](const Eigen::VectorXd& p, int i) {
        double acc = 0.0;
        for (int j = 0; j < na; ++j)
            if (j != i) acc += p(j) * a(act[i], act[j]);
        return acc / sigma2(act[i]);
    };
    auto exact_rate = [&](const Eigen::VectorXd& p) {
        double r = 0.0;
        for (int i = 0; i < na; ++i)
            r += std::log2(1.0 + p(i) * a(act[i], act[i]) / sigma2(act[i]) /
                                     (1.0 + interference(p, i)));
        return r;
    };

    // Only the interference anchor changes between passes, so the problem is
    // assembled once and the anchor mutated in place.
    struct Anchor {
        int na, xi0, io0;
        Eigen::VectorXd iota_t;
    };
    auto od = std::make_shared<Anchor>();
    od->na = na;
    od->xi0 = xi0;
    od->io0 = io0;
    od->iota_t = Eigen::VectorXd::Zero(na);

    convex::ConvexProblem cp;
    cp.init(n);
    for (int i = 0; i < na; ++i) {
        cp.lower(i) = 0.0;
        cp.upper(i) = P;
        cp.lower(xi0 + i) = 0.0;
        cp.lower(io0 + i) = 0.0;
    }
    cp.obj.value = [od](const Eigen::VectorXd& x) {
        double f = 0.0;
        for (int i = 0; i < od->na; ++i) {
            const double arg = 1.0 + x(od->xi0 + i) + x(od->io0 + i);
            if (arg <= 0.0) return convex::kInf;
            f -= std::log2(arg);
            const double it = od->iota_t(i);
            f += (x(od->io0 + i) - it) / (kLn2 * (1.0 + it)) + std::log2(1.0 + it);
        }
        return f;
    };
    cp.obj.grad = [od, n](const Eigen::VectorXd& x) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < od->na; ++i) {
            const double d = -1.0 / (kLn2 * (1.0 + x(od->xi0 + i) + x(od->io0 + i)));
            g(od->xi0 + i) = d;
            g(od->io0 + i) = d + 1.0 / (kLn2 * (1.0 + od->iota_t(i)));
        }
        return g;
    };
    for (int i = 0; i < na; ++i) cp.obj.hess_support.push_back(xi0 + i);
    for (int i = 0; i < na; ++i) cp.obj.hess_support.push_back(io0 + i);
    cp.obj.hess = [od](const Eigen::VectorXd& x) {
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * od->na, 2 * od->na);
        for (int i = 0; i < od->na; ++i) {
            const double arg = 1.0 + x(od->xi0 + i) + x(od->io0 + i);
            const double d = 1.0 / (kLn2 * arg * arg);
            H(i, i) += d;
            H(i, od->na + i) += d;
            H(od->na + i, i) += d;
            H(od->na + i, od->na + i) += d;
        }
        return H;
    };

    {  // power budget
        convex::Constraint con;
        con.name = "power-budget";
        con.support.resize(na);
        for (int i = 0; i < na; ++i) con.support[i] = i;
        con.value = [P](const Eigen::VectorXd& xs) { return xs.sum() - P; };
        con.grad = [na](const Eigen::VectorXd&) {
            return Eigen::VectorXd::Ones(na).eval();
        };
        cp.ineq.push_back(std::move(con));
    }
    if (c3) {
        convex::Constraint con;
        con.name = "harvest-floor";
        con.support.resize(na);
        for (int i = 0; i < na; ++i) con.support[i] = i;
        auto h = std::make_shared<Eigen::VectorXd>(na);
        for (int i = 0; i < na; ++i) (*h)(i) = harvest_per_p(act[i]);
        con.value = [h, harvest_floor](const Eigen::VectorXd& xs) {
            return harvest_floor - h->dot(xs);
        };
        con.grad = [h](const Eigen::VectorXd&) { return (-*h).eval(); };
        cp.ineq.push_back(std::move(con));
    }
    for (int i = 0; i < na; ++i) {  // exact signal cap:  xi' <= p_i a_ii / sigma_i^2
        convex::Constraint con;
        con.name = "signal-cap-" + std::to_string(i);
        con.support = {i, xi0 + i};
        const double c = a(act[i], act[i]) / sigma2(act[i]);
        con.value = [c](const Eigen::VectorXd& xs) { return xs(1) - c * xs(0); };
        con.grad = [c](const Eigen::VectorXd&) {
            return (Eigen::VectorXd(2) << -c, 1.0).finished();
        };
        cp.ineq.push_back(std::move(con));
    }
    for (int i = 0; i < na; ++i) {  // exact interference floor
        convex::Constraint con;
        con.name = "interference-cap-" + std::to_string(i);
        con.support.resize(na);
        int pos = 0;
        for (int j = 0; j < na; ++j)
            if (j != i) con.support[pos++] = j;
        con.support[na - 1] = io0 + i;
        auto w = std::make_shared<Eigen::VectorXd>(na);
        pos = 0;
        for (int j = 0; j < na; ++j)
            if (j != i) (*w)(pos++) = a(act[i], act[j]) / sigma2(act[i]);
        (*w)(na - 1) = -1.0;
        con.value = [w](const Eigen::VectorXd& xs) { return w->dot(xs); };
        con.grad = [w](const Eigen::VectorXd&) { return *w; };
        cp.ineq.push_back(std::move(con));
    }

    // The interference coupling makes the exact problem nonconvex, so the
    // successive approximation may settle on a local split; restart it from
    // the even split and from each near-single-user split, keeping the best.
    std::vector<Eigen::VectorXd> starts;
    starts.push_back(Eigen::VectorXd::Constant(na, P / (2.0 * na)));
    for (int i = 0; i < na; ++i) {
        Eigen::VectorXd s = Eigen::VectorXd::Constant(na, 0.1 * P / (2.0 * (na - 1)));
        s(i) = 0.45 * P;
        starts.push_back(std::move(s));
    }

    double best_rate = -1.0;
    Eigen::VectorXd best_p;
    std::string last_err;
    for (const Eigen::VectorXd& start : starts) {
        Eigen::VectorXd pt = start;
        double prev = convex::kInf;
        for (int iter = 0; iter < 60; ++iter) {
            for (int i = 0; i < na; ++i) od->iota_t(i) = interference(pt, i);

            // Strictly interior hint around the current split.
            Eigen::VectorXd hint(n);
            for (int i = 0; i < na; ++i) {
                hint(i) = std::min(std::max(pt(i), 1e-9 * P), P * (1.0 - 1e-9));
                hint(xi0 + i) = 0.5 * hint(i) * a(act[i], act[i]) / sigma2(act[i]);
            }
            for (int i = 0; i < na; ++i)
                hint(io0 + i) = 1.5 * interference(hint.head(na), i) + 1e-3;

            const convex::SolveResult r = convex::solve_with_phase1(cp, hint, sopt);
            if (r.status != convex::SolveStatus::kOptimal &&
                r.status != convex::SolveStatus::kMaxIter) {
                // Once the split collapses onto a vertex (one user at zero
                // power) the re-anchored program is numerically degenerate;
                // the incumbent split is already stationary, so keep it.
                last_err = r.message;
                break;
            }
            pt = r.x.head(na).cwiseMax(0.0);
            if (std::abs(prev - r.objective) < 1e-9 * (1.0 + std::abs(r.objective)))
                break;
            prev = r.objective;
        }
        if (c3) {  // only floor-satisfying splits may win
            double acc = 0.0;
            for (int i = 0; i < na; ++i) acc += harvest_per_p(act[i]) * pt(i);
            if (harvest_floor - acc > 1e-12 * (1.0 + harvest_floor)) continue;
        }
        const double rate = exact_rate(pt);
        if (rate > best_rate) {
            best_rate = rate;
            best_p = pt;
        }
    }

    if (best_rate < 0.0) {
        out.message = "power step failed: " + last_err;
        return out;
    }
    for (int i = 0; i < na; ++i) out.p(act[i]) = best_p(i);
    out.ok = true;
    return out;
}

// Matched-filter beams on the given channel columns, scaled to an equal split
// of the power budget (zero column for a vanishing channel).
inline PrecoderSet mrt_equal_power(const Eigen::MatrixXcd& channels, double p_max) {
    const int M = static_cast<int>(channels.rows());
    const int K = static_cast<int>(channels.cols());
    Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(M, K);
    for (int k = 0; k < K; ++k) {
        const double nrm = channels.col(k).norm();
        if (nrm > 0.0) W.col(k) = std::sqrt(p_max / K) * channels.col(k) / nrm;
    }
    return PrecoderSet::from_columns(W);
}

// Unit directions plus the exact-rate coupling matrix a(k,j) = |m_k^H u_j|^2
// for the power step; m_k are the receive-side channels, u_j the beams.
inline void mrt_power_terms(const Eigen::MatrixXcd& m, const Eigen::MatrixXcd& basis,
                            Eigen::MatrixXcd& U, Eigen::MatrixXd& a) {
    const int M = static_cast<int>(m.rows());
    const int K = static_cast<int>(m.cols());
    U = Eigen::MatrixXcd::Zero(M, K);
    for (int k = 0; k < K; ++k) {
        const double nrm = basis.col(k).norm();
        if (nrm > 0.0) U.col(k) = basis.col(k) / nrm;
    }
    a.resize(K, K);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < K; ++j) a(k, j) = std::norm(m.col(k).dot(U.col(j)));
}

inline double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Alternation between the transmit step (no power balance) and the unit-disc
// reflection relaxation. Serves as the upper-bound core and as a warm start
// provider for the joint design.
struct ReflectStage {
    IrsSchedule sched = IrsSchedule::all_harvest(1, 0);
    PrecoderSet W;
    double rate = 0.0;
    std::vector<double> trace;
    bool converged = false;
};

inline ReflectStage alternate_reflect(const ChannelRealization& ch,
                                      const ScenarioConfig& cfg,
                                      const SchemeParams& params,
                                      const Alg1Params& a1p) {
    const int N = static_cast<int>(ch.G.rows());
    ReflectStage st;
    st.sched = IrsSchedule::continuous(cfg.b, Eigen::VectorXcd::Zero(N));
    st.W = mrt_equal_power(ch.h_d, cfg.p_max_w());
    st.rate = sum_rate(ch, st.sched, st.W);
    st.trace.push_back(st.rate);

    for (int t3 = 0; t3 < params.t3_max; ++t3) {
        const Alg1Result a1 = run_algorithm1(ch, st.sched, st.W, cfg, a1p);
        st.W = a1.precoders;
        double cur = a1.rate;

        const ReflectRelaxResult rr = run_reflect_relaxation(ch, st.W, cfg, params.relax);
        if (rr.v.size() == N) {
            const IrsSchedule cand = IrsSchedule::continuous(cfg.b, rr.v.conjugate());
            const double cand_rate = sum_rate(ch, cand, st.W);
            if (cand_rate >= cur) {
                st.sched = cand;
                cur = cand_rate;
            }
        }
        st.trace.push_back(cur);
        const double moved = cur - st.rate;
        st.rate = cur;
        if (std::abs(moved) < params.tol_outer) {
            st.converged = true;
            break;
        }
    }
    return st;
}

// Nearest realizable phase for each coefficient (1-based reflect mode index).
inline std::vector<int> nearest_phase_indices(const Eigen::VectorXcd& alpha, int b) {
    const int B = 1 << b;
    const int N = static_cast<int>(alpha.size());
    std::vector<int> idx(N);
    for (int n = 0; n < N; ++n) {
        int i = static_cast<int>(std::lround(std::arg(alpha(n)) * B / (2.0 * kPi)));
        i %= B;
        if (i < 0) i += B;
        idx[n] = 1 + i;
    }
    return idx;
}

// Restore the power balance of a phase-mode schedule for the given beams by
// greedily moving elements to harvesting, each time the one whose loss of
// true sum-rate is smallest. Moving an element only ever lowers the draw and
// raises the intake, so the loop reaches a self-sustaining point (the
// all-harvest schedule draws nothing).
inline IrsSchedule repair_self_sustain(const ChannelRealization& ch,
                                       const ScenarioConfig& cfg, std::vector<int> idx,
                                       const PrecoderSet& W) {
    IrsSchedule sched = IrsSchedule::binary(cfg.b, idx);
    const int N = static_cast<int>(idx.size());
    while (harvested_power(ch, sched, W, cfg) < irs_consumption(sched, cfg)) {
        int best_n = -1;
        double best_rate = -std::numeric_limits<double>::infinity();
        for (int n = 0; n < N; ++n) {
            if (idx[n] == 0) continue;
            const int keep = idx[n];
            idx[n] = 0;
            const double r = sum_rate(ch, IrsSchedule::binary(cfg.b, idx), W);
            idx[n] = keep;
            if (r > best_rate) {
                best_rate = r;
                best_n = n;
            }
        }
        if (best_n < 0) break;  // nothing reflecting: draw already zero
        idx[best_n] = 0;
        sched = IrsSchedule::binary(cfg.b, idx);
    }
    return sched;
}

}  // namespace detail

// Transmit-only baseline: matched-filter directions on the direct links with
// an optimized power split; the panel is absent (all-harvest internally,
// which leaves the channel untouched and draws nothing).
inline SchemeResult run_baseline1(const ChannelRealization& ch, const ScenarioConfig& cfg,
                                  const convex::SolverOptions& solver = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const int K = static_cast<int>(ch.h_d.cols());
    const int N = static_cast<int>(ch.G.rows());
    SchemeResult out;
    out.scheme = Scheme::kBaseline1;
    out.has_schedule = false;

    Eigen::MatrixXcd U;
    Eigen::MatrixXd a;
    detail::mrt_power_terms(ch.h_d, ch.h_d, U, a);
    const detail::PowerAllocation pa =
        detail::optimize_powers(a, ch.sigma_k2, cfg.p_max_w(), {}, 0.0, solver);
    Eigen::MatrixXcd W = U;
    for (int k = 0; k < K; ++k) W.col(k) *= std::sqrt(std::max(pa.p(k), 0.0));
    out.precoders = PrecoderSet::from_columns(W);
    out.message = pa.message;
    out.converged = pa.ok;

    out.schedule = IrsSchedule::all_harvest(cfg.b, N);
    out.sum_rate = sum_rate(ch, out.schedule, out.precoders);
    out.outer_trace = {out.sum_rate};
    out.feasibility = check_feasibility(ch, out.schedule, out.precoders, cfg);
    out.wall_time = detail::elapsed_seconds(t0);
    return out;
}

// Joint alternating design: transmit step for the fixed schedule, schedule
// step for the fixed transmit vectors, each half-step keeping the better
// pair. A half-step that cannot improve -- up to and including a solver
// breakdown -- keeps the incumbent pair, so the trace never drops and the
// loop exits through the outer tolerance. Runs from the all-harvest cold
// start and (by default) from a repaired projection of the continuous
// reflection design, reporting the better endpoint.
inline SchemeResult run_proposed(const ChannelRealization& ch, const ScenarioConfig& cfg,
                                 const SchemeParams& params = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const int N = static_cast<int>(ch.G.rows());
    SchemeResult out;
    out.scheme = Scheme::kProposed;
    out.has_schedule = true;

    struct Run {
        IrsSchedule sched = IrsSchedule::all_harvest(1, 0);
        PrecoderSet W;
        double rate = 0.0;
        std::vector<double> trace;
        bool converged = false;
    };
    const auto alternate = [&](IrsSchedule sched, PrecoderSet W) {
        Run r;
        r.rate = sum_rate(ch, sched, W);
        r.trace.push_back(r.rate);
        for (int t3 = 0; t3 < params.t3_max; ++t3) {
            const Alg1Result a1 = run_algorithm1(ch, sched, W, cfg, params.alg1);
            W = a1.precoders;  // contractually never worse than the input
            double cur = a1.rate;

            const Alg2Result a2 = run_algorithm2_generic(
                ch, W, cfg, Sp2ModeSet::full(cfg.b), sched.S(), params.alg2,
                /*enforce_c3=*/true);
            if (a2.rate >= cur) {     // rounded schedules are feasible even
                sched = a2.schedule;  // when the relaxation stalled or failed
                cur = a2.rate;
            }
            r.trace.push_back(cur);
            const double moved = cur - r.rate;
            r.rate = cur;
            if (std::abs(moved) < params.tol_outer) {
                r.converged = true;
                break;
            }
        }
        r.sched = std::move(sched);
        r.W = std::move(W);
        return r;
    };

    Run best = alternate(IrsSchedule::all_harvest(cfg.b, N),
                         detail::mrt_equal_power(ch.h_d, cfg.p_max_w()));
    if (params.multi_start && N > 0) {
        Alg1Params a1p = params.alg1;
        a1p.enforce_c3 = false;
        const detail::ReflectStage st = detail::alternate_reflect(ch, cfg, params, a1p);
        const IrsSchedule start = detail::repair_self_sustain(
            ch, cfg, detail::nearest_phase_indices(st.sched.alpha_tilde(), cfg.b), st.W);
        Run warm = alternate(start, st.W);
        if (warm.rate > best.rate) best = std::move(warm);
    }

    out.sum_rate = best.rate;
    out.schedule = std::move(best.sched);
    out.precoders = std::move(best.W);
    out.outer_trace = std::move(best.trace);
    out.converged = best.converged;
    out.feasibility = check_feasibility(ch, out.schedule, out.precoders, cfg);
    out.wall_time = detail::elapsed_seconds(t0);
    return out;
}

// Fixed-direction baseline: matched-filter beams (direct or effective basis)
// with the power split re-optimized each round, plus the full schedule step.
// The power step carries the harvest floor of the current schedule so every
// intermediate pair stays self-sustaining.
inline SchemeResult run_baseline2(const ChannelRealization& ch, const ScenarioConfig& cfg,
                                  const SchemeParams& params = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const int N = static_cast<int>(ch.G.rows());
    const int K = static_cast<int>(ch.h_d.cols());
    SchemeResult out;
    out.scheme = Scheme::kBaseline2;
    out.has_schedule = true;

    IrsSchedule sched = IrsSchedule::all_harvest(cfg.b, N);
    PrecoderSet W = detail::mrt_equal_power(ch.h_d, cfg.p_max_w());
    double rate = -std::numeric_limits<double>::infinity();

    for (int t3 = 0; t3 < params.t3_max; ++t3) {
        // Direction refresh + power split for the current schedule.
        const Eigen::MatrixXcd m = effective_channels(ch, sched);
        const Eigen::MatrixXcd& basis =
            (params.mrt_basis == MrtBasis::kEffective) ? m : ch.h_d;
        Eigen::MatrixXcd U;
        Eigen::MatrixXd a;
        detail::mrt_power_terms(m, basis, U, a);

        const Eigen::VectorXd s1 = sched.s1();
        const double noise_part = cfg.eta_h * ch.sigma_a2 * s1.sum();
        const double floor = irs_consumption(sched, cfg) - noise_part;
        Eigen::VectorXd hvec;
        if (floor > 0.0) {
            hvec.resize(K);
            for (int j = 0; j < K; ++j)
                hvec(j) = cfg.eta_h * (ch.G * U.col(j)).cwiseAbs2().dot(s1);
        }
        const detail::PowerAllocation pa = detail::optimize_powers(
            a, ch.sigma_k2, cfg.p_max_w(), hvec, std::max(floor, 0.0),
            params.alg2.solver);
        if (pa.ok) {
            Eigen::MatrixXcd Wc = U;
            for (int k = 0; k < K; ++k) Wc.col(k) *= std::sqrt(std::max(pa.p(k), 0.0));
            const PrecoderSet cand = PrecoderSet::from_columns(Wc);
            const double cand_rate = sum_rate(ch, sched, cand);
            if (cand_rate >= rate || !std::isfinite(rate)) {
                W = cand;
                rate = cand_rate;
            }
        }

        // Schedule step for the fixed beams; a step that cannot improve
        // (including a solver breakdown on a pinched feasible set) keeps the
        // incumbent schedule.
        const Alg2Result a2 = run_algorithm2_generic(
            ch, W, cfg, Sp2ModeSet::full(cfg.b), sched.S(), params.alg2,
            /*enforce_c3=*/true);
        if (a2.rate >= rate) {
            sched = a2.schedule;
            rate = a2.rate;
        }

        const double prev = out.outer_trace.empty()
                                ? -std::numeric_limits<double>::infinity()
                                : out.outer_trace.back();
        out.outer_trace.push_back(rate);
        if (std::abs(rate - prev) < params.tol_outer) {
            out.converged = true;
            break;
        }
    }

    out.sum_rate = rate;
    out.schedule = sched;
    out.precoders = W;
    out.feasibility = check_feasibility(ch, sched, W, cfg);
    out.wall_time = detail::elapsed_seconds(t0);
    return out;
}

// Reflection-only upper bounds: no power balance, no harvesting mode. Both
// variants first alternate the transmit step with the unit-disc reflection
// relaxation. The continuous variant then projects the converged
// coefficients to unit modulus (phases preserved) and re-polishes the beams;
// the discrete variant snaps them to the nearest realizable phase and keeps
// alternating over the B phase modes from that start. Half-steps that cannot
// improve keep the incumbent pair (see run_proposed).
inline SchemeResult run_upper_bound(const ChannelRealization& ch, const ScenarioConfig& cfg,
                                    const SchemeParams& params = {},
                                    bool continuous = false) {
    const auto t0 = std::chrono::steady_clock::now();
    const int N = static_cast<int>(ch.G.rows());
    SchemeResult out;
    out.scheme = continuous ? Scheme::kUpperBoundContinuous : Scheme::kUpperBound;
    out.has_schedule = true;

    Alg1Params a1p = params.alg1;
    a1p.enforce_c3 = false;
    FeasibilityChecks checks;
    checks.self_sustain = false;

    // Continuous-phase alternation from the direct-channel beams.
    detail::ReflectStage st = detail::alternate_reflect(ch, cfg, params, a1p);
    IrsSchedule sched = std::move(st.sched);
    PrecoderSet W = std::move(st.W);
    double rate = st.rate;
    std::vector<double> trace = std::move(st.trace);
    out.converged = st.converged;

    if (continuous) {
        // Project to unit modulus (phase preserved) and re-polish the beams
        // so the reported pair is consistent.
        Eigen::VectorXcd alpha = sched.alpha_tilde();
        for (int n = 0; n < N; ++n) {
            const double mag = std::abs(alpha(n));
            alpha(n) = (mag > 0.0) ? alpha(n) / mag : cd(1.0, 0.0);
        }
        sched = IrsSchedule::continuous(cfg.b, std::move(alpha));
        const Alg1Result polish = run_algorithm1(ch, sched, W, cfg, a1p);
        if (!polish.solve_failed) W = polish.precoders;
        rate = sum_rate(ch, sched, W);
        trace.push_back(rate);
        checks.discrete_modes = false;
        out.outer_trace = std::move(trace);
    } else {
        // Snap each element to its nearest realizable phase, then alternate
        // over the discrete phase modes. The reported trace covers the
        // discrete stage only; its starting value already carries the
        // projection loss.
        sched = IrsSchedule::binary(
            cfg.b, detail::nearest_phase_indices(sched.alpha_tilde(), cfg.b));
        out.converged = false;
        rate = sum_rate(ch, sched, W);
        out.outer_trace.push_back(rate);
        const Sp2ModeSet modes = Sp2ModeSet::reflect_only(cfg.b);

        for (int t3 = 0; t3 < params.t3_max; ++t3) {
            const Alg1Result a1 = run_algorithm1(ch, sched, W, cfg, a1p);
            W = a1.precoders;
            double cur = a1.rate;

            const Alg2Result a2 = run_algorithm2_generic(
                ch, W, cfg, modes, sched.S().bottomRows(modes.rows()), params.alg2,
                /*enforce_c3=*/false);
            if (a2.rate >= cur) {
                sched = a2.schedule;
                cur = a2.rate;
            }
            out.outer_trace.push_back(cur);
            const double moved = cur - rate;
            rate = cur;
            if (std::abs(moved) < params.tol_outer) {
                out.converged = true;
                break;
            }
        }
    }

    out.sum_rate = rate;
    out.schedule = sched;
    out.precoders = W;
    out.feasibility = check_feasibility(ch, sched, W, cfg, checks);
    out.wall_time = detail::elapsed_seconds(t0);
    return out;
}

inline SchemeResult run_scheme(Scheme scheme, const ChannelRealization& ch,
                               const ScenarioConfig& cfg, const SchemeParams& params = {}) {
    switch (scheme) {
        case Scheme::kProposed: return run_proposed(ch, cfg, params);
        case Scheme::kBaseline1: return run_baseline1(ch, cfg, params.alg2.solver);
        case Scheme::kBaseline2: return run_baseline2(ch, cfg, params);
        case Scheme::kUpperBound: return run_upper_bound(ch, cfg, params, false);
        case Scheme::kUpperBoundContinuous: return run_upper_bound(ch, cfg, params, true);
    }
    throw std::invalid_argument("run_scheme: unknown scheme");
}

}  // namespace ssirs
