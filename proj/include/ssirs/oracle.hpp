#pragma once

// Independent verification oracles, deliberately built from first principles
// rather than the optimization machinery they validate: exhaustive schedule
// enumeration with the exact single-user inner solution, central-difference
// gradient checks, and a Monte-Carlo estimate of the harvested power.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssirs/channel.hpp"
#include "ssirs/config.hpp"
#include "ssirs/metrics.hpp"
#include "ssirs/precoder.hpp"
#include "ssirs/rng.hpp"
#include "ssirs/schedule.hpp"

namespace ssirs {

// Deterministic mixed-radix enumeration of every per-element mode assignment
// (harvest plus the B phases).  Digits are little-endian in the element
// index: element 0 cycles fastest.  Refuses gratuitous blowups.
class ScheduleEnumerator {
  public:
    static constexpr std::int64_t kMaxConfigs = 1'000'000;

    ScheduleEnumerator(int N, int b) : N_(N), b_(b) {
        if (N < 0 || b < 1)
            throw std::invalid_argument("ScheduleEnumerator: need N >= 0 and b >= 1");
        const std::int64_t radix = (std::int64_t{1} << b) + 1;
        count_ = 1;
        for (int n = 0; n < N; ++n) {
            if (count_ > kMaxConfigs / radix)
                throw std::invalid_argument(
                    "ScheduleEnumerator: (B+1)^N exceeds " + std::to_string(kMaxConfigs) +
                    " configurations; reduce N or b");
            count_ *= radix;
        }
    }

    std::int64_t count() const { return count_; }
    int elements() const { return N_; }
    int bits() const { return b_; }

    IrsSchedule at(std::int64_t index) const {
        if (index < 0 || index >= count_)
            throw std::out_of_range("ScheduleEnumerator: index out of range");
        const std::int64_t radix = (std::int64_t{1} << b_) + 1;
        std::vector<int> modes(N_);
        for (int n = 0; n < N_; ++n) {
            modes[n] = static_cast<int>(index % radix);
            index /= radix;
        }
        return IrsSchedule::binary(b_, modes);
    }

  private:
    int N_ = 0;
    int b_ = 1;
    std::int64_t count_ = 1;
};

inline ScheduleEnumerator enumerate_schedules(int N, int b) { return {N, b}; }

// Exact single-user solution for a fixed schedule: the rate-optimal direction
// is the matched filter on the effective channel, and both the rate and the
// harvested power grow with the transmit power, so the largest self-
// sustaining power level wins and infeasibility at full power is decisive.
// The descending scan over `levels` power levels (plus zero) certifies that
// monotonicity on the actual instance instead of assuming it.  Returns the
// rate, or nullopt when no scanned level balances the panel draw.
inline std::optional<double> best_single_user(const ChannelRealization& ch,
                                              const IrsSchedule& sched,
                                              const ScenarioConfig& cfg,
                                              int levels = 100) {
    if (ch.h_d.cols() != 1)
        throw std::invalid_argument("best_single_user: single-user channels required");
    if (levels < 1) throw std::invalid_argument("best_single_user: levels must be >= 1");
    const Eigen::VectorXcd m = effective_channel(ch, sched, 0);
    const double m2 = m.squaredNorm();
    const double P = cfg.p_max_w();
    const double need = irs_consumption(sched, cfg);
    Eigen::VectorXcd dir = Eigen::VectorXcd::Zero(m.size());
    if (m2 > 0.0) dir = m / std::sqrt(m2);

    for (int i = levels; i >= 0; --i) {
        const double p = P * i / levels;
        const PrecoderSet pre = PrecoderSet::from_columns(std::sqrt(p) * dir);
        // Same absolute balance tolerance as check_feasibility, so the
        // envelope dominates every pair the feasibility gate admits.
        if (harvested_power(ch, sched, pre, cfg) - need >= -1e-9)
            return std::log2(1.0 + p * m2 / ch.sigma_k2(0));
    }
    return std::nullopt;
}

struct OracleReport {
    double best_rate = 0.0;
    IrsSchedule best_schedule = IrsSchedule::all_harvest(1, 0);
    std::int64_t configs_scanned = 0;
    std::int64_t feasible_count = 0;
};

// Brute force over every schedule with the exact single-user inner solution.
// Ties keep the first maximizer in enumeration order (deterministic).
inline OracleReport exhaustive_best(const ChannelRealization& ch, const ScenarioConfig& cfg,
                                    int levels = 100) {
    const ScheduleEnumerator en(static_cast<int>(ch.G.rows()), cfg.b);
    OracleReport rep;
    rep.best_rate = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < en.count(); ++i) {
        const IrsSchedule sched = en.at(i);
        const std::optional<double> r = best_single_user(ch, sched, cfg, levels);
        ++rep.configs_scanned;
        if (!r) continue;
        ++rep.feasible_count;
        if (*r > rep.best_rate) {
            rep.best_rate = *r;
            rep.best_schedule = sched;
        }
    }
    return rep;
}

// Scalar field with an analytic gradient, as consumed by the checker below.
struct ScalarField {
    std::function<double(const Eigen::VectorXd&)> value;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
};

// Worst-coordinate deviation of central differences from the analytic
// gradient, relative to the gradient's own scale.  Steps are absolute and
// per-coordinate; the scalar overload broadcasts one step to every
// coordinate.  Non-finite field evaluations are an error.
inline double finite_diff_check(const ScalarField& f, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& steps) {
    const int n = static_cast<int>(x.size());
    if (steps.size() != n)
        throw std::invalid_argument("finite_diff_check: steps/point size mismatch");
    const Eigen::VectorXd g = f.grad(x);
    if (g.size() != n)
        throw std::invalid_argument("finite_diff_check: gradient/point size mismatch");
    double worst_abs = 0.0;
    Eigen::VectorXd xp = x, xm = x;
    for (int i = 0; i < n; ++i) {
        const double s = steps(i);
        if (!(s > 0.0)) throw std::invalid_argument("finite_diff_check: steps must be > 0");
        xp(i) = x(i) + s;
        xm(i) = x(i) - s;
        const double fp = f.value(xp);
        const double fm = f.value(xm);
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::domain_error("finite_diff_check: non-finite field evaluation");
        worst_abs = std::max(worst_abs, std::abs((fp - fm) / (2.0 * s) - g(i)));
        xp(i) = x(i);
        xm(i) = x(i);
    }
    const double scale = g.cwiseAbs().maxCoeff();
    return (scale > 0.0) ? worst_abs / scale : worst_abs;
}

inline double finite_diff_check(const ScalarField& f, const Eigen::VectorXd& x,
                                double step = 1e-6) {
    return finite_diff_check(f, x, Eigen::VectorXd::Constant(x.size(), step));
}

// Empirical mean of the harvested quantity under random transmit symbols and
// harvester noise:  eta_h * E || diag(s1) (G sum_k w_k x_k + n_a) ||^2 with
// x_k standard complex Gaussian and n_a ~ CN(0, sigma_a^2 I).  Validates the
// closed trace form computed by harvested_power.
inline double montecarlo_harvest(const ChannelRealization& ch, const IrsSchedule& sched,
                                 const PrecoderSet& pre, const ScenarioConfig& cfg,
                                 std::int64_t draws, Rng& rng) {
    if (draws < 10'000)
        throw std::invalid_argument("montecarlo_harvest: draws must be >= 1e4");
    const Eigen::VectorXd s1 = sched.s1();
    if (s1.size() != ch.G.rows())
        throw std::invalid_argument("montecarlo_harvest: schedule/channel size mismatch");
    const int N = static_cast<int>(ch.G.rows());
    const int K = pre.users();
    const Eigen::MatrixXcd GW = ch.G * pre.W;  // N x K, per-user received columns
    const double noise_amp = std::sqrt(ch.sigma_a2);
    double acc = 0.0;
    Eigen::VectorXcd y(N);
    for (std::int64_t d = 0; d < draws; ++d) {
        y.setZero();
        for (int k = 0; k < K; ++k) y += GW.col(k) * rng.cgaussian();
        double draw = 0.0;
        for (int n = 0; n < N; ++n) {
            if (s1(n) == 0.0) continue;
            draw += s1(n) * std::norm(y(n) + noise_amp * rng.cgaussian());
        }
        acc += draw;
    }
    return cfg.eta_h * acc / static_cast<double>(draws);
}

}  // namespace ssirs
