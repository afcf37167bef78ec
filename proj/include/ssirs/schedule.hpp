#pragma once

// Per-element IRS operating schedule.
//
// The canonical representation is a selection matrix S of size (B+1) x N,
// B = 2^b: row 0 selects the harvesting mode, row i >= 1 selects reflection
// with phase (i-1) * 2*pi/B.  A binary schedule has one-hot columns; a
// relaxed schedule allows fractional entries with column sums <= 1.  The
// per-element reflection coefficient is always
//     alpha_n = sum_i S(i, n) * mode_set(b)[i],
// and v = conj(alpha) is the stacked variable used by the optimizers.
// The continuous form (used by the idealized upper bound) stores alpha
// directly, anywhere in the closed unit disk, without a selection matrix.

#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ssirs/modes.hpp"

namespace ssirs {

enum class ScheduleForm { kBinary, kRelaxed, kContinuous };

class IrsSchedule {
  public:
    static IrsSchedule binary(int b, const std::vector<int>& modes) {
        const int B = 1 << b;
        const int N = static_cast<int>(modes.size());
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(B + 1, N);
        for (int n = 0; n < N; ++n) {
            if (modes[n] < 0 || modes[n] > B)
                throw std::invalid_argument("IrsSchedule: mode index out of range");
            S(modes[n], n) = 1.0;
        }
        return IrsSchedule(b, ScheduleForm::kBinary, std::move(S));
    }

    static IrsSchedule relaxed(int b, Eigen::MatrixXd S) {
        const int B = 1 << b;
        if (S.rows() != B + 1)
            throw std::invalid_argument("IrsSchedule: S must have 2^b + 1 rows");
        constexpr double tol = 1e-9;
        for (int n = 0; n < S.cols(); ++n) {
            double colsum = 0.0;
            for (int i = 0; i < S.rows(); ++i) {
                if (S(i, n) < -tol || S(i, n) > 1.0 + tol)
                    throw std::invalid_argument("IrsSchedule: entries must lie in [0, 1]");
                S(i, n) = std::min(1.0, std::max(0.0, S(i, n)));
                colsum += S(i, n);
            }
            if (colsum > 1.0 + tol)
                throw std::invalid_argument("IrsSchedule: column sums must not exceed 1");
        }
        return IrsSchedule(b, ScheduleForm::kRelaxed, std::move(S));
    }

    static IrsSchedule continuous(int b, Eigen::VectorXcd alpha) {
        constexpr double tol = 1e-9;
        for (int n = 0; n < alpha.size(); ++n)
            if (std::abs(alpha(n)) > 1.0 + tol)
                throw std::invalid_argument("IrsSchedule: |alpha| must not exceed 1");
        IrsSchedule s(b, ScheduleForm::kContinuous, Eigen::MatrixXd());
        s.alpha_ = std::move(alpha);
        return s;
    }

    static IrsSchedule all_harvest(int b, int N) {
        return binary(b, std::vector<int>(N, 0));
    }

    // All elements reflecting with the same phase index (1-based reflection
    // mode; default phase 0).
    static IrsSchedule all_reflect(int b, int N, int phase_index = 0) {
        const int B = 1 << b;
        if (phase_index < 0 || phase_index >= B)
            throw std::invalid_argument("IrsSchedule: phase index out of range");
        return binary(b, std::vector<int>(N, phase_index + 1));
    }

    int b() const { return b_; }
    int num_modes() const { return (1 << b_) + 1; }
    int size() const { return static_cast<int>(alpha_.size()); }
    ScheduleForm form() const { return form_; }

    const Eigen::MatrixXd& S() const {
        assert(form_ != ScheduleForm::kContinuous);
        return S_;
    }
    const Eigen::VectorXcd& alpha_tilde() const { return alpha_; }
    Eigen::VectorXcd v() const { return alpha_.conjugate(); }

    // Harvest-mode weights s_1 (zero for the continuous form, which never
    // harvests).
    Eigen::VectorXd s1() const {
        if (form_ == ScheduleForm::kContinuous) return Eigen::VectorXd::Zero(alpha_.size());
        return S_.row(0).transpose();
    }

    // Binary-form mode index of element n (0 = harvest).
    int mode_index(int n) const {
        assert(form_ == ScheduleForm::kBinary);
        for (int i = 0; i < S_.rows(); ++i)
            if (S_(i, n) == 1.0) return i;
        return 0;  // all-zero column counts as harvesting
    }

  private:
    IrsSchedule(int b, ScheduleForm form, Eigen::MatrixXd S)
        : b_(b), form_(form), S_(std::move(S)) {
        if (b_ < 1) throw std::invalid_argument("IrsSchedule: b must be >= 1");
        if (form_ != ScheduleForm::kContinuous) {
            const std::vector<cd> modes = mode_set(b_);
            alpha_.resize(S_.cols());
            for (int n = 0; n < S_.cols(); ++n) {
                cd a(0.0, 0.0);
                for (int i = 0; i < S_.rows(); ++i) a += S_(i, n) * modes[i];
                alpha_(n) = a;
            }
        }
    }

    int b_;
    ScheduleForm form_;
    Eigen::MatrixXd S_;       // (B+1) x N
    Eigen::VectorXcd alpha_;  // N
};

}  // namespace ssirs
