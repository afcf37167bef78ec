#pragma once

// Problem description for the barrier interior-point engine.
//
// A problem owns a flat real variable vector x of length n and is assembled
// from:
//   * box bounds (per coordinate, +-inf admitted),
//   * Hermitian PSD matrix blocks mapped onto coordinate ranges through the
//     standard real parameterization (diagonal reals followed by
//     re/im pairs of the upper triangle),
//   * smooth convex inequality constraints g_i(x) <= 0 declared with an
//     explicit coordinate support (the solver exploits supports to keep the
//     Newton systems block-structured),
//   * affine equalities A x = b (sparse triplets), and
//   * a smooth convex objective whose Hessian support is declared the same
//     way.
//
// Oracles receive only the coordinates in their support, in support order.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cassert>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace ssirs::convex {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- Hermitian block <-> real parameter mapping -------------------------
//
// A Hermitian M x M matrix X is stored as M*M reals:
//   x[0..M-1]            diagonal (real),
//   then for each pair (i, j), i < j, in row-major pair order:
//   x[M + 2p] = Re X_ij,  x[M + 2p + 1] = Im X_ij.
// With basis matrices E_q (dX/dx_q), X = sum_q x_q E_q holds exactly.

inline int herm_param_count(int M) { return M * M; }

inline void herm_pack(const MatrixXcd& X, Eigen::Ref<VectorXd> out) {
    const int M = static_cast<int>(X.rows());
    assert(out.size() == herm_param_count(M));
    for (int i = 0; i < M; ++i) out(i) = X(i, i).real();
    int p = M;
    for (int i = 0; i < M; ++i)
        for (int j = i + 1; j < M; ++j) {
            out(p++) = X(i, j).real();
            out(p++) = X(i, j).imag();
        }
}

inline MatrixXcd herm_unpack(const Eigen::Ref<const VectorXd>& x, int M) {
    assert(x.size() == herm_param_count(M));
    MatrixXcd X(M, M);
    for (int i = 0; i < M; ++i) X(i, i) = x(i);
    int p = M;
    for (int i = 0; i < M; ++i)
        for (int j = i + 1; j < M; ++j) {
            const std::complex<double> v(x(p), x(p + 1));
            p += 2;
            X(i, j) = v;
            X(j, i) = std::conj(v);
        }
    return X;
}

// Coefficients c with Tr(X(x) A) == c.dot(x) for Hermitian A.
inline VectorXd herm_inner_coeffs(const MatrixXcd& A) {
    const int M = static_cast<int>(A.rows());
    VectorXd c(herm_param_count(M));
    for (int i = 0; i < M; ++i) c(i) = A(i, i).real();
    int p = M;
    for (int i = 0; i < M; ++i)
        for (int j = i + 1; j < M; ++j) {
            c(p++) = 2.0 * A(i, j).real();
            c(p++) = 2.0 * A(i, j).imag();
        }
    return c;
}

// ---- Problem pieces ------------------------------------------------------

struct PsdBlock {
    int offset = 0;  // first coordinate of the block's parameters
    int dim = 0;     // matrix dimension M (occupies M*M coordinates)
};

struct Constraint {
    std::string name;
    std::vector<int> support;  // global coordinates, ascending
    // Oracles over xs = x(support).
    std::function<double(const VectorXd&)> value;
    std::function<VectorXd(const VectorXd&)> grad;
    // Hessian on the support; leave empty for affine constraints.
    std::function<MatrixXd(const VectorXd&)> hess;
};

struct Objective {
    // Full-vector oracles; value must return +inf outside its own domain.
    std::function<double(const VectorXd&)> value;
    std::function<VectorXd(const VectorXd&)> grad;
    // Coordinates carrying objective curvature, plus the Hessian restricted
    // to them.  Empty support means a linear (or constant) objective.
    std::vector<int> hess_support;
    std::function<MatrixXd(const VectorXd&)> hess;
};

struct ConvexProblem {
    int n = 0;
    VectorXd lower, upper;  // size n; +-kInf where absent
    std::vector<PsdBlock> psd;
    Objective obj;
    std::vector<Constraint> ineq;
    // Affine equalities A x = b.
    std::vector<Eigen::Triplet<double>> eq_triplets;
    int n_eq = 0;
    VectorXd eq_rhs;

    void init(int n_coords) {
        n = n_coords;
        lower = VectorXd::Constant(n, -kInf);
        upper = VectorXd::Constant(n, kInf);
    }

    // Total barrier degree: one per finite bound and inequality, dim per PSD
    // block.  Drives the duality-gap bound m / t.
    double barrier_degree() const {
        double m = static_cast<double>(ineq.size());
        for (int i = 0; i < n; ++i) {
            if (lower(i) > -kInf) m += 1.0;
            if (upper(i) < kInf) m += 1.0;
        }
        for (const auto& b : psd) m += b.dim;
        return m;
    }
};

enum class SolveStatus { kOptimal, kMaxIter, kInfeasible, kNumericalFailure };

struct BarrierStage {
    double gap = 0.0;  // m / t after the stage
    int newton_steps = 0;
    double objective = 0.0;
};

struct SolveResult {
    SolveStatus status = SolveStatus::kNumericalFailure;
    VectorXd x;
    double objective = std::numeric_limits<double>::quiet_NaN();
    double kkt_residual = kInf;
    std::vector<BarrierStage> trace;
    std::string message;
};

struct SolverOptions {
    double tol = 1e-7;       // target duality-gap bound m / t
    double mu_factor = 10.0; // barrier weight growth per outer stage
    int max_newton = 50;     // damped Newton steps per stage
    int max_outer = 30;      // barrier stages
    double armijo_alpha = 0.3;
    double backtrack_beta = 0.8;
    // Initial gap m / t0; 0 selects t0 = 1.  Warm starts near the optimum
    // may pass a small value (e.g. 1e-3) to skip early stages.
    double initial_gap = 0.0;
};

}  // namespace ssirs::convex
