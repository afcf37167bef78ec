#pragma once

// Barrier interior-point solver for the ConvexProblem family.
//
// Minimizes t*f(x) + sum_i -log(-g_i(x)) + sum_b -log det X_b(x) + box
// barriers over the affine set A x = b, increasing t by mu_factor per stage
// until the duality-gap bound m/t drops below tol.  Each stage runs damped
// Newton steps with Armijo backtracking; iterates stay strictly feasible
// throughout (the line search rejects points outside the barrier domain).
//
// The Newton system is solved by partitioning coordinates into independent
// curvature components (derived from constraint/objective supports and PSD
// blocks).  Equality constraints couple components only through the KKT
// multipliers, handled by a Schur complement on the equality rows; this keeps
// e.g. per-element selection columns as tiny independent blocks.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "ssirs/convex/problem.hpp"

namespace ssirs::convex {

namespace detail {

// Nonzero entries of the Hermitian basis matrix E_p of a dim-M block:
// at most two, stored as (row, col, value) with the conjugate implied
// explicitly listed.
struct BasisEntry {
    int r, c;
    std::complex<double> v;
};

struct HermBlockMeta {
    int offset = 0, dim = 0;
    // per-parameter basis entries (1 for diagonal, 2 for off-diagonal)
    std::vector<std::array<BasisEntry, 2>> entries;
    std::vector<int> entry_count;
};

inline HermBlockMeta make_block_meta(const PsdBlock& b) {
    HermBlockMeta m;
    m.offset = b.offset;
    m.dim = b.dim;
    const int M = b.dim;
    m.entries.resize(herm_param_count(M));
    m.entry_count.resize(herm_param_count(M));
    for (int i = 0; i < M; ++i) {
        m.entries[i][0] = {i, i, {1.0, 0.0}};
        m.entry_count[i] = 1;
    }
    int p = M;
    for (int i = 0; i < M; ++i)
        for (int j = i + 1; j < M; ++j) {
            m.entries[p][0] = {i, j, {1.0, 0.0}};
            m.entries[p][1] = {j, i, {1.0, 0.0}};
            m.entry_count[p] = 2;
            ++p;
            m.entries[p][0] = {i, j, {0.0, 1.0}};
            m.entries[p][1] = {j, i, {0.0, -1.0}};
            m.entry_count[p] = 2;
            ++p;
        }
    return m;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace detail

class BarrierSolver {
  public:
    BarrierSolver(const ConvexProblem& p, SolverOptions opts = {})
        : p_(p), opts_(opts) {
        build_structure();
    }

    // Optional early-exit predicate, checked after every Newton step (used
    // by phase 1 to stop as soon as the slack goes negative).
    std::function<bool(const VectorXd&)> stop_when;

    SolveResult solve(const VectorXd& x0) {
        SolveResult res;
        res.x = x0;
        if (x0.size() != p_.n) {
            res.message = "solve: x0 has wrong dimension";
            return res;
        }
        if (!domain_ok(x0)) {
            res.message = "solve: x0 is not strictly feasible";
            return res;
        }
        if (p_.n_eq > 0) {
            const double eqres = (A_ * x0 - p_.eq_rhs).cwiseAbs().maxCoeff();
            if (eqres > 1e-7 * (1.0 + p_.eq_rhs.cwiseAbs().maxCoeff())) {
                res.message = "solve: x0 violates the equality constraints";
                return res;
            }
        }

        const double m = std::max(1.0, p_.barrier_degree());
        double t = (opts_.initial_gap > 0.0) ? m / opts_.initial_gap : 1.0;
        VectorXd x = x0;

        int repeats = 0;
        for (int outer = 0; outer < opts_.max_outer; ++outer) {
            int steps = 0;
            const CenterOutcome oc = center(x, t, steps, res);
            res.trace.push_back({m / t, steps, p_.obj.value(x)});
            if (oc == CenterOutcome::kFailed) {
                res.x = x;
                res.objective = p_.obj.value(x);
                if (res.status != SolveStatus::kOptimal) res.status = SolveStatus::kNumericalFailure;
                return res;
            }
            if (stopped_early_) {
                res.x = x;
                res.objective = p_.obj.value(x);
                res.status = SolveStatus::kOptimal;
                res.kkt_residual = m / t;
                res.message = "early stop";
                return res;
            }
            if (oc == CenterOutcome::kBudget && repeats < 3) {
                // Newton budget ran out mid-centering (typical for starts
                // hugging the boundary): finish this stage before raising t.
                ++repeats;
                continue;
            }
            repeats = 0;
            if (m / t <= opts_.tol) {
                res.x = x;
                res.objective = p_.obj.value(x);
                res.status = SolveStatus::kOptimal;
                res.kkt_residual = kkt_residual(x, t, m);
                return res;
            }
            t *= opts_.mu_factor;
        }
        res.x = x;
        res.objective = p_.obj.value(x);
        res.status = SolveStatus::kMaxIter;
        res.kkt_residual = kkt_residual(x, t / opts_.mu_factor, m);
        res.message = "barrier stage budget exhausted";
        return res;
    }

  private:
    // ---- structure -------------------------------------------------------

    void build_structure() {
        const int n = p_.n;
        detail::UnionFind uf(n);
        for (const auto& c : p_.ineq)
            for (size_t i = 1; i < c.support.size(); ++i) uf.unite(c.support[0], c.support[i]);
        for (size_t i = 1; i < p_.obj.hess_support.size(); ++i)
            uf.unite(p_.obj.hess_support[0], p_.obj.hess_support[i]);
        for (const auto& b : p_.psd) {
            const int count = herm_param_count(b.dim);
            for (int i = 1; i < count; ++i) uf.unite(b.offset, b.offset + i);
        }

        std::vector<int> root_to_comp(n, -1);
        for (int i = 0; i < n; ++i) {
            const int r = uf.find(i);
            if (root_to_comp[r] < 0) {
                root_to_comp[r] = static_cast<int>(comp_coords_.size());
                comp_coords_.emplace_back();
            }
            comp_of_.push_back(root_to_comp[r]);
            local_of_.push_back(static_cast<int>(comp_coords_[root_to_comp[r]].size()));
            comp_coords_[root_to_comp[r]].push_back(i);
        }

        // Per-constraint and objective local index maps.
        ineq_comp_.resize(p_.ineq.size());
        ineq_local_.resize(p_.ineq.size());
        for (size_t ci = 0; ci < p_.ineq.size(); ++ci) {
            const auto& sup = p_.ineq[ci].support;
            assert(!sup.empty());
            ineq_comp_[ci] = comp_of_[sup[0]];
            ineq_local_[ci].reserve(sup.size());
            for (int g : sup) {
                assert(comp_of_[g] == ineq_comp_[ci]);
                ineq_local_[ci].push_back(local_of_[g]);
            }
        }
        if (!p_.obj.hess_support.empty()) {
            obj_comp_ = comp_of_[p_.obj.hess_support[0]];
            for (int g : p_.obj.hess_support) {
                assert(comp_of_[g] == obj_comp_);
                obj_local_.push_back(local_of_[g]);
            }
        }
        for (const auto& b : p_.psd) {
            blocks_.push_back(detail::make_block_meta(b));
            block_comp_.push_back(comp_of_[b.offset]);
        }

        // Equality rows grouped by component.
        if (p_.n_eq > 0) {
            A_.resize(p_.n_eq, n);
            A_.setFromTriplets(p_.eq_triplets.begin(), p_.eq_triplets.end());
            comp_eq_rows_.resize(comp_coords_.size());
            comp_eq_entries_.resize(comp_coords_.size());
            std::vector<std::vector<char>> seen(comp_coords_.size(),
                                                std::vector<char>(p_.n_eq, 0));
            for (const auto& t : p_.eq_triplets) {
                const int c = comp_of_[t.col()];
                if (!seen[c][t.row()]) {
                    seen[c][t.row()] = 1;
                    comp_eq_rows_[c].push_back(t.row());
                }
            }
            for (auto& rows : comp_eq_rows_) std::sort(rows.begin(), rows.end());
            std::vector<std::vector<int>> row_local(comp_coords_.size(),
                                                    std::vector<int>(p_.n_eq, -1));
            for (size_t c = 0; c < comp_eq_rows_.size(); ++c)
                for (size_t i = 0; i < comp_eq_rows_[c].size(); ++i)
                    row_local[c][comp_eq_rows_[c][i]] = static_cast<int>(i);
            for (const auto& t : p_.eq_triplets) {
                const int c = comp_of_[t.col()];
                comp_eq_entries_[c].push_back(
                    {row_local[c][t.row()], local_of_[t.col()], t.value()});
            }
        }
    }

    // ---- barrier pieces ----------------------------------------------------

    bool domain_ok(const VectorXd& x) const {
        for (int i = 0; i < p_.n; ++i) {
            if (p_.lower(i) > -kInf && x(i) <= p_.lower(i)) return false;
            if (p_.upper(i) < kInf && x(i) >= p_.upper(i)) return false;
        }
        for (const auto& c : p_.ineq) {
            if (c.value(gather(x, c.support)) >= 0.0) return false;
        }
        for (const auto& b : blocks_) {
            const MatrixXcd X = herm_unpack(x.segment(b.offset, herm_param_count(b.dim)), b.dim);
            Eigen::LLT<MatrixXcd> llt(X);
            if (llt.info() != Eigen::Success) return false;
        }
        return std::isfinite(p_.obj.value(x));
    }

    static VectorXd gather(const VectorXd& x, const std::vector<int>& idx) {
        VectorXd out(idx.size());
        for (size_t i = 0; i < idx.size(); ++i) out(i) = x(idx[i]);
        return out;
    }

    // Barrier potential scaled by 1/t: f(x) + B(x)/t.  Keeping the value at
    // objective scale preserves line-search resolution at large t, where the
    // classic t*f + B form drowns the barrier in floating-point rounding.
    double phi(const VectorXd& x, double t) const {
        const double f = p_.obj.value(x);
        if (!std::isfinite(f)) return kInf;
        double bar = 0.0;
        for (int i = 0; i < p_.n; ++i) {
            if (p_.lower(i) > -kInf) {
                const double s = x(i) - p_.lower(i);
                if (s <= 0.0) return kInf;
                bar -= std::log(s);
            }
            if (p_.upper(i) < kInf) {
                const double s = p_.upper(i) - x(i);
                if (s <= 0.0) return kInf;
                bar -= std::log(s);
            }
        }
        for (const auto& c : p_.ineq) {
            const double g = c.value(gather(x, c.support));
            if (g >= 0.0) return kInf;
            bar -= std::log(-g);
        }
        for (const auto& b : blocks_) {
            const MatrixXcd X = herm_unpack(x.segment(b.offset, herm_param_count(b.dim)), b.dim);
            Eigen::LLT<MatrixXcd> llt(X);
            if (llt.info() != Eigen::Success) return kInf;
            double logdet = 0.0;
            for (int i = 0; i < b.dim; ++i) logdet += std::log(llt.matrixL()(i, i).real());
            bar -= 2.0 * logdet;
        }
        return f + bar / t;
    }

    enum class CenterOutcome { kFailed, kCentered, kBudget };

    // One centering run at fixed t.
    CenterOutcome center(VectorXd& x, double t, int& steps, SolveResult& res) {
        stopped_early_ = false;
        const int ncomp = static_cast<int>(comp_coords_.size());
        std::vector<MatrixXd> H(ncomp);
        VectorXd gphi(p_.n);

        const double inv_t = 1.0 / t;
        for (steps = 0; steps < opts_.max_newton; ++steps) {
            // Gradient and per-component Hessian of the scaled potential
            // f + B/t (see phi above).
            gphi = p_.obj.grad(x);
            for (int c = 0; c < ncomp; ++c) {
                const int nc = static_cast<int>(comp_coords_[c].size());
                H[c].setZero(nc, nc);
            }
            if (!p_.obj.hess_support.empty()) {
                const MatrixXd Hf = p_.obj.hess(x);
                auto& Hc = H[obj_comp_];
                for (size_t a = 0; a < obj_local_.size(); ++a)
                    for (size_t b = 0; b < obj_local_.size(); ++b)
                        Hc(obj_local_[a], obj_local_[b]) += Hf(a, b);
            }
            for (int i = 0; i < p_.n; ++i) {
                double d2 = 0.0;
                if (p_.lower(i) > -kInf) {
                    const double s = x(i) - p_.lower(i);
                    gphi(i) -= inv_t / s;
                    d2 += inv_t / (s * s);
                }
                if (p_.upper(i) < kInf) {
                    const double s = p_.upper(i) - x(i);
                    gphi(i) += inv_t / s;
                    d2 += inv_t / (s * s);
                }
                if (d2 > 0.0) H[comp_of_[i]](local_of_[i], local_of_[i]) += d2;
            }
            for (size_t ci = 0; ci < p_.ineq.size(); ++ci) {
                const auto& con = p_.ineq[ci];
                const VectorXd xs = gather(x, con.support);
                const double g = con.value(xs);
                if (g >= 0.0) {
                    res.message = "center: iterate left the domain";
                    return CenterOutcome::kFailed;
                }
                const VectorXd gs = con.grad(xs);
                auto& Hc = H[ineq_comp_[ci]];
                const auto& loc = ineq_local_[ci];
                const double inv = 1.0 / (-g);
                for (size_t a = 0; a < loc.size(); ++a) gphi(con.support[a]) += inv_t * inv * gs(a);
                for (size_t a = 0; a < loc.size(); ++a)
                    for (size_t b = 0; b < loc.size(); ++b)
                        Hc(loc[a], loc[b]) += inv_t * gs(a) * gs(b) * inv * inv;
                if (con.hess) {
                    const MatrixXd Hg = con.hess(xs);
                    for (size_t a = 0; a < loc.size(); ++a)
                        for (size_t b = 0; b < loc.size(); ++b)
                            Hc(loc[a], loc[b]) += inv_t * inv * Hg(a, b);
                }
            }
            for (size_t bi = 0; bi < blocks_.size(); ++bi) {
                const auto& meta = blocks_[bi];
                const int M = meta.dim;
                const int np = herm_param_count(M);
                const MatrixXcd X = herm_unpack(x.segment(meta.offset, np), M);
                Eigen::LLT<MatrixXcd> llt(X);
                if (llt.info() != Eigen::Success) {
                    res.message = "center: PSD block left the cone";
                    return CenterOutcome::kFailed;
                }
                const MatrixXcd C = llt.solve(MatrixXcd::Identity(M, M));
                auto& Hc = H[block_comp_[bi]];
                for (int pidx = 0; pidx < np; ++pidx) {
                    std::complex<double> tr(0.0, 0.0);
                    for (int e = 0; e < meta.entry_count[pidx]; ++e) {
                        const auto& en = meta.entries[pidx][e];
                        tr += en.v * C(en.c, en.r);
                    }
                    gphi(meta.offset + pidx) -= inv_t * tr.real();
                }
                for (int pp = 0; pp < np; ++pp) {
                    const int lp = local_of_[meta.offset + pp];
                    for (int qq = pp; qq < np; ++qq) {
                        std::complex<double> acc(0.0, 0.0);
                        for (int e1 = 0; e1 < meta.entry_count[pp]; ++e1)
                            for (int e2 = 0; e2 < meta.entry_count[qq]; ++e2) {
                                const auto& a = meta.entries[pp][e1];  // (z, y, v)
                                const auto& b = meta.entries[qq][e2];  // (w, x, v')
                                acc += a.v * b.v * C(b.c, a.r) * C(a.c, b.r);
                            }
                        const int lq = local_of_[meta.offset + qq];
                        Hc(lp, lq) += inv_t * acc.real();
                        if (qq != pp) Hc(lq, lp) += inv_t * acc.real();
                    }
                }
            }

            // Newton direction through per-component factorizations and an
            // equality Schur complement.
            std::vector<Eigen::LLT<MatrixXd>> llts(ncomp);
            for (int c = 0; c < ncomp; ++c) {
                double ridge = 0.0;
                for (;;) {
                    MatrixXd Hr = H[c];
                    if (ridge > 0.0) Hr.diagonal().array() += ridge;
                    llts[c].compute(Hr);
                    if (llts[c].info() == Eigen::Success) break;
                    const double scale = std::max(1.0, H[c].diagonal().maxCoeff());
                    ridge = (ridge == 0.0) ? 1e-12 * scale : ridge * 100.0;
                    if (ridge > 1e-2 * scale) {
                        res.message = "center: Newton system not positive definite";
                        return CenterOutcome::kFailed;
                    }
                }
            }

            VectorXd dx(p_.n);
            std::vector<VectorXd> rhs1(ncomp);
            for (int c = 0; c < ncomp; ++c)
                rhs1[c] = llts[c].solve(gather_comp(gphi, c));

            if (p_.n_eq > 0) {
                MatrixXd Meq = MatrixXd::Zero(p_.n_eq, p_.n_eq);
                VectorXd y = VectorXd::Zero(p_.n_eq);
                std::vector<MatrixXd> B(ncomp);
                for (int c = 0; c < ncomp; ++c) {
                    const int rc = static_cast<int>(comp_eq_rows_[c].size());
                    if (rc == 0) continue;
                    const int nc = static_cast<int>(comp_coords_[c].size());
                    MatrixXd At = MatrixXd::Zero(nc, rc);
                    for (const auto& e : comp_eq_entries_[c]) At(e.local_col, e.local_row) += e.value;
                    B[c] = llts[c].solve(At);
                    MatrixXd Msub = MatrixXd::Zero(rc, rc);
                    for (const auto& e : comp_eq_entries_[c])
                        Msub.row(e.local_row) += e.value * B[c].row(e.local_col);
                    VectorXd ysub = VectorXd::Zero(rc);
                    for (const auto& e : comp_eq_entries_[c])
                        ysub(e.local_row) += e.value * rhs1[c](e.local_col);
                    for (int a = 0; a < rc; ++a) {
                        y(comp_eq_rows_[c][a]) += ysub(a);
                        for (int b = 0; b < rc; ++b)
                            Meq(comp_eq_rows_[c][a], comp_eq_rows_[c][b]) += Msub(a, b);
                    }
                }
                Eigen::LLT<MatrixXd> mllt(Meq);
                if (mllt.info() != Eigen::Success) {
                    Meq.diagonal().array() += 1e-12 * std::max(1.0, Meq.diagonal().maxCoeff());
                    mllt.compute(Meq);
                    if (mllt.info() != Eigen::Success) {
                        res.message = "center: singular equality Schur complement";
                        return CenterOutcome::kFailed;
                    }
                }
                const VectorXd w = mllt.solve(-y);
                for (int c = 0; c < ncomp; ++c) {
                    const int rc = static_cast<int>(comp_eq_rows_[c].size());
                    VectorXd dxc = -rhs1[c];
                    if (rc > 0) {
                        VectorXd wsub(rc);
                        for (int a = 0; a < rc; ++a) wsub(a) = w(comp_eq_rows_[c][a]);
                        dxc -= B[c] * wsub;
                    }
                    scatter_comp(dxc, c, dx);
                }
            } else {
                for (int c = 0; c < ncomp; ++c) scatter_comp(-rhs1[c], c, dx);
            }

            const double decrement2 = -gphi.dot(dx);
            if (decrement2 <= 2e-9) {  // centered
                return CenterOutcome::kCentered;
            }

            // Armijo backtracking on phi.
            const double phi0 = phi(x, t);
            const double slope = gphi.dot(dx);
            double step = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 120; ++ls) {
                const VectorXd xn = x + step * dx;
                const double ph = phi(xn, t);
                if (std::isfinite(ph) && ph <= phi0 + opts_.armijo_alpha * step * slope) {
                    x = xn;
                    accepted = true;
                    break;
                }
                step *= opts_.backtrack_beta;
            }
            if (!accepted) {
                // A stalled line search with a tiny decrement still counts as
                // centered; anything else is a numerical failure.
                if (decrement2 <= 1e-6) return CenterOutcome::kCentered;
                res.message = "center: line search failed";
                return CenterOutcome::kFailed;
            }
            if (stop_when && stop_when(x)) {
                stopped_early_ = true;
                return CenterOutcome::kCentered;
            }
        }
        return CenterOutcome::kBudget;  // Newton budget exhausted
    }

    VectorXd gather_comp(const VectorXd& x, int c) const {
        const auto& coords = comp_coords_[c];
        VectorXd out(coords.size());
        for (size_t i = 0; i < coords.size(); ++i) out(i) = x(coords[i]);
        return out;
    }

    void scatter_comp(const VectorXd& v, int c, VectorXd& out) const {
        const auto& coords = comp_coords_[c];
        for (size_t i = 0; i < coords.size(); ++i) out(coords[i]) = v(i);
    }

    double kkt_residual(const VectorXd& x, double t, double m) const {
        double r = m / t;
        if (p_.n_eq > 0)
            r = std::max(r, (A_ * x - p_.eq_rhs).cwiseAbs().maxCoeff());
        return r;
    }

    const ConvexProblem& p_;
    SolverOptions opts_;
    Eigen::SparseMatrix<double> A_;

    std::vector<std::vector<int>> comp_coords_;
    std::vector<int> comp_of_, local_of_;
    std::vector<int> ineq_comp_;
    std::vector<std::vector<int>> ineq_local_;
    int obj_comp_ = -1;
    std::vector<int> obj_local_;
    std::vector<detail::HermBlockMeta> blocks_;
    std::vector<int> block_comp_;
    struct EqEntry { int local_row, local_col; double value; };
    std::vector<std::vector<int>> comp_eq_rows_;
    std::vector<std::vector<EqEntry>> comp_eq_entries_;
    bool stopped_early_ = false;
};

inline SolveResult solve(const ConvexProblem& p, const VectorXd& x0, SolverOptions opts = {}) {
    BarrierSolver s(p, opts);
    return s.solve(x0);
}

// ---- Phase 1 --------------------------------------------------------------

struct Phase1Result {
    SolveStatus status = SolveStatus::kInfeasible;
    VectorXd x;
    std::string message;
};

// Finds a strictly feasible point of `p` by minimizing an auxiliary slack s
// over { g_i(x) <= s, bounds within s, A x = b, X_b > 0 }, stopping early
// once s < 0.  An optional hint seeds the search.
inline Phase1Result phase1_feasible(const ConvexProblem& p, const VectorXd& hint = VectorXd(),
                                    SolverOptions opts = {}) {
    Phase1Result out;

    // Seed: hint if provided, else box midpoints / zeros.
    VectorXd x0 = VectorXd::Zero(p.n);
    for (int i = 0; i < p.n; ++i) {
        const bool lo = p.lower(i) > -kInf, hi = p.upper(i) < kInf;
        if (lo && hi) x0(i) = 0.5 * (p.lower(i) + p.upper(i));
        else if (lo) x0(i) = p.lower(i) + 1.0;
        else if (hi) x0(i) = p.upper(i) - 1.0;
    }
    if (hint.size() == p.n) x0 = hint;

    // Restore equality feasibility by a least-squares projection.
    Eigen::SparseMatrix<double> A;
    if (p.n_eq > 0) {
        A.resize(p.n_eq, p.n);
        A.setFromTriplets(p.eq_triplets.begin(), p.eq_triplets.end());
        const MatrixXd Ad = MatrixXd(A);
        const VectorXd resid = Ad * x0 - p.eq_rhs;
        if (resid.cwiseAbs().maxCoeff() > 0.0) {
            Eigen::LLT<MatrixXd> llt(Ad * Ad.transpose());
            if (llt.info() != Eigen::Success) {
                out.message = "phase1: equality rows are rank deficient";
                out.status = SolveStatus::kNumericalFailure;
                return out;
            }
            x0 -= Ad.transpose() * llt.solve(resid);
        }
    }

    // PSD blocks must start inside the cone; fall back to the identity when
    // the seed is not strictly positive definite.
    for (const auto& b : p.psd) {
        const int np = herm_param_count(b.dim);
        MatrixXcd X = herm_unpack(x0.segment(b.offset, np), b.dim);
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(X);
        if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
            bool touched_by_eq = false;
            for (const auto& t : p.eq_triplets)
                if (t.col() >= b.offset && t.col() < b.offset + np) touched_by_eq = true;
            if (touched_by_eq) {
                out.message = "phase1: cannot reseed a PSD block constrained by equalities";
                out.status = SolveStatus::kNumericalFailure;
                return out;
            }
            herm_pack(MatrixXcd::Identity(b.dim, b.dim), x0.segment(b.offset, np));
        }
    }

    // Initial slack above every violation.
    double smax = 0.0;
    for (const auto& c : p.ineq) {
        VectorXd xs(c.support.size());
        for (size_t i = 0; i < c.support.size(); ++i) xs(i) = x0(c.support[i]);
        smax = std::max(smax, c.value(xs));
    }
    for (int i = 0; i < p.n; ++i) {
        if (p.lower(i) > -kInf) smax = std::max(smax, p.lower(i) - x0(i));
        if (p.upper(i) < kInf) smax = std::max(smax, x0(i) - p.upper(i));
    }

    // Already strictly feasible?  Check with a margin.
    if (smax < 0.0) {
        out.status = SolveStatus::kOptimal;
        out.x = x0;
        return out;
    }

    // Phase-1 problem over (x, s).
    ConvexProblem p1;
    p1.init(p.n + 1);
    const int si = p.n;
    p1.psd = p.psd;
    p1.eq_triplets = p.eq_triplets;
    p1.n_eq = p.n_eq;
    p1.eq_rhs = p.eq_rhs;
    p1.obj.value = [si](const VectorXd& x) { return x(si); };
    p1.obj.grad = [si](const VectorXd& x) {
        VectorXd g = VectorXd::Zero(x.size());
        g(si) = 1.0;
        return g;
    };
    for (const auto& c : p.ineq) {
        Constraint cc;
        cc.name = c.name + "-s";
        cc.support = c.support;
        cc.support.push_back(si);
        const auto base_v = c.value;
        const auto base_g = c.grad;
        const auto base_h = c.hess;
        cc.value = [base_v](const VectorXd& xs) {
            return base_v(xs.head(xs.size() - 1)) - xs(xs.size() - 1);
        };
        cc.grad = [base_g](const VectorXd& xs) {
            VectorXd g(xs.size());
            g.head(xs.size() - 1) = base_g(xs.head(xs.size() - 1));
            g(xs.size() - 1) = -1.0;
            return g;
        };
        if (base_h)
            cc.hess = [base_h](const VectorXd& xs) {
                MatrixXd H = MatrixXd::Zero(xs.size(), xs.size());
                H.topLeftCorner(xs.size() - 1, xs.size() - 1) = base_h(xs.head(xs.size() - 1));
                return H;
            };
        p1.ineq.push_back(std::move(cc));
    }
    for (int i = 0; i < p.n; ++i) {
        if (p.lower(i) > -kInf) {
            Constraint cc;
            cc.name = "lb-s";
            cc.support = {i, si};
            const double l = p.lower(i);
            cc.value = [l](const VectorXd& xs) { return l - xs(0) - xs(1); };
            cc.grad = [](const VectorXd& xs) { return (VectorXd(2) << -1.0, -1.0).finished(); };
            p1.ineq.push_back(std::move(cc));
        }
        if (p.upper(i) < kInf) {
            Constraint cc;
            cc.name = "ub-s";
            cc.support = {i, si};
            const double u = p.upper(i);
            cc.value = [u](const VectorXd& xs) { return xs(0) - u - xs(1); };
            cc.grad = [](const VectorXd& xs) { return (VectorXd(2) << 1.0, -1.0).finished(); };
            p1.ineq.push_back(std::move(cc));
        }
    }

    VectorXd x1(p.n + 1);
    x1.head(p.n) = x0;
    x1(si) = smax + 1.0 + 0.1 * std::abs(smax);

    SolverOptions o1 = opts;
    o1.tol = std::min(opts.tol, 1e-9);
    BarrierSolver solver(p1, o1);
    const double margin = 1e-9;
    solver.stop_when = [si, margin](const VectorXd& x) { return x(si) < -margin; };
    const SolveResult r = solver.solve(x1);

    if (r.x.size() == p.n + 1 && r.x(si) < -margin) {
        out.status = SolveStatus::kOptimal;
        out.x = r.x.head(p.n);
        return out;
    }
    if (r.status == SolveStatus::kOptimal || r.status == SolveStatus::kMaxIter) {
        out.status = SolveStatus::kInfeasible;
        out.message = "phase1: no strictly feasible point (slack optimum ~ " +
                      std::to_string(r.x.size() == p.n + 1 ? r.x(si) : kInf) + ")";
        return out;
    }
    out.status = SolveStatus::kNumericalFailure;
    out.message = "phase1: " + r.message;
    return out;
}

// Solve with a feasibility fallback: start from `hint` when it is strictly
// feasible, otherwise (or after a numerical failure) locate an interior point
// via phase 1 and solve cold from there.
inline SolveResult solve_with_phase1(const ConvexProblem& p, const VectorXd& hint,
                                     SolverOptions opts = {}) {
    if (hint.size() == p.n) {
        BarrierSolver s(p, opts);
        SolveResult r = s.solve(hint);
        if (r.status == SolveStatus::kOptimal || r.status == SolveStatus::kMaxIter) return r;
    }
    const Phase1Result ph = phase1_feasible(p, hint, opts);
    if (ph.status != SolveStatus::kOptimal) {
        SolveResult r;
        r.status = ph.status;
        r.message = ph.message.empty() ? "phase1 could not find an interior point" : ph.message;
        return r;
    }
    SolverOptions cold = opts;
    cold.initial_gap = 0.0;  // the phase-1 point may sit far from the optimum
    return solve(p, ph.x, cold);
}

}  // namespace ssirs::convex
