#pragma once

// Dense revised simplex for small linear programs in inequality form
//
//     minimize / maximize   c^T x
//     subject to            A x >= b,   lower <= x <= upper
//
// Variables are free unless bounded. Internally the problem is brought to
// standard form by splitting x = x+ - x- and adding one surplus per row; the
// basis inverse is kept explicitly and refactored periodically. Pricing is
// Dantzig's rule, switching to Bland's rule after every degenerate pivot so
// that degenerate sequences cannot cycle.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "polycbf/errors.hpp"
#include "polycbf/types.hpp"

namespace polycbf {

enum class LpStatus { Optimal, Infeasible, Unbounded };
enum class LpSense { Minimize, Maximize };

template <typename Scalar>
struct LpProblem {
    LpSense sense = LpSense::Minimize;
    VectorX<Scalar> cost;
    MatrixX<Scalar> rows; // rows * x >= rhs
    VectorX<Scalar> rhs;
    // Empty means unbounded on that side; individual entries may be +-inf.
    VectorX<Scalar> lower;
    VectorX<Scalar> upper;
};

template <typename Scalar>
struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    VectorX<Scalar> x;
    Scalar objective = 0;

    // Dual certificate on `optimal`. With c_min = c (minimize) or -c
    // (maximize): c_min = rows^T y + lower_duals - upper_duals, all duals >= 0.
    VectorX<Scalar> row_duals;
    VectorX<Scalar> lower_duals;
    VectorX<Scalar> upper_duals;
    Scalar dual_objective = 0;

    // Improving direction on `unbounded`.
    VectorX<Scalar> ray;
    // On `infeasible`: w >= 0 over the rows (then lower, then upper bound
    // rows) with A_all^T w = 0 and b_all^T w > 0.
    VectorX<Scalar> farkas;

    Scalar primal_residual = 0;
    Scalar complementarity_residual = 0;
    int iterations = 0;
};

struct LpOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    double breakdown_tol = 1e-12;
    int refactor_every = 32;
};

namespace detail {

template <typename Scalar>
class RevisedSimplex {
public:
    // Standard form: E z = f, z >= 0, f >= 0. Columns [0, n_struct) are
    // structural; artificial columns follow and are basic initially where
    // needed.
    RevisedSimplex(MatrixX<Scalar> E, VectorX<Scalar> f, std::vector<int> basis, int n_struct,
                   const LpOptions& opt)
        : E_(std::move(E)), f_(std::move(f)), basis_(std::move(basis)), n_struct_(n_struct),
          opt_(opt)
    {
        const int m = static_cast<int>(E_.rows());
        in_basis_.assign(E_.cols(), -1);
        for (int i = 0; i < m; ++i)
            in_basis_[basis_[i]] = i;
        refactor();
    }

    enum class Outcome { Optimal, Unbounded };

    // Runs simplex iterations for the given cost. Columns >= allowed_cols may
    // not enter the basis.
    Outcome run(const VectorX<Scalar>& cost, int allowed_cols)
    {
        const int m = static_cast<int>(E_.rows());
        bool bland = false;
        const int max_iter = 50 * (m + static_cast<int>(E_.cols())) + 1000;
        for (;;) {
            if (iterations_ > max_iter)
                throw Error(ErrorKind::NumericalBreakdown, "simplex iteration limit exceeded");

            VectorX<Scalar> cb(m);
            for (int i = 0; i < m; ++i)
                cb(i) = cost(basis_[i]);
            duals_ = binv_.transpose() * cb;

            int entering = -1;
            Scalar best = -static_cast<Scalar>(opt_.optimality_tol);
            for (int j = 0; j < allowed_cols; ++j) {
                if (in_basis_[j] >= 0)
                    continue;
                const Scalar d = cost(j) - duals_.dot(E_.col(j));
                if (d < best) {
                    entering = j;
                    if (bland)
                        break;
                    best = d;
                }
            }
            if (entering < 0)
                return Outcome::Optimal;

            const VectorX<Scalar> w = binv_ * E_.col(entering);
            const VectorX<Scalar> xb = basic_values();
            int leave = -1;
            Scalar ratio = std::numeric_limits<Scalar>::infinity();
            Scalar max_w = 0;
            for (int i = 0; i < m; ++i) {
                max_w = std::max(max_w, w(i));
                if (w(i) <= static_cast<Scalar>(opt_.pivot_tol))
                    continue;
                const Scalar t = std::max<Scalar>(xb(i), 0) / w(i);
                const Scalar tie = static_cast<Scalar>(1e-12) * std::max<Scalar>(1, std::abs(ratio));
                if (leave < 0 || t < ratio - tie) {
                    leave = i;
                    ratio = t;
                } else if (std::abs(t - ratio) <= tie) {
                    const bool better = bland ? basis_[i] < basis_[leave] : w(i) > w(leave);
                    if (better) {
                        leave = i;
                        ratio = std::min(ratio, t);
                    }
                }
            }
            if (leave < 0) {
                if (max_w > static_cast<Scalar>(opt_.breakdown_tol)) {
                    // Only tiny pivots available: retry with Bland's rule,
                    // give up if that already was the rule in force.
                    if (bland)
                        throw Error(ErrorKind::NumericalBreakdown,
                                    "pivot magnitude below tolerance under Bland's rule");
                    bland = true;
                    continue;
                }
                ray_entering_ = entering;
                ray_w_ = w;
                return Outcome::Unbounded;
            }
            bland = ratio <= static_cast<Scalar>(1e-12);
            pivot(leave, entering, w);
        }
    }

    // Removes artificial columns (index >= n_struct) from the basis by
    // degenerate pivots on structural columns.
    void drive_out_artificials()
    {
        const int m = static_cast<int>(E_.rows());
        for (int r = 0; r < m; ++r) {
            if (basis_[r] < n_struct_)
                continue;
            int best_col = -1;
            Scalar best_mag = static_cast<Scalar>(opt_.pivot_tol);
            VectorX<Scalar> best_w;
            for (int j = 0; j < n_struct_; ++j) {
                if (in_basis_[j] >= 0)
                    continue;
                const Scalar entry = binv_.row(r).dot(E_.col(j));
                if (std::abs(entry) > best_mag) {
                    best_mag = std::abs(entry);
                    best_col = j;
                }
            }
            if (best_col < 0)
                throw Error(ErrorKind::NumericalBreakdown, "cannot remove artificial from basis");
            pivot(r, best_col, binv_ * E_.col(best_col));
        }
    }

    VectorX<Scalar> basic_values() const { return binv_ * f_; }

    VectorX<Scalar> primal() const
    {
        VectorX<Scalar> z = VectorX<Scalar>::Zero(E_.cols());
        const VectorX<Scalar> xb = basic_values();
        for (int i = 0; i < static_cast<int>(basis_.size()); ++i)
            z(basis_[i]) = std::max<Scalar>(xb(i), 0);
        return z;
    }

    const VectorX<Scalar>& duals() const { return duals_; }
    int iterations() const { return iterations_; }

    VectorX<Scalar> ray() const
    {
        VectorX<Scalar> dz = VectorX<Scalar>::Zero(E_.cols());
        dz(ray_entering_) = 1;
        for (int i = 0; i < static_cast<int>(basis_.size()); ++i)
            dz(basis_[i]) = -ray_w_(i);
        return dz;
    }

private:
    void pivot(int leave, int entering, const VectorX<Scalar>& w)
    {
        const Scalar p = w(leave);
        if (std::abs(p) < static_cast<Scalar>(opt_.breakdown_tol))
            throw Error(ErrorKind::NumericalBreakdown, "pivot magnitude below 1e-12");
        binv_.row(leave) /= p;
        for (int i = 0; i < binv_.rows(); ++i) {
            if (i != leave && w(i) != 0)
                binv_.row(i) -= w(i) * binv_.row(leave);
        }
        in_basis_[basis_[leave]] = -1;
        basis_[leave] = entering;
        in_basis_[entering] = leave;
        ++iterations_;
        if (iterations_ % opt_.refactor_every == 0)
            refactor();
    }

    void refactor()
    {
        const int m = static_cast<int>(E_.rows());
        MatrixX<Scalar> B(m, m);
        for (int i = 0; i < m; ++i)
            B.col(i) = E_.col(basis_[i]);
        Eigen::FullPivLU<MatrixX<Scalar>> lu(B);
        if (!lu.isInvertible())
            throw Error(ErrorKind::NumericalBreakdown, "singular simplex basis");
        binv_ = lu.inverse();
    }

    MatrixX<Scalar> E_;
    VectorX<Scalar> f_;
    std::vector<int> basis_;
    std::vector<int> in_basis_;
    int n_struct_;
    LpOptions opt_;
    MatrixX<Scalar> binv_;
    VectorX<Scalar> duals_;
    int iterations_ = 0;
    int ray_entering_ = -1;
    VectorX<Scalar> ray_w_;
};

} // namespace detail

template <typename Scalar>
LpSolution<Scalar> lp_solve(const LpProblem<Scalar>& p, const LpOptions& opt = {})
{
    using Vec = VectorX<Scalar>;
    using Mat = MatrixX<Scalar>;

    const int k = static_cast<int>(p.cost.size());
    const int m_user = static_cast<int>(p.rows.rows());
    if (p.rows.cols() != k && m_user > 0)
        throw Error(ErrorKind::InvalidSpec, "LP row width does not match cost length");
    if (p.rhs.size() != m_user)
        throw Error(ErrorKind::InvalidSpec, "LP rhs length does not match row count");
    if (!p.cost.allFinite() || !p.rows.allFinite() || !p.rhs.allFinite())
        throw Error(ErrorKind::NonFinite, "LP coefficients must be finite");

    // Bounds become extra rows.
    std::vector<int> lower_idx, upper_idx;
    for (int j = 0; j < p.lower.size(); ++j)
        if (std::isfinite(p.lower(j)))
            lower_idx.push_back(j);
    for (int j = 0; j < p.upper.size(); ++j)
        if (std::isfinite(p.upper(j)))
            upper_idx.push_back(j);

    const int m = m_user + static_cast<int>(lower_idx.size() + upper_idx.size());
    Mat A = Mat::Zero(m, k);
    Vec b(m);
    if (m_user > 0) {
        A.topRows(m_user) = p.rows;
        b.head(m_user) = p.rhs;
    }
    int row = m_user;
    for (int j : lower_idx) {
        A(row, j) = 1;
        b(row++) = p.lower(j);
    }
    for (int j : upper_idx) {
        A(row, j) = -1;
        b(row++) = -p.upper(j);
    }

    const Vec cmin = p.sense == LpSense::Minimize ? p.cost : Vec(-p.cost);

    if (m == 0) {
        LpSolution<Scalar> sol;
        sol.x = Vec::Zero(k);
        Eigen::Index j = 0;
        if (k == 0 || cmin.cwiseAbs().maxCoeff(&j) == 0) {
            sol.status = LpStatus::Optimal;
            sol.row_duals = Vec(0);
            sol.lower_duals = Vec::Zero(k);
            sol.upper_duals = Vec::Zero(k);
            return sol;
        }
        sol.status = LpStatus::Unbounded;
        sol.ray = Vec::Zero(k);
        sol.ray(j) = cmin(j) > 0 ? -1 : 1;
        sol.objective = p.sense == LpSense::Minimize ? -std::numeric_limits<Scalar>::infinity()
                                                     : std::numeric_limits<Scalar>::infinity();
        return sol;
    }

    // Standard form columns: x+ (k), x- (k), surplus (m), artificials.
    std::vector<Scalar> sign(m);
    std::vector<int> art_rows;
    for (int i = 0; i < m; ++i) {
        sign[i] = b(i) > 0 ? Scalar(1) : Scalar(-1);
        if (b(i) > 0)
            art_rows.push_back(i);
    }
    const int n_struct = 2 * k + m;
    const int n_art = static_cast<int>(art_rows.size());
    Mat E = Mat::Zero(m, n_struct + n_art);
    Vec f(m);
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) {
        E.row(i).segment(0, k) = sign[i] * A.row(i);
        E.row(i).segment(k, k) = -sign[i] * A.row(i);
        E(i, 2 * k + i) = -sign[i];
        f(i) = sign[i] * b(i);
        basis[i] = 2 * k + i; // surplus is basic when its column is +e_i
    }
    for (int a = 0; a < n_art; ++a) {
        E(art_rows[a], n_struct + a) = 1;
        basis[art_rows[a]] = n_struct + a;
    }

    detail::RevisedSimplex<Scalar> simplex(std::move(E), f, std::move(basis), n_struct, opt);
    LpSolution<Scalar> sol;

    auto split_row_vector = [&](const Vec& w, LpSolution<Scalar>& out) {
        out.row_duals = w.head(m_user);
        out.lower_duals = Vec::Zero(k);
        out.upper_duals = Vec::Zero(k);
        int r = m_user;
        for (int j : lower_idx)
            out.lower_duals(j) = w(r++);
        for (int j : upper_idx)
            out.upper_duals(j) = w(r++);
    };

    if (n_art > 0) {
        Vec phase1 = Vec::Zero(n_struct + n_art);
        phase1.tail(n_art).setOnes();
        simplex.run(phase1, n_struct + n_art);
        const Vec z = simplex.primal();
        const Scalar infeas = z.tail(n_art).sum();
        const Scalar scale = std::max<Scalar>(1, b.cwiseAbs().maxCoeff());
        if (infeas > static_cast<Scalar>(opt.feasibility_tol) * scale) {
            sol.status = LpStatus::Infeasible;
            Vec w(m);
            for (int i = 0; i < m; ++i)
                w(i) = std::max<Scalar>(sign[i] * simplex.duals()(i), 0);
            sol.farkas = w;
            sol.iterations = simplex.iterations();
            return sol;
        }
        simplex.drive_out_artificials();
    }

    Vec phase2 = Vec::Zero(n_struct + n_art);
    phase2.segment(0, k) = cmin;
    phase2.segment(k, k) = -cmin;
    const auto outcome = simplex.run(phase2, n_struct);
    sol.iterations = simplex.iterations();

    const Vec z = simplex.primal();
    sol.x = z.segment(0, k) - z.segment(k, k);

    if (outcome == detail::RevisedSimplex<Scalar>::Outcome::Unbounded) {
        sol.status = LpStatus::Unbounded;
        const Vec dz = simplex.ray();
        sol.ray = dz.segment(0, k) - dz.segment(k, k);
        sol.objective = p.sense == LpSense::Minimize ? -std::numeric_limits<Scalar>::infinity()
                                                     : std::numeric_limits<Scalar>::infinity();
        return sol;
    }

    sol.status = LpStatus::Optimal;
    Vec lambda(m);
    for (int i = 0; i < m; ++i)
        lambda(i) = sign[i] * simplex.duals()(i);
    split_row_vector(lambda, sol);
    sol.objective = p.cost.dot(sol.x);
    const Scalar dual_min = b.dot(lambda);
    sol.dual_objective = p.sense == LpSense::Minimize ? dual_min : -dual_min;

    const Vec slack = A * sol.x - b;
    sol.primal_residual = m > 0 ? std::max<Scalar>(0, -slack.minCoeff()) : Scalar(0);
    sol.complementarity_residual =
        m > 0 ? (lambda.array() * slack.array()).abs().maxCoeff() : Scalar(0);
    return sol;
}

} // namespace polycbf
