#pragma once

// Primal active-set solver for small strictly convex QPs
//
//     minimize    1/2 z^T P z + c^T z
//     subject to  G z <= h
//
// A feasible start comes from an LP phase 1; an infeasible program is
// reported with the LP's Farkas vector. Each iteration solves the
// equality-constrained subproblem on the working set through the Cholesky
// factor of P and the Schur complement G_W P^{-1} G_W^T.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "polycbf/errors.hpp"
#include "polycbf/lp.hpp"
#include "polycbf/types.hpp"

namespace polycbf {

template <typename Scalar>
struct QpProblem {
    MatrixX<Scalar> P;
    VectorX<Scalar> c;
    MatrixX<Scalar> G;
    VectorX<Scalar> h;
};

enum class QpStatus { Optimal, Infeasible };

template <typename Scalar>
struct KktResiduals {
    Scalar stationarity = 0;
    Scalar primal = 0;
    Scalar complementarity = 0;
    Scalar dual = 0; // magnitude of the most negative multiplier

    Scalar max() const { return std::max({stationarity, primal, complementarity, dual}); }
};

template <typename Scalar>
struct QpSolution {
    QpStatus status = QpStatus::Infeasible;
    VectorX<Scalar> z;
    VectorX<Scalar> multipliers; // one per row, zero off the active set
    std::vector<int> active;
    KktResiduals<Scalar> residuals;
    // On `infeasible`: w >= 0, G^T w = 0, h^T w < 0.
    VectorX<Scalar> farkas;
    int iterations = 0;
};

/// Scaled KKT residuals: each term is divided by one plus the magnitude of
/// the quantities it balances, so large multipliers near degenerate vertices
/// do not swamp the measure.
template <typename Scalar>
KktResiduals<Scalar> kkt_residuals(const QpProblem<Scalar>& p, const VectorX<Scalar>& z,
                                   const VectorX<Scalar>& lambda)
{
    KktResiduals<Scalar> r;
    const VectorX<Scalar> Pz = p.P * z;
    VectorX<Scalar> grad = Pz + p.c;
    Scalar scale = std::max(Pz.cwiseAbs().maxCoeff(), p.c.cwiseAbs().maxCoeff());
    if (p.G.rows() > 0) {
        const VectorX<Scalar> Gl = p.G.transpose() * lambda;
        grad += Gl;
        scale = std::max(scale, Gl.cwiseAbs().maxCoeff());
        const VectorX<Scalar> slack = p.G * z - p.h;
        r.primal = std::max<Scalar>(0, slack.maxCoeff()) / (1 + p.h.cwiseAbs().maxCoeff());
        r.complementarity =
            ((lambda.array() * slack.array()).abs() / (1 + lambda.array().abs())).maxCoeff();
        r.dual = std::max<Scalar>(0, -lambda.minCoeff()) / (1 + lambda.cwiseAbs().maxCoeff());
    }
    r.stationarity = grad.cwiseAbs().maxCoeff() / (1 + scale);
    return r;
}

template <typename Scalar>
QpSolution<Scalar> solve_qp(const QpProblem<Scalar>& p)
{
    using Vec = VectorX<Scalar>;
    using Mat = MatrixX<Scalar>;

    const Eigen::Index nz = p.P.rows();
    const Eigen::Index rows = p.G.rows();
    if (p.P.cols() != nz || p.c.size() != nz || (rows > 0 && p.G.cols() != nz) ||
        p.h.size() != rows)
        throw Error(ErrorKind::InvalidSpec, "QP dimensions are inconsistent");

    const Scalar scale = std::max<Scalar>(1, p.P.cwiseAbs().maxCoeff());
    if ((p.P - p.P.transpose()).cwiseAbs().maxCoeff() > static_cast<Scalar>(1e-12) * scale)
        throw Error(ErrorKind::NotPositiveDefinite, "cost matrix is not symmetric");
    const Eigen::LLT<Mat> llt(p.P);
    if (llt.info() != Eigen::Success)
        throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization failed");
    {
        const Vec diag = Mat(llt.matrixL()).diagonal();
        if (diag.minCoeff() <= static_cast<Scalar>(1e-10) * std::sqrt(scale))
            throw Error(ErrorKind::NotPositiveDefinite, "cost matrix is numerically singular");
    }

    QpSolution<Scalar> sol;
    Vec z;
    if (rows > 0) {
        LpProblem<Scalar> lp;
        lp.cost = Vec::Zero(nz);
        lp.rows = -p.G;
        lp.rhs = -p.h;
        const auto feas = lp_solve(lp);
        if (feas.status == LpStatus::Infeasible) {
            sol.status = QpStatus::Infeasible;
            sol.farkas = feas.farkas;
            return sol;
        }
        z = feas.x;
    } else {
        z = Vec::Zero(nz);
    }

    std::vector<int> working;
    std::vector<bool> in_working(static_cast<std::size_t>(rows), false);
    Vec lambda_w;
    const int max_iter = 20 * static_cast<int>(rows + nz) + 100;
    const Scalar step_tol = static_cast<Scalar>(1e-12);
    // Set after an unblocked full step: z is then the minimizer on the
    // working set and only the multipliers remain to be checked.
    bool at_minimizer = false;

    for (int iter = 0;; ++iter) {
        if (iter > max_iter)
            throw Error(ErrorKind::NumericalBreakdown, "active-set iteration limit exceeded");
        sol.iterations = iter;

        const Vec g = p.P * z + p.c;
        Vec step;
        const Eigen::Index w = static_cast<Eigen::Index>(working.size());
        if (w == 0) {
            step = -llt.solve(g);
            lambda_w.resize(0);
        } else {
            Mat Aw(w, nz);
            for (Eigen::Index k = 0; k < w; ++k)
                Aw.row(k) = p.G.row(working[static_cast<std::size_t>(k)]);
            const Mat PinvAt = llt.solve(Aw.transpose());
            const Vec Pinvg = llt.solve(g);
            const Mat S = Aw * PinvAt;
            const Eigen::LDLT<Mat> ldlt(S);
            if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
                throw Error(ErrorKind::NumericalBreakdown, "degenerate working set");
            lambda_w = ldlt.solve(-(Aw * Pinvg));
            step = -Pinvg - PinvAt * lambda_w;
        }

        if (at_minimizer || w >= nz ||
            step.cwiseAbs().maxCoeff() <= step_tol * (1 + z.cwiseAbs().maxCoeff())) {
            // Bland's rule: drop the lowest-indexed row with a negative multiplier.
            Eigen::Index drop = -1;
            for (Eigen::Index k = 0; k < w; ++k) {
                if (lambda_w(k) < -step_tol * scale &&
                    (drop < 0 || working[static_cast<std::size_t>(k)] <
                                     working[static_cast<std::size_t>(drop)]))
                    drop = k;
            }
            if (drop < 0)
                break;
            in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = false;
            working.erase(working.begin() + drop);
            at_minimizer = false;
            continue;
        }

        Scalar alpha = 1;
        int blocking = -1;
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (in_working[static_cast<std::size_t>(i)])
                continue;
            const Scalar gp = p.G.row(i).dot(step);
            if (gp <= std::numeric_limits<Scalar>::epsilon() * step.cwiseAbs().maxCoeff())
                continue;
            const Scalar slack = std::max<Scalar>(0, p.h(i) - p.G.row(i).dot(z));
            const Scalar t = slack / gp;
            if (t < alpha) {
                alpha = t;
                blocking = static_cast<int>(i);
            }
        }
        z += alpha * step;
        if (blocking >= 0) {
            working.push_back(blocking);
            in_working[static_cast<std::size_t>(blocking)] = true;
        } else {
            at_minimizer = true;
        }
    }

    sol.status = QpStatus::Optimal;
    sol.z = z;
    sol.multipliers = Vec::Zero(rows);
    for (std::size_t k = 0; k < working.size(); ++k)
        sol.multipliers(working[k]) = std::max<Scalar>(0, lambda_w(static_cast<Eigen::Index>(k)));
    sol.active = working;
    std::sort(sol.active.begin(), sol.active.end());
    sol.residuals = kkt_residuals(p, sol.z, sol.multipliers);

    // Polish: solve the KKT system of the final working set directly, with
    // one step of iterative refinement, and keep it if it is no worse.
    const Eigen::Index w = static_cast<Eigen::Index>(working.size());
    if (w > 0) {
        Mat K = Mat::Zero(nz + w, nz + w);
        Vec rhs(nz + w);
        K.topLeftCorner(nz, nz) = p.P;
        rhs.head(nz) = -p.c;
        for (Eigen::Index k = 0; k < w; ++k) {
            const auto i = working[static_cast<std::size_t>(k)];
            K.block(nz + k, 0, 1, nz) = p.G.row(i);
            K.block(0, nz + k, nz, 1) = p.G.row(i).transpose();
            rhs(nz + k) = p.h(i);
        }
        const Eigen::FullPivLU<Mat> lu(K);
        Vec sz = lu.solve(rhs);
        sz += lu.solve(rhs - K * sz);
        Vec mult = Vec::Zero(rows);
        for (Eigen::Index k = 0; k < w; ++k)
            mult(working[static_cast<std::size_t>(k)]) = std::max<Scalar>(0, sz(nz + k));
        const Vec zp = sz.head(nz);
        const auto res = kkt_residuals(p, zp, mult);
        if (zp.allFinite() && res.max() <= sol.residuals.max()) {
            sol.z = zp;
            sol.multipliers = mult;
            sol.residuals = res;
        }
    }
    return sol;
}

} // namespace polycbf
