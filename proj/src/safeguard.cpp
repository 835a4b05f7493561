#include "polycbf/safeguard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace polycbf {

void QpWeights::validate() const
{
    if (!(q_alpha > 0 && q_M > 0 && c_alpha > 0 && c_M > 0))
        throw Error(ErrorKind::InvalidSpec, "q_alpha, q_M, c_alpha and c_M must be positive");
}

double SafeguardResult::min_margin() const
{
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : margins)
        m = std::min(m, r.margin);
    return m;
}

QpProblem<double> safeguard_problem(const ExtendedCbf& cbf, const PlantModel& plant,
                                    const QpWeights& weights, const InputSet& input_set,
                                    const Vector& x, const std::optional<Vector>& u_nom)
{
    weights.validate();
    const int n = cbf.position_dim();
    const int r = cbf.base_count();
    const int m = plant.m;
    const Vector x1 = x.head(n);
    const Vector x2 = x.tail(n);

    const ActiveSet act = eval_B(cbf, x);
    const Vector f2 = plant.f2(x1, x2);
    const Matrix G2 = plant.G2(x1);
    const Matrix& A = cbf.spec().normals();
    const Vector ax2 = A * x2;
    const Vector af2 = A * f2;
    const Matrix aG2 = A * G2;

    const auto [Gu, hu] = input_set.polytope(m);
    int cbf_rows = 0;
    for (const auto& term : cbf.extended_terms())
        cbf_rows += static_cast<int>(term.size());
    const int total = cbf_rows + 2 + static_cast<int>(Gu.rows());

    QpProblem<double> qp;
    qp.G = Matrix::Zero(total, m + 2);
    qp.h = Vector::Zero(total);
    int row = 0;
    for (std::size_t l = 0; l < cbf.extended_terms().size(); ++l) {
        const double gap = act.value - act.per_term_min(static_cast<Eigen::Index>(l));
        for (int i : cbf.extended_terms()[l]) {
            // -(grad_u u + B_i alpha + gap M) <= drift
            double drift;
            if (i < r) {
                drift = ax2(i);
            } else {
                drift = cbf.gamma() * ax2(i - r) + af2(i - r);
                qp.G.row(row).head(m) = -aG2.row(i - r);
            }
            qp.G(row, m) = -act.values(i);
            qp.G(row, m + 1) = -gap;
            qp.h(row) = drift;
            ++row;
        }
    }
    qp.G(row, m) = -1;
    qp.h(row++) = -weights.c_alpha;
    qp.G(row, m + 1) = -1;
    qp.h(row++) = -weights.c_M;
    if (Gu.rows() > 0) {
        qp.G.block(row, 0, Gu.rows(), m) = Gu;
        qp.h.segment(row, hu.size()) = hu;
    }

    const Matrix Q = weights.Q ? weights.Q(x) : Matrix::Identity(m, m);
    if (Q.rows() != m || Q.cols() != m)
        throw Error(ErrorKind::InvalidSpec, "Q(x) has the wrong shape");
    qp.P = Matrix::Zero(m + 2, m + 2);
    qp.P.topLeftCorner(m, m) = 2.0 * Q;
    qp.P(m, m) = 2.0 * weights.q_alpha;
    qp.P(m + 1, m + 1) = 2.0 * weights.q_M;
    qp.c = Vector::Zero(m + 2);
    if (u_nom)
        qp.c.head(m) = -2.0 * Q * *u_nom;
    else if (weights.q)
        qp.c.head(m) = weights.q(x);
    return qp;
}

std::vector<RowMargin> safeguard_margins(const ExtendedCbf& cbf, const PlantModel& plant,
                                         const Vector& x, const Vector& u, double alpha, double M)
{
    const int n = cbf.position_dim();
    const Vector x1 = x.head(n);
    const Vector x2 = x.tail(n);
    Vector xdot(2 * n);
    xdot << x2, plant.f2(x1, x2) + plant.G2(x1) * u;

    const ActiveSet act = eval_B(cbf, x);
    std::vector<RowMargin> out;
    for (std::size_t l = 0; l < cbf.extended_terms().size(); ++l) {
        const double gap = act.value - act.per_term_min(static_cast<Eigen::Index>(l));
        for (int i : cbf.extended_terms()[l]) {
            const double bdot = cbf.rows().row(i).dot(xdot);
            out.push_back({static_cast<int>(l), i, bdot + alpha * act.values(i) + M * gap});
        }
    }
    return out;
}

SafeguardResult safeguard(const ExtendedCbf& cbf, const PlantModel& plant,
                          const QpWeights& weights, const InputSet& input_set, const Vector& x,
                          const std::optional<Vector>& u_nom, const SafeguardOptions& options)
{
    if (x.size() != cbf.state_dim())
        throw Error(ErrorKind::InvalidSpec, "state dimension mismatch");
    const double b = eval_B(cbf, x).value;
    if (b < -options.neighborhood)
        throw Error(ErrorKind::OutsideNeighborhood,
                    "B(x) = " + std::to_string(b) + " is outside the feasibility neighborhood");

    const auto qp = safeguard_problem(cbf, plant, weights, input_set, x, u_nom);
    SafeguardResult out;
    out.qp = solve_qp(qp);
    if (out.qp.status != QpStatus::Optimal)
        throw Error(ErrorKind::Infeasible, "safeguarding program is infeasible at B(x) = " +
                                               std::to_string(b));
    const int m = plant.m;
    out.u_star = out.qp.z.head(m);
    out.alpha_star = out.qp.z(m);
    out.M_star = out.qp.z(m + 1);
    out.margins = safeguard_margins(cbf, plant, x, out.u_star, out.alpha_star, out.M_star);
    return out;
}

double continuity_probe(const ExtendedCbf& cbf, const PlantModel& plant,
                        const QpWeights& weights, const InputSet& input_set,
                        const std::vector<Vector>& path,
                        const std::function<Vector(const Vector&)>& u_nom)
{
    double ratio = 0;
    std::optional<Vector> prev_u;
    const Vector* prev_x = nullptr;
    for (const auto& x : path) {
        std::optional<Vector> nominal;
        if (u_nom)
            nominal = u_nom(x);
        const Vector u = safeguard(cbf, plant, weights, input_set, x, nominal).u_star;
        if (prev_x) {
            const double dx = (x - *prev_x).norm();
            if (dx > 0)
                ratio = std::max(ratio, (u - *prev_u).norm() / dx);
        }
        prev_u = u;
        prev_x = &x;
    }
    return ratio;
}

} // namespace polycbf
