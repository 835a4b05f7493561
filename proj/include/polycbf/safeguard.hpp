#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "polycbf/cbf.hpp"
#include "polycbf/input_set.hpp"
#include "polycbf/plant.hpp"
#include "polycbf/qp.hpp"

namespace polycbf {

/// Cost u^T Q(x) u + q(x)^T u + q_alpha alpha^2 + q_M M^2 with the lower
/// bounds alpha >= c_alpha, M >= c_M.
struct QpWeights {
    std::function<Matrix(const Vector& x)> Q;        // unset: identity
    std::function<Vector(const Vector& x)> q;        // unset: zero
    double q_alpha = 1e4;
    double q_M = 1.0;
    double c_alpha = 40.0;
    double c_M = 1.0;

    void validate() const;
};

struct RowMargin {
    int term = 0;
    int index = 0;
    double margin = 0;
};

struct SafeguardResult {
    Vector u_star;
    double alpha_star = 0;
    double M_star = 0;
    std::vector<RowMargin> margins;
    QpSolution<double> qp;

    double min_margin() const;
};

struct SafeguardOptions {
    // Required B(x) >= -neighborhood.
    double neighborhood = 0.1;
};

/// Closed-form rows of the safeguarding program at x. One row per
/// (term, i in extended term), then alpha >= c_alpha, M >= c_M, then the
/// input-set rows. Decision vector z = (u, alpha, M).
QpProblem<double> safeguard_problem(const ExtendedCbf& cbf, const PlantModel& plant,
                                    const QpWeights& weights, const InputSet& input_set,
                                    const Vector& x, const std::optional<Vector>& u_nom);

/// Solves the safeguarding QP. With a nominal input the linear cost becomes
/// q = -2 Q u_nom, i.e. minimum-deviation filtering. Throws Infeasible when
/// the program has no solution and OutsideNeighborhood when B(x) is below
/// -options.neighborhood.
SafeguardResult safeguard(const ExtendedCbf& cbf, const PlantModel& plant,
                          const QpWeights& weights, const InputSet& input_set, const Vector& x,
                          const std::optional<Vector>& u_nom, const SafeguardOptions& options = {});

/// Row values grad B_i^T (f + G u) + alpha B_i + M (B - B^l), recomputed from
/// the barrier and plant without the QP matrices.
std::vector<RowMargin> safeguard_margins(const ExtendedCbf& cbf, const PlantModel& plant,
                                         const Vector& x, const Vector& u, double alpha,
                                         double M);

/// max ||u*(x_{k+1}) - u*(x_k)|| / ||x_{k+1} - x_k|| along a path. Consecutive
/// identical states are skipped.
double continuity_probe(const ExtendedCbf& cbf, const PlantModel& plant,
                        const QpWeights& weights, const InputSet& input_set,
                        const std::vector<Vector>& path,
                        const std::function<Vector(const Vector&)>& u_nom = {});

} // namespace polycbf
