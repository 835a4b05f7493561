#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "polycbf/input_set.hpp"
#include "polycbf/plant.hpp"
#include "polycbf/polytope.hpp"

namespace polycbf {

/// Max-min barrier over the state x = (x1, x2) built from 2r affine functions
///   B_i(x)     = a_i^T x1 + b_i                              (i < r)
///   B_{i+r}(x) = a_i^T x2 + gamma (a_i^T x1 + b_i) - epsilon
/// with extended terms I^l U (r + I^l). Requires gamma * delta > epsilon.
class ExtendedCbf {
public:
    ExtendedCbf(SafetySpec spec, GeometryCert cert, double gamma, double epsilon);

    const SafetySpec& spec() const { return spec_; }
    const GeometryCert& cert() const { return cert_; }
    double gamma() const { return gamma_; }
    double epsilon() const { return epsilon_; }

    int position_dim() const { return spec_.dim(); }
    int state_dim() const { return 2 * spec_.dim(); }
    int base_count() const { return spec_.size(); }
    int count() const { return 2 * spec_.size(); }

    const std::vector<IndexSet>& extended_terms() const { return extended_terms_; }

    /// Stacked gradients (2r x 2n) and offsets: B(x) values are rows * x + offsets.
    const Matrix& rows() const { return rows_; }
    const Vector& offsets() const { return offsets_; }
    Vector eval_all(const Vector& x) const { return rows_ * x + offsets_; }

    Matrix term_rows(int term) const;
    Vector term_offsets(int term) const;

private:
    SafetySpec spec_;
    GeometryCert cert_;
    double gamma_;
    double epsilon_;
    std::vector<IndexSet> extended_terms_;
    Matrix rows_;
    Vector offsets_;
};

ExtendedCbf build_cbf(const SafetySpec& spec, const GeometryCert& cert, double gamma,
                      double epsilon);

inline constexpr double kActivationTol = 1e-9;

struct ActiveSet {
    double value = 0;
    IndexSet argmax_terms;
    IndexSet active_indices;
    Vector per_term_min;
    Vector values; // all 2r B_i(x)
};

ActiveSet eval_B(const ExtendedCbf& cbf, const Vector& x, double tol = kActivationTol);

/// (x1, -gamma sigma (x1 - y)) with y the witness of the maximizing term and
/// sigma = (1 + epsilon / (gamma delta)) / 2. Throws NotInC for x1 outside C.
Vector lift_position(const ExtendedCbf& cbf, const Vector& x1);

/// Every extended term is a bounded polytope in R^{2n}.
bool check_compactness(const ExtendedCbf& cbf);

struct VelocityCert {
    double gamma = 0;
    double epsilon = 0;
    double per_component_bound = 0;
    double norm_bound = 0;
    double c = 0;
};

/// max |x2_j| over each extended term by LP; norm_bound = sqrt(n) * max.
VelocityCert velocity_bound(const ExtendedCbf& cbf);

/// Deterministic points with |B(x)| <= 1e-9, stratified over the facets
/// {B_i = 0} of each extended term. Facets that are empty, or lie inside
/// another term, contribute nothing.
std::vector<Vector> sample_boundary(const ExtendedCbf& cbf, int count, std::uint64_t seed);

struct ConditionSample {
    Vector x;
    IndexSet active;
    IndexSet critical;          // i < r with B_{i+r} active and zero
    std::optional<Vector> witness; // u_x
    double beta = 0;
    double margin = 0;          // min over critical rows; +inf when vacuous
    bool feasible = false;
};

struct ConditionReport {
    std::vector<ConditionSample> samples;

    bool all_feasible() const;
    double worst_margin() const;
    int infeasible_count() const;
};

/// Boundary check of a_i^T (gamma x2 + f2 + G2 u_x) > 0 for every critical
/// row, with the witness u_x = -G2^+ (f2 + gamma x2) + beta y_x,
/// y_x = -x2 - gamma x1 + gamma y_{I_x}. beta is 1 for unbounded inputs and
/// otherwise the largest step keeping u_x admissible.
ConditionReport verify_safety_condition(const ExtendedCbf& cbf, const PlantModel& plant,
                                        const InputSet& input_set,
                                        const std::vector<Vector>& samples);

/// Recomputes the condition margin for a given witness input.
double condition_margin(const ExtendedCbf& cbf, const PlantModel& plant, const Vector& x,
                        const IndexSet& critical, const Vector& u);

} // namespace polycbf
