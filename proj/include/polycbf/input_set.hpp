#pragma once

#include <optional>
#include <utility>

#include "polycbf/types.hpp"

namespace polycbf {

/// Admissible inputs. Every bounded variant is handled as a polytope
/// {u | G u <= h} so the safeguarding program stays a QP.
///
/// A Euclidean ball of radius d is replaced by an inscribed polytope: a
/// regular polygon with `facets` sides for m = 2, the interval [-d, d] for
/// m = 1, and the inscribed cube |u_j| <= d / sqrt(m) otherwise.
class InputSet {
public:
    enum class Kind { Unbounded, Box, Ball };

    static InputSet unbounded() { return InputSet(Kind::Unbounded); }
    static InputSet box(Vector limits);
    static InputSet ball(double radius, int facets = 16);

    Kind kind() const { return kind_; }
    double radius() const { return radius_; }
    int facets() const { return facets_; }
    const Vector& limits() const { return limits_; }

    /// (G, h) with G u <= h; zero rows when unbounded.
    std::pair<Matrix, Vector> polytope(int m) const;

    bool contains(const Vector& u, double tol = 1e-12) const;

    /// Interval of beta >= 0 with u0 + beta v admissible, or nullopt if empty.
    std::optional<std::pair<double, double>> admissible_steps(const Vector& u0,
                                                              const Vector& v) const;

private:
    explicit InputSet(Kind k) : kind_(k) {}

    Kind kind_;
    Vector limits_;
    double radius_ = 0;
    int facets_ = 0;
};

} // namespace polycbf
