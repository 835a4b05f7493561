#include "polycbf/input_set.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "polycbf/errors.hpp"

namespace polycbf {

InputSet InputSet::box(Vector limits)
{
    if (limits.size() == 0 || (limits.array() <= 0).any())
        throw Error(ErrorKind::InvalidSpec, "box limits must be positive");
    InputSet s(Kind::Box);
    s.limits_ = std::move(limits);
    return s;
}

InputSet InputSet::ball(double radius, int facets)
{
    if (!(radius > 0))
        throw Error(ErrorKind::InvalidSpec, "ball radius must be positive");
    if (facets < 3)
        throw Error(ErrorKind::InvalidSpec, "ball approximation needs at least 3 facets");
    InputSet s(Kind::Ball);
    s.radius_ = radius;
    s.facets_ = facets;
    return s;
}

std::pair<Matrix, Vector> InputSet::polytope(int m) const
{
    switch (kind_) {
    case Kind::Unbounded:
        return {Matrix(0, m), Vector(0)};
    case Kind::Box: {
        if (limits_.size() != m)
            throw Error(ErrorKind::InvalidSpec, "box limits do not match input dimension");
        Matrix G(2 * m, m);
        G << Matrix::Identity(m, m), -Matrix::Identity(m, m);
        Vector h(2 * m);
        h << limits_, limits_;
        return {G, h};
    }
    case Kind::Ball: {
        if (m == 2) {
            // Vertices on the circle: the facet offset is d cos(pi / F).
            Matrix G(facets_, 2);
            for (int k = 0; k < facets_; ++k) {
                const double phi = 2.0 * std::numbers::pi * k / facets_;
                G(k, 0) = std::cos(phi);
                G(k, 1) = std::sin(phi);
            }
            return {G, Vector::Constant(facets_, radius_ * std::cos(std::numbers::pi / facets_))};
        }
        const double half = radius_ / std::sqrt(static_cast<double>(m));
        Matrix G(2 * m, m);
        G << Matrix::Identity(m, m), -Matrix::Identity(m, m);
        return {G, Vector::Constant(2 * m, half)};
    }
    }
    return {Matrix(0, m), Vector(0)};
}

bool InputSet::contains(const Vector& u, double tol) const
{
    if (kind_ == Kind::Unbounded)
        return true;
    const auto [G, h] = polytope(static_cast<int>(u.size()));
    return ((G * u - h).array() <= tol).all();
}

std::optional<std::pair<double, double>> InputSet::admissible_steps(const Vector& u0,
                                                                    const Vector& v) const
{
    double lo = 0;
    double hi = std::numeric_limits<double>::infinity();
    if (kind_ == Kind::Unbounded)
        return std::pair{lo, hi};
    const auto [G, h] = polytope(static_cast<int>(u0.size()));
    const Vector base = h - G * u0;
    const Vector slope = G * v;
    for (Eigen::Index k = 0; k < G.rows(); ++k) {
        // base_k - beta slope_k >= 0
        if (slope(k) > 0)
            hi = std::min(hi, base(k) / slope(k));
        else if (slope(k) < 0)
            lo = std::max(lo, base(k) / slope(k));
        else if (base(k) < 0)
            return std::nullopt;
    }
    if (lo > hi)
        return std::nullopt;
    return std::pair{lo, hi};
}

} // namespace polycbf
