#include "polycbf/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "polycbf/cbf.hpp"
#include "polycbf/rng.hpp"

namespace polycbf {

Vector PlantModel::state_derivative(const Vector& x, const Vector& u) const
{
    const Vector x1 = x.head(n);
    const Vector x2 = x.tail(n);
    Vector dx(2 * n);
    dx << x2, f2(x1, x2) + G2(x1) * u;
    return dx;
}

Matrix right_inverse(const Matrix& G2, double tol)
{
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(G2);
    Matrix pinv = cod.pseudoInverse();
    const double residual =
        (G2 * pinv - Matrix::Identity(G2.rows(), G2.rows())).norm();
    if (!(residual <= tol))
        throw Error(ErrorKind::NotRightInvertible,
                    "||G2 G2^+ - I|| = " + std::to_string(residual));
    return pinv;
}

ArmCoefficients ArmParams::coefficients() const
{
    ArmCoefficients c;
    const double h = m2 * l1 * l2;
    c.c11 = (m1 + m2) * l1 * l1 + m2 * l2 * l2;
    c.c12 = 2.0 * h;
    c.c13 = m2 * l2 * l2;
    c.c14 = h;
    c.c15 = 2.0 * h;
    c.c16 = h;
    c.c21 = m2 * l2 * l2;
    c.c22 = m2 * l2 * l2;
    c.c23 = h;
    c.c24 = -h;
    c.c25 = gravity ? -m2 * g * l2 : 0.0;
    return c;
}

namespace {

Eigen::Matrix2d arm_inertia(const ArmCoefficients& c, double q2)
{
    const double cq = std::cos(q2);
    Eigen::Matrix2d M;
    M << c.c11 + c.c12 * cq, c.c13 + c.c14 * cq, c.c22 + c.c23 * cq, c.c21;
    return M;
}

Eigen::Matrix2d arm_coriolis(const ArmCoefficients& c, double q2, const Vector& dq)
{
    const double s = std::sin(q2);
    Eigen::Matrix2d C;
    C << c.c15 * s * dq(1), c.c16 * s * dq(1), c.c24 * s * dq(0), 0.0;
    return C;
}

Eigen::Matrix2d arm_inertia_inverse(const ArmCoefficients& c, double q2)
{
    const Eigen::Matrix2d M = arm_inertia(c, q2);
    const double det = M.determinant();
    if (std::abs(det) < 1e-12 * M.cwiseAbs().maxCoeff() * M.cwiseAbs().maxCoeff())
        throw Error(ErrorKind::SingularInertia, "arm inertia matrix is singular");
    Eigen::Matrix2d inv;
    inv << M(1, 1), -M(0, 1), -M(1, 0), M(0, 0);
    return inv / det;
}

} // namespace

PlantModel two_link_arm(const ArmParams& params)
{
    if (!(params.m1 > 0 && params.m2 > 0 && params.l1 > 0 && params.l2 > 0))
        throw Error(ErrorKind::InvalidSpec, "arm masses and lengths must be positive");
    const ArmCoefficients c = params.coefficients();

    PlantModel p;
    p.n = 2;
    p.m = 2;
    p.inertia = [c](const Vector& q) -> Matrix { return arm_inertia(c, q(1)); };
    p.coriolis = [c](const Vector& q, const Vector& dq) -> Matrix {
        return arm_coriolis(c, q(1), dq);
    };
    p.G2 = [c](const Vector& q) -> Matrix { return arm_inertia_inverse(c, q(1)); };
    p.f2_potential = [c](const Vector& q) -> Vector {
        const Eigen::Vector2d g(0.0, c.c25 * std::cos(q(0) + q(1)));
        return arm_inertia_inverse(c, q(1)) * g;
    };
    p.f2_velocity = [c](const Vector& q, const Vector& dq) -> Vector {
        return arm_inertia_inverse(c, q(1)) * (arm_coriolis(c, q(1), dq) * dq);
    };
    p.f2 = [c](const Vector& q, const Vector& dq) -> Vector {
        const Eigen::Vector2d g(0.0, c.c25 * std::cos(q(0) + q(1)));
        return arm_inertia_inverse(c, q(1)) * (arm_coriolis(c, q(1), dq) * dq + g);
    };
    return p;
}

PlantModel double_integrator(int n)
{
    if (n < 1)
        throw Error(ErrorKind::InvalidSpec, "dimension must be positive");
    PlantModel p;
    p.n = n;
    p.m = n;
    p.f2 = [n](const Vector&, const Vector&) -> Vector { return Vector::Zero(n); };
    p.G2 = [n](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
    p.f2_potential = [n](const Vector&) -> Vector { return Vector::Zero(n); };
    p.f2_velocity = [n](const Vector&, const Vector&) -> Vector { return Vector::Zero(n); };
    p.inertia = [n](const Vector&) -> Matrix { return Matrix::Identity(n, n); };
    p.coriolis = [n](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(n, n); };
    return p;
}

Reference Reference::sinusoid(const Vector& amplitude, const Vector& frequency)
{
    if (amplitude.size() != frequency.size())
        throw Error(ErrorKind::InvalidSpec, "reference amplitude/frequency size mismatch");
    Reference ref;
    ref.r = [=](double t) -> Vector {
        return (amplitude.array() * (frequency.array() * t).sin()).matrix();
    };
    ref.dr = [=](double t) -> Vector {
        return (amplitude.array() * frequency.array() * (frequency.array() * t).cos()).matrix();
    };
    ref.ddr = [=](double t) -> Vector {
        return (-amplitude.array() * frequency.array().square() * (frequency.array() * t).sin())
            .matrix();
    };
    return ref;
}

Reference Reference::arm_default()
{
    return sinusoid(Eigen::Vector2d(std::numbers::pi, std::numbers::pi / 2),
                    Eigen::Vector2d(1.0, 4.0));
}

NominalLaw nominal_tracking(const PlantModel& plant, Reference reference)
{
    const int n = plant.n;
    if (plant.inertia && plant.coriolis) {
        return [plant, reference, n](double t, const Vector& x) -> Vector {
            const Vector q = x.head(n);
            const Vector dq = x.tail(n);
            const Vector e = q - reference.r(t);
            const Vector de = dq - reference.dr(t);
            return plant.inertia(q) * (reference.ddr(t) - de - e) - plant.coriolis(q, dq) * dq;
        };
    }
    return [plant, reference, n](double t, const Vector& x) -> Vector {
        const Vector q = x.head(n);
        const Vector dq = x.tail(n);
        const Vector e = q - reference.r(t);
        const Vector de = dq - reference.dr(t);
        return right_inverse(plant.G2(q)) * (reference.ddr(t) - de - e - plant.f2(q, dq));
    };
}

double ElConstants::k2(double velocity_cap) const
{
    if (k2_unit == 0)
        return 0;
    return k2_unit * std::pow(velocity_cap, velocity_degree - 1);
}

namespace {

// Points in x1 followed by a velocity direction (empty when unused).
struct Candidate {
    double value;
    Vector x1;
    Vector v;
};

template <typename Objective>
Candidate compass_refine(const SafetySpec& spec, Candidate start, Vector step_x, double step_v,
                         Objective&& f)
{
    const int n = static_cast<int>(start.x1.size());
    const int nv = static_cast<int>(start.v.size());
    Candidate cur = std::move(start);
    for (int round = 0; round < 200; ++round) {
        bool improved = false;
        for (int j = 0; j < n; ++j) {
            for (double s : {1.0, -1.0}) {
                Vector x = cur.x1;
                x(j) += s * step_x(j);
                if (!contains(spec, x))
                    continue;
                const double val = f(x, cur.v);
                if (val > cur.value) {
                    cur.value = val;
                    cur.x1 = std::move(x);
                    improved = true;
                }
            }
        }
        for (int j = 0; j < nv; ++j) {
            for (double s : {1.0, -1.0}) {
                Vector v = cur.v;
                v(j) += s * step_v;
                v.normalize();
                const double val = f(cur.x1, v);
                if (val > cur.value) {
                    cur.value = val;
                    cur.v = std::move(v);
                    improved = true;
                }
            }
        }
        if (!improved) {
            step_x *= 0.5;
            step_v *= 0.5;
            if (step_x.maxCoeff() < 1e-12 && (nv == 0 || step_v < 1e-12))
                break;
        }
    }
    return cur;
}

template <typename Objective>
double grid_max(const SafetySpec& spec, const std::vector<Vector>& points,
                const std::vector<Vector>& dirs, const Vector& spacing, Objective&& f)
{
    constexpr std::size_t kKeep = 5;
    std::vector<Candidate> best;
    auto offer = [&](Candidate c) {
        if (best.size() < kKeep) {
            best.push_back(std::move(c));
        } else {
            auto worst = std::min_element(best.begin(), best.end(),
                                          [](const auto& a, const auto& b) { return a.value < b.value; });
            if (c.value > worst->value)
                *worst = std::move(c);
        }
    };
    for (const auto& x : points) {
        if (dirs.empty()) {
            offer({f(x, Vector()), x, Vector()});
            continue;
        }
        for (const auto& v : dirs)
            offer({f(x, v), x, v});
    }
    double out = 0;
    for (auto& c : best) {
        const double step_v = dirs.empty() ? 0.0 : 0.2;
        out = std::max(out, compass_refine(spec, c, spacing, step_v, f).value);
    }
    return out;
}

} // namespace

ElConstants estimate_constants(const PlantModel& plant, const SafetySpec& spec, int resolution)
{
    if (!plant.has_split())
        throw Error(ErrorKind::NoSplit, "plant does not provide the potential/velocity split");
    if (resolution < 2)
        throw Error(ErrorKind::InvalidSpec, "grid resolution must be at least 2");
    const int n = spec.dim();
    const auto [lo, hi] = bounding_box(spec);
    const Vector spacing = (hi - lo) / static_cast<double>(resolution - 1);

    std::vector<Vector> points;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (;;) {
        Vector x(n);
        for (int j = 0; j < n; ++j)
            x(j) = lo(j) + spacing(j) * idx[static_cast<std::size_t>(j)];
        if (contains(spec, x))
            points.push_back(x);
        int j = 0;
        while (j < n && ++idx[static_cast<std::size_t>(j)] == resolution)
            idx[static_cast<std::size_t>(j++)] = 0;
        if (j == n)
            break;
    }

    std::vector<Vector> dirs;
    if (n == 1) {
        dirs = {Vector::Constant(1, 1.0), Vector::Constant(1, -1.0)};
    } else if (n == 2) {
        constexpr int kDirs = 32;
        for (int k = 0; k < kDirs; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / kDirs;
            dirs.push_back(Eigen::Vector2d(std::cos(phi), std::sin(phi)));
        }
    } else {
        for (int j = 0; j < n; ++j) {
            dirs.push_back(Vector::Unit(n, j));
            dirs.push_back(-Vector::Unit(n, j));
        }
        Rng rng(7);
        for (int k = 0; k < 64; ++k) {
            Vector v(n);
            for (int j = 0; j < n; ++j)
                v(j) = rng.normal();
            dirs.push_back(v.normalized());
        }
    }

    ElConstants out;
    out.resolution = resolution;
    out.k1 = grid_max(spec, points, {}, spacing, [&](const Vector& x, const Vector&) {
        return plant.f2_potential(x).norm();
    });
    out.kG = grid_max(spec, points, {}, spacing, [&](const Vector& x, const Vector&) {
        const Matrix Gp = right_inverse(plant.G2(x));
        return Eigen::JacobiSVD<Matrix>(Gp).singularValues()(0);
    });
    auto vel = [&](const Vector& x, const Vector& v) { return plant.f2_velocity(x, v).norm(); };
    out.k2_unit = grid_max(spec, points, dirs, spacing, vel);

    // Homogeneity degree of the velocity forcing in x2.
    out.velocity_degree = 1;
    if (out.k2_unit > 0) {
        double degree = -1;
        for (std::size_t k = 0; k < points.size(); k += std::max<std::size_t>(1, points.size() / 50)) {
            for (const auto& v : dirs) {
                const double f1 = vel(points[k], v);
                if (f1 < 1e-9 * out.k2_unit)
                    continue;
                const double d = std::log2(vel(points[k], 2.0 * v) / f1);
                if (degree < 0)
                    degree = d;
                else if (std::abs(d - degree) > 1e-6)
                    throw Error(ErrorKind::InvalidSpec,
                                "velocity forcing is not homogeneous in x2");
            }
        }
        const double rounded = std::round(degree);
        if (rounded < 1 || std::abs(rounded - degree) > 1e-6)
            throw Error(ErrorKind::InvalidSpec, "velocity forcing must be homogeneous of degree >= 1");
        out.velocity_degree = static_cast<int>(rounded);
    }
    return out;
}

GammaChoice select_gamma(const ElConstants& k, double d, const SafetySpec& spec,
                         const GeometryCert& cert)
{
    const double slack = d - k.kG * k.k1;
    if (!(slack > 0))
        throw Error(ErrorKind::InsufficientActuation,
                    "input bound d must exceed kG * k1 = " + std::to_string(k.kG * k.k1));

    const ExtendedCbf unit(spec, cert, 1.0, cert.delta / 2.0);
    const double c = velocity_bound(unit).c;
    const double budget = 0.9 * 0.5 * slack;
    auto lhs = [&](double gamma) { return gamma * (k.k2(gamma * c) + gamma) * k.kG * c; };

    double lo = 0.0;
    double hi = 1.0;
    while (lhs(hi) <= budget) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12)
            throw Error(ErrorKind::InternalConsistency, "gamma selection diverged");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (lhs(mid) <= budget ? lo : hi) = mid;
    }
    GammaChoice out;
    out.gamma = lo;
    out.epsilon = lo * cert.delta / 2.0;
    out.c = c;
    return out;
}

SafetySpec arm_hexagon_spec()
{
    constexpr double pi = std::numbers::pi;
    std::vector<HalfSpace> hs = {
        {Eigen::Vector2d(1.0, 0.0), pi / 2},   // q1 >= -pi/2
        {Eigen::Vector2d(-1.0, 0.0), pi / 2},  // q1 <= pi/2
        {Eigen::Vector2d(1.0, -1.0), pi},      // q2 - q1 <= pi
        {Eigen::Vector2d(-1.0, -1.0), pi},     // q1 + q2 <= pi
        {Eigen::Vector2d(-1.0, 1.0), pi},      // q2 - q1 >= -pi
        {Eigen::Vector2d(1.0, 1.0), pi},       // q1 + q2 >= -pi
    };
    return SafetySpec(std::move(hs), {{0, 1, 2, 3, 4, 5}});
}

} // namespace polycbf
