#pragma once

#include <functional>

#include "polycbf/polytope.hpp"
#include "polycbf/types.hpp"

namespace polycbf {

/// Second-order control-affine plant: x1' = x2, x2' = f2(x1, x2) + G2(x1) u.
///
/// The optional split f2 = f2_potential(x1) + f2_velocity(x1, x2) separates
/// potential-field forcing from velocity-dependent forcing. `inertia` and
/// `coriolis` are only set for mechanical models that the computed-torque
/// nominal law can use directly.
struct PlantModel {
    int n = 0;
    int m = 0;
    std::function<Vector(const Vector& x1, const Vector& x2)> f2;
    std::function<Matrix(const Vector& x1)> G2;

    std::function<Vector(const Vector& x1)> f2_potential;
    std::function<Vector(const Vector& x1, const Vector& x2)> f2_velocity;

    // M(q) and C(q, q') in the form M q'' = C q' + (potential) + u.
    std::function<Matrix(const Vector& q)> inertia;
    std::function<Matrix(const Vector& q, const Vector& dq)> coriolis;

    bool has_split() const { return static_cast<bool>(f2_potential) && static_cast<bool>(f2_velocity); }

    /// Full state derivative (x2, f2 + G2 u) for state x = (x1, x2).
    Vector state_derivative(const Vector& x, const Vector& u) const;
};

/// Right inverse of G2 by complete orthogonal decomposition; throws
/// NotRightInvertible when ||G2 G2^+ - I|| exceeds `tol`.
Matrix right_inverse(const Matrix& G2, double tol = 1e-8);

/// Coefficients of the planar elbow arm model
///   [c11 + c12 cos q2, c13 + c14 cos q2; c22 + c23 cos q2, c21] q''
///     = [c15 sin q2 dq2, c16 sin q2 dq2; c24 sin q2 dq1, 0] dq
///       + [u1; c25 cos(q1 + q2) + u2].
struct ArmCoefficients {
    double c11 = 0, c12 = 0, c13 = 0, c14 = 0, c15 = 0, c16 = 0;
    double c21 = 0, c22 = 0, c23 = 0, c24 = 0, c25 = 0;
};

/// Point masses at the link tips. Gravity, when enabled, acts through c25 only.
struct ArmParams {
    double m1 = 1.0;
    double m2 = 1.0;
    double l1 = 1.0;
    double l2 = 1.0;
    bool gravity = false;
    double g = 9.81;

    ArmCoefficients coefficients() const;
};

PlantModel two_link_arm(const ArmParams& params);

/// x1'' = u with n = m.
PlantModel double_integrator(int n);

/// Time-parameterized reference with first and second derivatives.
struct Reference {
    std::function<Vector(double)> r;
    std::function<Vector(double)> dr;
    std::function<Vector(double)> ddr;

    /// r_j(t) = amplitude_j sin(frequency_j t).
    static Reference sinusoid(const Vector& amplitude, const Vector& frequency);
    /// (pi sin t, pi/2 sin 4t), the arm tracking reference.
    static Reference arm_default();
};

using NominalLaw = std::function<Vector(double t, const Vector& x)>;

/// Computed-torque tracking with unit gains: u = M (r'' - e' - e) - C q',
/// e = q - r. Without inertia/coriolis information the law falls back to
/// u = G2^+ (r'' - e' - e - f2). Potential forcing is not compensated.
NominalLaw nominal_tracking(const PlantModel& plant, Reference reference);

/// Euler-Lagrange constants over C, estimated by grid search plus local
/// refinement. The velocity gain is stored per unit speed together with the
/// homogeneity degree of f2_velocity in x2, so that on the ball ||x2|| <= v
/// one has ||f2_velocity|| <= k2(v) ||x2||.
struct ElConstants {
    double k1 = 0;
    double kG = 0;
    double k2_unit = 0;
    int velocity_degree = 1;
    int resolution = 0;

    double k2(double velocity_cap) const;
};

ElConstants estimate_constants(const PlantModel& plant, const SafetySpec& spec,
                               int resolution = 200);

struct GammaChoice {
    double gamma = 0;
    double epsilon = 0;
    double c = 0; // velocity constant: ||x2|| <= gamma * c on C^s
};

class ExtendedCbf;

/// Largest gamma (by bisection, 10% slack) with
///   gamma (k2(gamma c) + gamma) kG c <= 0.9 * (d - k1 kG) / 2,
/// and epsilon = gamma delta / 2. Throws InsufficientActuation if d <= kG k1.
GammaChoice select_gamma(const ElConstants& constants, double d, const SafetySpec& spec,
                         const GeometryCert& cert);

/// The six-sided joint-space region of the planar arm wall example.
SafetySpec arm_hexagon_spec();

} // namespace polycbf
