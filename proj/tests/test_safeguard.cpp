#include <doctest.h>

#include <random>

#include "polycbf/safeguard.hpp"

using namespace polycbf;

namespace {

SafetySpec slab()
{
    return SafetySpec({{Vector::Constant(1, 1.0), 1.0}, {Vector::Constant(1, -1.0), 1.0}},
                      {{0, 1}});
}

ExtendedCbf hexagon_cbf(double gamma = 10, double epsilon = 0.1)
{
    const SafetySpec s = arm_hexagon_spec();
    return ExtendedCbf(s, compute_cert(s), gamma, epsilon);
}

} // namespace

TEST_CASE("interior state with zero nominal input")
{
    const ExtendedCbf cbf = hexagon_cbf();
    const auto r = safeguard(cbf, two_link_arm({}), QpWeights{}, InputSet::unbounded(),
                             Vector::Zero(4), Vector::Zero(2));
    CHECK(r.u_star.norm() <= 1e-12);
    CHECK(r.alpha_star == doctest::Approx(40.0));
    CHECK(r.M_star == doctest::Approx(1.0));
    CHECK(r.min_margin() > 0);
    CHECK(r.margins.size() == 12u);
}

TEST_CASE("single active row on the slab is a projection")
{
    const SafetySpec s = slab();
    const ExtendedCbf cbf(s, compute_cert(s), 1.0, 0.5);
    const Eigen::Vector2d x(0.0, 0.5); // B_4 = -x2 + (1 - x1) - 0.5 = 0
    CHECK(std::abs(cbf.eval_all(x)(3)) <= 1e-15);
    // Row 4 reads -0.5 - u >= 0, so u* = min(u_nom, -0.5).
    for (double un : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
        const auto r = safeguard(cbf, double_integrator(1), QpWeights{}, InputSet::unbounded(), x,
                                 Vector::Constant(1, un));
        CHECK(r.u_star(0) == doctest::Approx(std::min(un, -0.5)).epsilon(1e-12));
        CHECK(r.alpha_star == doctest::Approx(40.0));
        CHECK(r.min_margin() >= -1e-8);
    }
    // An input box that excludes u <= -0.5 leaves no solution.
    try {
        safeguard(cbf, double_integrator(1), QpWeights{}, InputSet::box(Vector::Constant(1, 0.1)),
                  x, Vector::Zero(1));
        FAIL("expected Infeasible");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Infeasible);
    }
}

TEST_CASE("arm at rest at the origin passes the nominal command")
{
    const ExtendedCbf cbf = hexagon_cbf();
    const PlantModel arm = two_link_arm({});
    const NominalLaw law = nominal_tracking(arm, Reference::arm_default());
    const Vector x = Vector::Zero(4);
    const Vector un = law(0.0, x);
    const auto r = safeguard(cbf, arm, QpWeights{}, InputSet::unbounded(), x, un);
    CHECK((r.u_star - un).norm() <= 1e-8);
    CHECK(r.min_margin() > 0);
}

TEST_CASE("rows hold at the optimizer and the filter is idempotent on safe commands")
{
    const ExtendedCbf cbf = hexagon_cbf(2.0, 0.5);
    const PlantModel arm = two_link_arm({});
    const QpWeights w;
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> U(-1, 1);
    int filtered = 0, passed = 0;
    for (int k = 0; k < 400; ++k) {
        Vector x(4);
        x << 1.6 * U(gen), 3.2 * U(gen), 6 * U(gen), 6 * U(gen);
        // Outside C^s a position row with B_i < 0 can demand alpha < c_alpha.
        if (eval_B(cbf, x).value < 0)
            continue;
        const Vector un = Eigen::Vector2d(40 * U(gen), 40 * U(gen));
        const auto r = safeguard(cbf, arm, w, InputSet::unbounded(), x, un);
        CHECK(r.alpha_star >= w.c_alpha - 1e-12);
        CHECK(r.M_star >= w.c_M - 1e-12);
        const auto rows = safeguard_margins(cbf, arm, x, r.u_star, r.alpha_star, r.M_star);
        double worst = 1e300;
        for (const auto& m : rows)
            worst = std::min(worst, m.margin);
        CHECK(worst >= -1e-8);

        double nominal_worst = 1e300;
        for (const auto& m : safeguard_margins(cbf, arm, x, un, w.c_alpha, w.c_M))
            nominal_worst = std::min(nominal_worst, m.margin);
        if (nominal_worst >= 0) {
            CHECK((r.u_star - un).norm() <= 1e-8);
            CHECK(r.alpha_star == doctest::Approx(w.c_alpha));
            ++passed;
        } else {
            ++filtered;
        }
    }
    CHECK(passed > 20);
    CHECK(filtered > 5);
}

TEST_CASE("neighborhood and weight checks")
{
    const ExtendedCbf cbf = hexagon_cbf();
    Vector x = Vector::Zero(4);
    x(0) = 2.0; // h_1 = pi/2 - 2 < -0.1
    try {
        safeguard(cbf, two_link_arm({}), QpWeights{}, InputSet::unbounded(), x, std::nullopt);
        FAIL("expected OutsideNeighborhood");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::OutsideNeighborhood);
    }
    QpWeights bad;
    bad.c_alpha = 0;
    CHECK_THROWS_AS(safeguard(cbf, two_link_arm({}), bad, InputSet::unbounded(), Vector::Zero(4),
                              std::nullopt),
                    Error);
    QpWeights indefinite;
    indefinite.Q = [](const Vector&) -> Matrix { return -Matrix::Identity(2, 2); };
    try {
        safeguard(cbf, two_link_arm({}), indefinite, InputSet::unbounded(), Vector::Zero(4),
                  std::nullopt);
        FAIL("expected NotPositiveDefinite");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    }
}

TEST_CASE("linear cost term without a nominal input")
{
    const ExtendedCbf cbf = hexagon_cbf();
    QpWeights w;
    w.q = [](const Vector&) -> Vector { return Eigen::Vector2d(-2, 4); };
    const auto r = safeguard(cbf, two_link_arm({}), w, InputSet::unbounded(), Vector::Zero(4),
                             std::nullopt);
    // u^T u + q^T u is minimized at -q / 2 when no row binds.
    CHECK(r.u_star(0) == doctest::Approx(1.0));
    CHECK(r.u_star(1) == doctest::Approx(-2.0));
}

TEST_CASE("continuity probe")
{
    const ExtendedCbf cbf = hexagon_cbf();
    const PlantModel arm = two_link_arm({});
    const QpWeights w;
    const auto nominal = [](const Vector& x) -> Vector {
        return Eigen::Vector2d(std::sin(x(0)) + x(2), 2 * x(1) - x(3));
    };

    std::vector<Vector> constant(5, Vector::Zero(4));
    CHECK(continuity_probe(cbf, arm, w, InputSet::unbounded(), constant, nominal) == 0.0);

    // Interior segment: the filter is inactive so the ratio is that of u_nom.
    std::vector<Vector> line;
    double fd = 0;
    for (int k = 0; k <= 50; ++k) {
        Vector x(4);
        x << -0.5 + 0.02 * k, 0.1, 0.2, -0.1;
        line.push_back(x);
        if (k)
            fd = std::max(fd, (nominal(x) - nominal(line[k - 1])).norm() / (x - line[k - 1]).norm());
    }
    CHECK(continuity_probe(cbf, arm, w, InputSet::unbounded(), line, nominal) ==
          doctest::Approx(fd).epsilon(1e-9));

    // Segment that drives into the wall with a large velocity: the filter
    // switches on partway. The ratio stays finite and settles under refinement.
    const auto path = [](int n) {
        std::vector<Vector> p;
        for (int k = 0; k <= n; ++k) {
            Vector x(4);
            x << 1.0 + 0.3 * k / n, 0.0, 2.0, 0.0;
            p.push_back(x);
        }
        return p;
    };
    const auto push = [](const Vector&) -> Vector { return Eigen::Vector2d(50, 0); };
    const double r1 = continuity_probe(cbf, arm, w, InputSet::unbounded(), path(200), push);
    const double r2 = continuity_probe(cbf, arm, w, InputSet::unbounded(), path(400), push);
    CHECK(std::isfinite(r1));
    CHECK(r1 > 0);
    CHECK(std::abs(r2 - r1) <= 0.05 * r1);
}
