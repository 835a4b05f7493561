#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "polycbf/sim.hpp"

using namespace polycbf;
using std::numbers::pi;

namespace {

Scenario arm_scenario(double t_final)
{
    Scenario s;
    s.spec = arm_hexagon_spec();
    s.t_final = t_final;
    return s;
}

SafetySpec slab()
{
    return SafetySpec({{Vector::Constant(1, 1.0), 1.0}, {Vector::Constant(1, -1.0), 1.0}},
                      {{0, 1}});
}

double free_swing_energy(const PlantModel& arm, const Vector& x)
{
    const Vector dq = x.tail(2);
    return 0.5 * dq.dot(arm.inertia(x.head(2)) * dq);
}

} // namespace

TEST_CASE("RK4 on the double integrator")
{
    const PlantModel di = double_integrator(1);
    const Vector a = rk4_step(di, Vector::Zero(1), Eigen::Vector2d(0, 1), 0.1);
    CHECK(a(0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(a(1) == 1.0);
    const Vector b = rk4_step(di, Vector::Ones(1), Vector::Zero(2), 0.1);
    CHECK(b(0) == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(b(1) == doctest::Approx(0.1).epsilon(1e-15));

    // The sampled-controller overload evaluates once at (t, x).
    int calls = 0;
    const Controller c = [&](double, const Vector&) {
        ++calls;
        return Vector::Ones(1);
    };
    CHECK(rk4_step(di, c, 0.0, Vector::Zero(2), 0.1) == b);
    CHECK(calls == 1);
    CHECK(rk4_step_feedback(di, c, 0.0, Vector::Zero(2), 0.1) == b);
    CHECK(calls == 5);

    const Controller failing = [](double, const Vector&) -> Vector {
        throw Error(ErrorKind::Infeasible, "boom");
    };
    try {
        rk4_step(di, failing, 1.5, Vector::Zero(2), 0.1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Infeasible);
        CHECK(std::string(e.what()).find("t = 1.5") != std::string::npos);
    }
}

TEST_CASE("fourth-order convergence and energy conservation of the free arm")
{
    const PlantModel arm = two_link_arm({});
    Vector x0(4);
    x0 << 0.3, -0.5, 1.0, 2.0;
    const auto run = [&](double dt, double T) {
        Vector x = x0;
        const int steps = static_cast<int>(std::llround(T / dt));
        for (int k = 0; k < steps; ++k)
            x = rk4_step(arm, Vector::Zero(2), x, dt);
        return x;
    };
    // dt = 0.005 is inside the asymptotic range; at 0.02 the ratio is still ~13.
    const double dt = 0.005;
    const Vector ref = run(dt / 16, 1.0);
    const double e1 = (run(dt, 1.0) - ref).norm();
    const double e2 = (run(dt / 2, 1.0) - ref).norm();
    CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.125));

    Vector x = x0;
    const double E0 = free_swing_energy(arm, x);
    double drift = 0;
    for (int k = 0; k < 10000; ++k) {
        x = rk4_step(arm, Vector::Zero(2), x, 1e-3);
        drift = std::max(drift, std::abs(free_swing_energy(arm, x) - E0));
    }
    CHECK(drift < 1e-6);
}

TEST_CASE("scenario validation and trivial runs")
{
    Scenario s = arm_scenario(0.0);
    const auto log = simulate(s);
    REQUIRE(log.rows.size() == 1u);
    CHECK(log.rows[0].t == 0.0);
    CHECK(log.rows[0].x == Vector::Zero(4));

    s.dt = 0;
    CHECK_THROWS_AS(simulate(s), Error);
    s = arm_scenario(0.5);
    s.dt = 1.0;
    CHECK_THROWS_AS(simulate(s), Error);
    s = arm_scenario(1.0);
    s.x0 = Vector::Zero(3);
    CHECK_THROWS_AS(simulate(s), Error);
    s.x0 = Vector::Constant(4, std::nan(""));
    try {
        simulate(s);
        FAIL("expected NonFinite");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::NonFinite);
    }
}

TEST_CASE("log layout, CSV and determinism")
{
    Scenario s = arm_scenario(0.05);
    s.dt = 0.01;
    const auto a = simulate(s);
    REQUIRE(a.rows.size() == 6u);
    for (std::size_t k = 0; k < a.rows.size(); ++k)
        CHECK(a.rows[k].t == k * 0.01);
    CHECK(a.csv_header() == "t,x1_1,x1_2,x2_1,x2_2,u_1,u_2,B,h,alpha,M,status,solve_us");
    std::ostringstream os1, os2;
    a.write_csv(os1);
    simulate(s).write_csv(os2);
    CHECK(os1.str() == os2.str());
    CHECK(os1.str().find("optimal") != std::string::npos);
    CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("safeguarded arm stays in the extended set, nominal arm leaves the hexagon")
{
    Scenario s = arm_scenario(4.0);
    const SimSetup setup = prepare(s);
    const auto safe = simulate(s, setup);
    const auto rep = audit_invariance(safe, setup.cbf);
    CHECK(rep.min_B >= -1e-6);
    CHECK(rep.invariant());
    CHECK(rep.velocity_ok);
    CHECK(rep.max_velocity <= velocity_bound(setup.cbf).norm_bound + 1e-6);
    for (const auto& r : safe.rows) {
        CHECK(r.alpha >= 40.0 - 1e-9);
        CHECK(r.M >= 1.0 - 1e-9);
    }
    // The log's B column agrees with the independent audit.
    double min_col = 1e300;
    for (const auto& r : safe.rows)
        min_col = std::min(min_col, r.B);
    CHECK(min_col == doctest::Approx(rep.min_B).epsilon(1e-12));

    s.mode = ControlMode::Nominal;
    const auto nominal = simulate(s, setup);
    const auto nrep = audit_invariance(nominal, setup.cbf);
    CHECK(nrep.min_h < 0);
    REQUIRE(nrep.first_exit);
    REQUIRE(nrep.first_violation);
    CHECK(*nrep.first_violation <= *nrep.first_exit);

    TrajectoryLog empty;
    const auto erep = audit_invariance(empty, setup.cbf);
    CHECK(erep.empty);
    CHECK(erep.invariant());
}

TEST_CASE("step-size robustness of the safeguarded minimum")
{
    Scenario s = arm_scenario(10.0);
    const double b1 = audit_invariance(simulate(s), prepare(s).cbf).min_B;
    s.dt = 5e-4;
    const double b2 = audit_invariance(simulate(s), prepare(s).cbf).min_B;
    CHECK(std::abs(b1 - b2) < 1e-3);
}

TEST_CASE("sample-and-hold integration carries an O(dt) barrier error")
{
    Scenario s = arm_scenario(10.0);
    s.hold = ControlHold::ZeroOrder;
    const double b1 = audit_invariance(simulate(s), prepare(s).cbf).min_B;
    s.dt = 5e-4;
    const double b2 = audit_invariance(simulate(s), prepare(s).cbf).min_B;
    CHECK(b1 < 0);
    CHECK(b2 / b1 == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("runtime infeasibility and failed pre-verification")
{
    Scenario s;
    s.spec = slab();
    s.plant.type = PlantConfig::Type::DoubleIntegrator;
    s.plant.n = 1;
    s.gamma = 1.0;
    s.epsilon = 0.5;
    s.input_set = InputSet::box(Vector::Constant(1, 0.01));
    s.x0 = Eigen::Vector2d(0.0, 0.4);
    s.t_final = 2.0;
    s.dt = 1e-3;
    try {
        simulate(s);
        FAIL("expected ConditionViolated");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ConditionViolated);
    }
    s.skip_verification = true;
    try {
        simulate(s);
        FAIL("expected QpInfeasibleAt");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::QpInfeasibleAt);
        CHECK(std::string(e.what()).find("t = ") != std::string::npos);
    }
}

TEST_CASE("gamma sweep")
{
    Scenario s = arm_scenario(10.0);
    const auto rows = sweep_gamma(s, {0.1, 1.0});
    REQUIRE(rows.size() == 2u);
    CHECK(rows[0].epsilon == doctest::Approx(0.1 * pi / 4));
    CHECK(rows[0].max_input < rows[1].max_input);
    CHECK(rows[0].max_velocity < rows[1].max_velocity);
    CHECK(rows[0].min_B >= -1e-6);
    CHECK(rows[1].min_B >= -1e-6);
    CHECK_THROWS_AS(sweep_gamma(s, {}), Error);
    CHECK_THROWS_AS(sweep_gamma(s, {-1.0}), Error);
    std::ostringstream os;
    write_sweep_csv(os, rows);
    CHECK(os.str().rfind("gamma,epsilon,max_input,max_velocity,min_B\n", 0) == 0);
}
