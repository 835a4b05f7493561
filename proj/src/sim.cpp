#include "polycbf/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace polycbf {

namespace {

std::string describe_state(double t, const Vector& x)
{
    std::string s = "t = " + format_number(t) + ", x = (";
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i)
            s += ", ";
        s += format_number(x(i));
    }
    return s + ")";
}

Vector evaluate(const Controller& controller, double t, const Vector& x)
{
    try {
        return controller(t, x);
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(e.what()) + " at " + describe_state(t, x));
    }
}

} // namespace

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Vector rk4_step(const PlantModel& plant, const Vector& u, const Vector& x, double dt)
{
    const Vector k1 = plant.state_derivative(x, u);
    const Vector k2 = plant.state_derivative(x + 0.5 * dt * k1, u);
    const Vector k3 = plant.state_derivative(x + 0.5 * dt * k2, u);
    const Vector k4 = plant.state_derivative(x + dt * k3, u);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector rk4_step(const PlantModel& plant, const Controller& controller, double t,
                const Vector& x, double dt)
{
    return rk4_step(plant, evaluate(controller, t, x), x, dt);
}

Vector rk4_step_feedback(const PlantModel& plant, const Controller& controller, double t,
                         const Vector& x, double dt)
{
    const auto rhs = [&](double ts, const Vector& xs) {
        return plant.state_derivative(xs, evaluate(controller, ts, xs));
    };
    const Vector k1 = rhs(t, x);
    const Vector k2 = rhs(t + 0.5 * dt, x + 0.5 * dt * k1);
    const Vector k3 = rhs(t + 0.5 * dt, x + 0.5 * dt * k2);
    const Vector k4 = rhs(t + dt, x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

PlantModel PlantConfig::build() const
{
    if (type == Type::TwoLinkArm)
        return two_link_arm(arm);
    return double_integrator(n);
}

Reference ReferenceConfig::build(int n) const
{
    if (amplitude.size() == 0 && frequency.size() == 0) {
        if (n == 2)
            return Reference::arm_default();
        return Reference::sinusoid(Vector::Zero(n), Vector::Zero(n));
    }
    if (amplitude.size() != n || frequency.size() != n)
        throw Error(ErrorKind::InvalidSpec, "reference amplitude/frequency must have size n");
    return Reference::sinusoid(amplitude, frequency);
}

void Scenario::validate() const
{
    if (spec.empty())
        throw Error(ErrorKind::InvalidSpec, "scenario has no safety specification");
    if (spec.dim() != plant.dim())
        throw Error(ErrorKind::InvalidSpec, "plant and specification dimensions differ");
    if (!(dt > 0) || !std::isfinite(dt))
        throw Error(ErrorKind::InvalidSpec, "dt must be positive");
    if (!(t_final >= 0) || !std::isfinite(t_final))
        throw Error(ErrorKind::InvalidSpec, "t_final must be non-negative");
    if (t_final > 0 && t_final < dt)
        throw Error(ErrorKind::InvalidSpec, "t_final must be zero or at least dt");
    if (x0.size() != 0 && x0.size() != 2 * spec.dim())
        throw Error(ErrorKind::InvalidSpec, "initial state must have dimension 2n");
    if (verification_samples < 0)
        throw Error(ErrorKind::InvalidSpec, "verification_samples must be non-negative");
    weights.validate();
}

Vector Scenario::initial_state() const
{
    return x0.size() ? x0 : Vector::Zero(2 * spec.dim());
}

int Scenario::steps() const
{
    return static_cast<int>(std::llround(t_final / dt));
}

SimSetup prepare(const Scenario& scenario)
{
    scenario.validate();
    PlantModel plant = scenario.plant.build();
    const GeometryCert cert = compute_cert(scenario.spec, scenario.witnesses);
    ExtendedCbf cbf(scenario.spec, cert, scenario.gamma, scenario.epsilon);
    NominalLaw nominal = nominal_tracking(plant, scenario.reference.build(plant.n));
    return SimSetup{std::move(plant), std::move(cbf), std::move(nominal)};
}

std::string TrajectoryLog::csv_header() const
{
    std::string h = "t";
    for (int i = 1; i <= n; ++i)
        h += ",x1_" + std::to_string(i);
    for (int i = 1; i <= n; ++i)
        h += ",x2_" + std::to_string(i);
    for (int i = 1; i <= m; ++i)
        h += ",u_" + std::to_string(i);
    return h + ",B,h,alpha,M,status,solve_us";
}

void TrajectoryLog::write_csv(std::ostream& os) const
{
    os << csv_header() << '\n';
    for (const auto& r : rows) {
        os << format_number(r.t);
        for (Eigen::Index i = 0; i < r.x.size(); ++i)
            os << ',' << format_number(r.x(i));
        for (Eigen::Index i = 0; i < r.u.size(); ++i)
            os << ',' << format_number(r.u(i));
        os << ',' << format_number(r.B) << ',' << format_number(r.h) << ','
           << format_number(r.alpha) << ',' << format_number(r.M) << ',' << r.status << ','
           << format_number(r.solve_us) << '\n';
    }
}

double TrajectoryLog::max_input_norm() const
{
    double v = 0;
    for (const auto& r : rows)
        v = std::max(v, r.u.norm());
    return v;
}

double TrajectoryLog::max_velocity_norm() const
{
    double v = 0;
    for (const auto& r : rows)
        v = std::max(v, r.x.tail(n).norm());
    return v;
}

TrajectoryLog simulate(const Scenario& scenario)
{
    return simulate(scenario, prepare(scenario));
}

TrajectoryLog simulate(const Scenario& scenario, const SimSetup& setup)
{
    const PlantModel& plant = setup.plant;
    const ExtendedCbf& cbf = setup.cbf;
    const int n = plant.n;
    const bool filtered = scenario.mode == ControlMode::Safeguarded;

    if (filtered && !scenario.skip_verification && scenario.verification_samples > 0) {
        const auto samples =
            sample_boundary(cbf, scenario.verification_samples, scenario.seed);
        const auto report = verify_safety_condition(cbf, plant, scenario.input_set, samples);
        if (!report.all_feasible())
            throw Error(ErrorKind::ConditionViolated,
                        std::to_string(report.infeasible_count()) +
                            " boundary samples fail the safety condition, worst margin " +
                            format_number(report.worst_margin()));
    }

    TrajectoryLog log;
    log.n = n;
    log.m = plant.m;
    const int steps = scenario.steps();
    log.rows.reserve(static_cast<std::size_t>(steps) + 1);

    struct Sample {
        Vector u;
        double alpha = 0;
        double M = 0;
        double solve_us = 0;
    };
    const auto control = [&](double t, const Vector& x, bool timed) {
        Sample out;
        const Vector u_nom = setup.nominal(t, x);
        if (!filtered) {
            out.u = u_nom;
        } else {
            const auto start = std::chrono::steady_clock::now();
            SafeguardResult res;
            try {
                res = safeguard(cbf, plant, scenario.weights, scenario.input_set, x, u_nom);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::Infeasible ||
                    e.kind() == ErrorKind::OutsideNeighborhood)
                    throw Error(ErrorKind::QpInfeasibleAt,
                                describe_state(t, x) + " (" + e.what() + ")");
                throw;
            }
            if (timed && scenario.record_timing)
                out.solve_us = std::chrono::duration<double, std::micro>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
            out.u = res.u_star;
            out.alpha = res.alpha_star;
            out.M = res.M_star;
        }
        if (!out.u.allFinite())
            throw Error(ErrorKind::NonFinite, "input is not finite at " + describe_state(t, x));
        return out;
    };

    Vector x = scenario.initial_state();
    for (int k = 0;; ++k) {
        const double t = k * scenario.dt;
        if (!x.allFinite())
            throw Error(ErrorKind::NonFinite, "state is not finite at " + describe_state(t, x));

        LogRow row;
        row.t = t;
        row.x = x;
        row.B = eval_B(cbf, x).value;
        row.h = eval_h(cbf.spec(), x.head(n));

        const auto sample = control(t, x, true);
        row.u = sample.u;
        row.alpha = sample.alpha;
        row.M = sample.M;
        row.status = filtered ? "optimal" : "nominal";
        row.solve_us = sample.solve_us;
        log.rows.push_back(std::move(row));
        if (k == steps)
            break;
        if (scenario.hold == ControlHold::ZeroOrder) {
            x = rk4_step(plant, log.rows.back().u, x, scenario.dt);
        } else {
            const Controller stage = [&](double ts, const Vector& xs) {
                return control(ts, xs, false).u;
            };
            x = rk4_step_feedback(plant, stage, t, x, scenario.dt);
        }
    }
    return log;
}

InvarianceReport audit_invariance(const TrajectoryLog& log, const ExtendedCbf& cbf,
                                  double tolerance)
{
    InvarianceReport rep;
    rep.tolerance = tolerance;
    rep.velocity_bound = velocity_bound(cbf).norm_bound;
    if (log.rows.empty())
        return rep;
    rep.empty = false;
    rep.min_B = std::numeric_limits<double>::infinity();
    rep.min_h = std::numeric_limits<double>::infinity();

    const int n = cbf.position_dim();
    const int r = cbf.base_count();
    const Matrix& A = cbf.spec().normals();
    const Vector& b = cbf.spec().offsets();
    for (const auto& row : log.rows) {
        const Vector x1 = row.x.head(n);
        const Vector x2 = row.x.tail(n);
        const Vector hp = A * x1 + b;
        const Vector hv = A * x2 + cbf.gamma() * hp - Vector::Constant(r, cbf.epsilon());
        double B = -std::numeric_limits<double>::infinity();
        double h = -std::numeric_limits<double>::infinity();
        for (const auto& term : cbf.spec().terms()) {
            double bmin = std::numeric_limits<double>::infinity();
            double hmin = std::numeric_limits<double>::infinity();
            for (int i : term) {
                bmin = std::min({bmin, hp(i), hv(i)});
                hmin = std::min(hmin, hp(i));
            }
            B = std::max(B, bmin);
            h = std::max(h, hmin);
        }
        rep.min_B = std::min(rep.min_B, B);
        rep.min_h = std::min(rep.min_h, h);
        if (B < -tolerance && !rep.first_violation)
            rep.first_violation = row.t;
        if (h < 0 && !rep.first_exit)
            rep.first_exit = row.t;
        rep.max_velocity = std::max(rep.max_velocity, x2.norm());
    }
    rep.velocity_ok = rep.max_velocity <= rep.velocity_bound + tolerance;
    return rep;
}

std::vector<SweepRow> sweep_gamma(const Scenario& scenario, const std::vector<double>& gammas,
                                  std::vector<TrajectoryLog>* logs)
{
    if (gammas.empty())
        throw Error(ErrorKind::InvalidSpec, "sweep needs at least one gamma");
    const GeometryCert cert = compute_cert(scenario.spec, scenario.witnesses);
    std::vector<SweepRow> out;
    for (double g : gammas) {
        if (!(g > 0))
            throw Error(ErrorKind::ParameterViolation, "sweep values must be positive");
        Scenario s = scenario;
        s.gamma = g;
        s.epsilon = g * cert.delta / 2;
        const auto setup = prepare(s);
        const auto log = simulate(s, setup);
        SweepRow row;
        row.gamma = g;
        row.epsilon = s.epsilon;
        row.max_input = log.max_input_norm();
        row.max_velocity = log.max_velocity_norm();
        row.min_B = audit_invariance(log, setup.cbf).min_B;
        out.push_back(row);
        if (logs)
            logs->push_back(log);
    }
    return out;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows)
{
    os << "gamma,epsilon,max_input,max_velocity,min_B\n";
    for (const auto& r : rows)
        os << format_number(r.gamma) << ',' << format_number(r.epsilon) << ','
           << format_number(r.max_input) << ',' << format_number(r.max_velocity) << ','
           << format_number(r.min_B) << '\n';
}

} // namespace polycbf
