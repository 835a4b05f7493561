#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "polycbf/cbf.hpp"
#include "polycbf/safeguard.hpp"

namespace polycbf {

using Controller = std::function<Vector(double t, const Vector& x)>;

/// One classical RK4 step of x' = (x2, f2 + G2 u) with u held constant.
Vector rk4_step(const PlantModel& plant, const Vector& u, const Vector& x, double dt);

/// RK4 with the controller re-evaluated at each stage (t_s, x_s).
/// Controller errors are rethrown with the time and state attached.
Vector rk4_step_feedback(const PlantModel& plant, const Controller& controller, double t,
                         const Vector& x, double dt);

/// Samples the controller once at (t, x) and holds it across the stages.
/// Controller errors are rethrown with the time and state attached.
Vector rk4_step(const PlantModel& plant, const Controller& controller, double t,
                const Vector& x, double dt);

struct PlantConfig {
    enum class Type { TwoLinkArm, DoubleIntegrator };
    Type type = Type::TwoLinkArm;
    ArmParams arm;
    int n = 2; // double integrator only

    int dim() const { return type == Type::TwoLinkArm ? 2 : n; }
    PlantModel build() const;
};

/// Sinusoidal reference amplitude_j sin(frequency_j t). Empty vectors select
/// the default: (pi sin t, pi/2 sin 4t) for n = 2, zero otherwise.
struct ReferenceConfig {
    Vector amplitude;
    Vector frequency;

    Reference build(int n) const;
};

enum class ControlMode { Nominal, Safeguarded };

/// How the input is integrated within a step: sampled once and held, or
/// re-evaluated at every RK4 stage.
enum class ControlHold { ZeroOrder, PerStage };

struct Scenario {
    SafetySpec spec;
    WitnessOverrides witnesses;
    double gamma = 10.0;
    double epsilon = 0.1;
    PlantConfig plant;
    ControlMode mode = ControlMode::Safeguarded;
    ReferenceConfig reference;
    QpWeights weights;
    InputSet input_set = InputSet::unbounded();
    Vector x0; // empty: origin at rest
    double t_final = 10.0;
    double dt = 1e-3;
    ControlHold hold = ControlHold::PerStage;
    std::uint64_t seed = 42;
    // Safeguarded runs first check the boundary condition on sampled states.
    bool skip_verification = false;
    int verification_samples = 200;
    // Wall-clock solve times make logs nondeterministic, so they are opt-in.
    bool record_timing = false;

    void validate() const;
    Vector initial_state() const;
    int steps() const;
};

/// Everything a run needs, built once from a scenario.
struct SimSetup {
    PlantModel plant;
    ExtendedCbf cbf;
    NominalLaw nominal;
};

SimSetup prepare(const Scenario& scenario);

struct LogRow {
    double t = 0;
    Vector x;
    Vector u;
    double B = 0;
    double h = 0;
    double alpha = 0;
    double M = 0;
    std::string status;
    double solve_us = 0;
};

struct TrajectoryLog {
    int n = 0;
    int m = 0;
    std::vector<LogRow> rows;

    std::string csv_header() const;
    void write_csv(std::ostream& os) const;
    double max_input_norm() const;
    double max_velocity_norm() const;
};

/// Fixed-step closed loop. Safeguarded mode filters the nominal law through
/// the safeguarding QP each step. Throws QpInfeasibleAt when the QP fails,
/// NonFinite on NaN/Inf states, ConditionViolated when pre-verification
/// finds an infeasible boundary sample.
TrajectoryLog simulate(const Scenario& scenario);
TrajectoryLog simulate(const Scenario& scenario, const SimSetup& setup);

struct InvarianceReport {
    bool empty = true;
    double min_B = 0;
    double min_h = 0;
    std::optional<double> first_violation; // first t with B < -tolerance
    std::optional<double> first_exit;      // first t with h < 0
    double max_velocity = 0;
    double velocity_bound = 0;
    bool velocity_ok = true;
    double tolerance = 1e-6;

    bool invariant() const { return !first_violation.has_value(); }
};

/// Recomputes B and h at each logged state from the barrier rows, and
/// compares the peak speed against the certified bound.
InvarianceReport audit_invariance(const TrajectoryLog& log, const ExtendedCbf& cbf,
                                  double tolerance = 1e-6);

struct SweepRow {
    double gamma = 0;
    double epsilon = 0;
    double max_input = 0;
    double max_velocity = 0;
    double min_B = 0;
};

/// Reruns the scenario for each gamma with epsilon = gamma delta / 2. The
/// per-run logs are appended to `logs` when given.
std::vector<SweepRow> sweep_gamma(const Scenario& scenario, const std::vector<double>& gammas,
                                  std::vector<TrajectoryLog>* logs = nullptr);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

/// %.17g rendering used by all CSV output.
std::string format_number(double v);

} // namespace polycbf
