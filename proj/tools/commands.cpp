#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "polycbf/io.hpp"
#include "polycbf/sim.hpp"
#include "polycbf/svg.hpp"

namespace polycbf::cli {

namespace fs = std::filesystem;

namespace {

int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::ParameterViolation:
    case ErrorKind::InsufficientActuation:
        return kParameter;
    case ErrorKind::UnboundedPositions:
    case ErrorKind::EmptySet:
    case ErrorKind::AssumptionViolated:
    case ErrorKind::TooManyHalfspaces:
    case ErrorKind::NotInC:
        return kGeometry;
    case ErrorKind::ConditionViolated:
    case ErrorKind::NotRightInvertible:
        return kCondition;
    case ErrorKind::QpInfeasibleAt:
    case ErrorKind::Infeasible:
    case ErrorKind::OutsideNeighborhood:
    case ErrorKind::NonFinite:
        return kRuntimeInfeasible;
    case ErrorKind::InvalidSpec:
    case ErrorKind::Io:
        return kUsage;
    default:
        return kInternal;
    }
}

std::string out_path(const GlobalOptions& g, const std::string& name)
{
    fs::create_directories(g.out);
    return (fs::path(g.out) / name).string();
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream f(path);
    if (!f)
        throw Error(ErrorKind::Io, "cannot write " + path);
    return f;
}

void print_cert(const ExtendedCbf& cbf)
{
    const auto& cert = cbf.cert();
    std::printf("delta = %.17g\n", cert.delta);
    std::printf("positions bounded: %s\n", cert.proj_bounded ? "yes" : "no");
    for (std::size_t l = 0; l < cert.term_bounded.size(); ++l)
        std::printf("term %zu bounded: %s\n", l + 1, cert.term_bounded[l] ? "yes" : "no");
    std::printf("index sets meeting C: %zu\n", cert.s_cap.size());
    std::printf("gamma = %.17g, epsilon = %.17g\n", cbf.gamma(), cbf.epsilon());
    const auto vb = velocity_bound(cbf);
    std::printf("velocity bound: |x2_j| <= %.17g, ||x2|| <= %.17g (c = %.17g)\n",
                vb.per_component_bound, vb.norm_bound, vb.c);
}

void print_audit(const char* label, const InvarianceReport& rep)
{
    std::printf("%s: min B = %.17g, min h = %.17g, max ||x2|| = %.17g (bound %.17g)\n", label,
                rep.min_B, rep.min_h, rep.max_velocity, rep.velocity_bound);
    if (rep.first_violation)
        std::printf("%s: B below -%g first at t = %.17g\n", label, rep.tolerance,
                    *rep.first_violation);
    if (rep.first_exit)
        std::printf("%s: left the safe set first at t = %.17g\n", label, *rep.first_exit);
}

PlantConfig default_plant(int n)
{
    PlantConfig p;
    if (n != 2) {
        p.type = PlantConfig::Type::DoubleIntegrator;
        p.n = n;
    }
    return p;
}

} // namespace

int guarded(const std::function<int()>& body)
{
    try {
        return body();
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kInternal;
    }
}

int cmd_construct(const GlobalOptions& g, const ConstructOptions& o)
{
    SpecDocument doc = load_spec(o.specfile);
    const GeometryCert cert = compute_cert(doc.spec, doc.witnesses);

    double gamma = 0, epsilon = 0;
    if (o.automatic) {
        if (!o.d)
            throw Error(ErrorKind::InvalidSpec, "--auto needs --d");
        const PlantConfig pc = o.scenario.empty() ? default_plant(doc.spec.dim())
                                                  : load_scenario(o.scenario).plant;
        const PlantModel plant = pc.build();
        const ElConstants k = estimate_constants(plant, doc.spec, o.resolution);
        std::printf("k1 = %.17g, kG = %.17g, k2 per unit speed = %.17g (degree %d)\n", k.k1,
                    k.kG, k.k2_unit, k.velocity_degree);
        const GammaChoice choice = select_gamma(k, *o.d, doc.spec, cert);
        gamma = choice.gamma;
        epsilon = choice.epsilon;
        std::printf("selected gamma = %.17g, epsilon = %.17g, k2 on ||x2|| <= %.17g: %.17g\n",
                    gamma, epsilon, gamma * choice.c, k.k2(gamma * choice.c));
    } else {
        if (!o.gamma || !o.epsilon)
            throw Error(ErrorKind::InvalidSpec, "give --gamma and --epsilon, or --auto --d");
        gamma = *o.gamma;
        epsilon = *o.epsilon;
    }

    const ExtendedCbf cbf(doc.spec, cert, gamma, epsilon);
    if (!check_compactness(cbf))
        throw Error(ErrorKind::UnboundedPositions, "extended safe set is not compact");
    print_cert(cbf);

    const std::string path = out_path(g, fs::path(o.specfile).stem().string() + ".cbf.json");
    write_json_file(path, cbf_to_json({doc, gamma, epsilon}));
    std::printf("wrote %s\n", path.c_str());
    return kOk;
}

int cmd_verify(const GlobalOptions& g, const VerifyOptions& o)
{
    if (o.samples < 0)
        throw Error(ErrorKind::InvalidSpec, "--samples must be non-negative");
    const CbfDocument doc = load_cbf(o.cbffile);
    const Scenario scenario = load_scenario(o.scenario);
    const std::uint64_t seed = g.seed.value_or(scenario.seed);
    const GeometryCert cert = compute_cert(doc.spec.spec, doc.spec.witnesses);
    const ExtendedCbf cbf(doc.spec.spec, cert, doc.gamma, doc.epsilon);
    if (scenario.plant.dim() != cbf.position_dim())
        throw Error(ErrorKind::InvalidSpec, "plant and specification dimensions differ");
    const PlantModel plant = scenario.plant.build();

    if (o.samples == 0)
        std::fprintf(stderr, "warning: no samples requested, condition holds vacuously\n");
    const auto samples = sample_boundary(cbf, o.samples, seed);
    const auto report = verify_safety_condition(cbf, plant, scenario.input_set, samples);

    const std::string path = out_path(g, "condition.csv");
    auto f = open_out(path);
    write_condition_csv(f, report);
    std::printf("samples: %zu, infeasible: %d, worst margin: %.17g\n", report.samples.size(),
                report.infeasible_count(), report.worst_margin());
    std::printf("wrote %s\n", path.c_str());
    if (!report.all_feasible()) {
        std::fprintf(stderr, "condition violated: worst margin %.17g\n", report.worst_margin());
        return kCondition;
    }
    return kOk;
}

int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o)
{
    Scenario scenario = load_scenario(o.scenario);
    if (g.seed)
        scenario.seed = *g.seed;
    if (o.mode == "nominal")
        scenario.mode = ControlMode::Nominal;
    else if (o.mode == "safeguarded")
        scenario.mode = ControlMode::Safeguarded;
    else if (!o.mode.empty())
        throw Error(ErrorKind::InvalidSpec, "--mode must be nominal or safeguarded");

    const SimSetup setup = prepare(scenario);
    std::vector<TrajectoryLog> logs;
    std::vector<std::string> labels;
    logs.push_back(simulate(scenario, setup));
    labels.push_back(scenario.mode == ControlMode::Safeguarded ? "safeguarded" : "nominal");
    if (o.compare) {
        Scenario other = scenario;
        other.mode = scenario.mode == ControlMode::Safeguarded ? ControlMode::Nominal
                                                               : ControlMode::Safeguarded;
        logs.push_back(simulate(other, setup));
        labels.push_back(other.mode == ControlMode::Safeguarded ? "safeguarded" : "nominal");
    }

    for (std::size_t k = 0; k < logs.size(); ++k) {
        const std::string path = out_path(g, "trajectory_" + labels[k] + ".csv");
        auto f = open_out(path);
        logs[k].write_csv(f);
        print_audit(labels[k].c_str(), audit_invariance(logs[k], setup.cbf));
        std::printf("wrote %s\n", path.c_str());
    }
    if (g.plot) {
        std::vector<const TrajectoryLog*> ptrs;
        for (const auto& l : logs)
            ptrs.push_back(&l);
        for (const auto& p : write_trajectory_plots(ptrs, labels, scenario.spec, g.out, "trajectory"))
            std::printf("wrote %s\n", p.c_str());
    }
    return kOk;
}

int cmd_sweep(const GlobalOptions& g, const SweepOptions& o)
{
    if (o.param != "gamma")
        throw Error(ErrorKind::InvalidSpec, "only --param gamma is supported");
    if (o.values.empty())
        throw Error(ErrorKind::InvalidSpec, "--values needs at least one value");
    Scenario scenario = load_scenario(o.scenario);
    if (g.seed)
        scenario.seed = *g.seed;

    std::vector<TrajectoryLog> logs;
    const auto rows = sweep_gamma(scenario, o.values, &logs);
    const std::string path = out_path(g, "sweep.csv");
    auto f = open_out(path);
    write_sweep_csv(f, rows);
    for (const auto& r : rows)
        std::printf("gamma = %.17g: max ||u|| = %.17g, max ||x2|| = %.17g, min B = %.17g\n",
                    r.gamma, r.max_input, r.max_velocity, r.min_B);
    std::printf("wrote %s\n", path.c_str());
    if (g.plot) {
        std::vector<const TrajectoryLog*> ptrs;
        std::vector<std::string> labels;
        for (std::size_t k = 0; k < logs.size(); ++k) {
            ptrs.push_back(&logs[k]);
            labels.push_back("gamma=" + format_number(rows[k].gamma));
        }
        for (const auto& p : write_trajectory_plots(ptrs, labels, scenario.spec, g.out, "sweep"))
            std::printf("wrote %s\n", p.c_str());
    }
    return kOk;
}

} // namespace polycbf::cli
