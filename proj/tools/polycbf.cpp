#include <CLI11.hpp>

#include "commands.hpp"

using namespace polycbf::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Polytopic control barrier functions: construction, verification and "
                 "safeguarded simulation"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed = 42;
    auto* seed_opt = app.add_option("--seed", seed, "Seed for all sampling (default 42)");
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_flag("--plot", g.plot, "Also write SVG charts");

    ConstructOptions co;
    auto* construct = app.add_subcommand("construct", "Build the extended barrier from a spec file");
    construct->add_option("specfile", co.specfile, "Safety specification (JSON)")->required();
    construct->add_option("--gamma", co.gamma, "Velocity gain gamma > 0");
    construct->add_option("--epsilon", co.epsilon, "Margin epsilon, 0 < epsilon < gamma delta");
    construct->add_flag("--auto", co.automatic, "Select gamma from the plant constants");
    construct->add_option("--d", co.d, "Input norm bound used by --auto");
    construct->add_option("--scenario", co.scenario, "Scenario whose plant --auto uses");
    construct->add_option("--resolution", co.resolution, "Grid points per axis for --auto")
        ->capture_default_str();

    VerifyOptions vo;
    auto* verify = app.add_subcommand("verify", "Check the boundary condition on sampled states");
    verify->add_option("cbffile", vo.cbffile, "Barrier file written by construct")->required();
    verify->add_option("scenario", vo.scenario, "Scenario providing plant and input set")
        ->required();
    verify->add_option("--samples", vo.samples, "Number of boundary samples")
        ->capture_default_str();

    SimulateOptions so;
    auto* sim = app.add_subcommand("simulate", "Run a closed-loop scenario");
    sim->add_option("scenario", so.scenario, "Scenario file")->required();
    sim->add_option("--mode", so.mode, "Override the controller mode")
        ->check(CLI::IsMember({"nominal", "safeguarded"}));
    sim->add_flag("--compare", so.compare, "Also run the other controller mode");

    SweepOptions wo;
    auto* sweep = app.add_subcommand("sweep", "Rerun a scenario over parameter values");
    sweep->add_option("scenario", wo.scenario, "Scenario file")->required();
    sweep->add_option("--param", wo.param, "Swept parameter")->capture_default_str();
    sweep->add_option("--values", wo.values, "Comma-separated values")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    if (*seed_opt)
        g.seed = seed;

    return guarded([&] {
        if (*construct)
            return cmd_construct(g, co);
        if (*verify)
            return cmd_verify(g, vo);
        if (*sim)
            return cmd_simulate(g, so);
        return cmd_sweep(g, wo);
    });
}
