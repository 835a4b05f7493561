#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace polycbf::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kParameter = 2,
    kGeometry = 3,
    kCondition = 4,
    kRuntimeInfeasible = 5,
    kUsage = 64,
};

struct GlobalOptions {
    std::optional<std::uint64_t> seed; // unset: scenario seed, else 42
    std::string out = ".";
    bool plot = false;
};

struct ConstructOptions {
    std::string specfile;
    std::optional<double> gamma;
    std::optional<double> epsilon;
    bool automatic = false;
    std::optional<double> d;
    std::string scenario; // plant for --auto
    int resolution = 200;
};

struct VerifyOptions {
    std::string cbffile;
    std::string scenario;
    int samples = 1000;
};

struct SimulateOptions {
    std::string scenario;
    std::string mode; // empty: from the scenario
    bool compare = false;
};

struct SweepOptions {
    std::string scenario;
    std::string param = "gamma";
    std::vector<double> values;
};

int cmd_construct(const GlobalOptions& g, const ConstructOptions& o);
int cmd_verify(const GlobalOptions& g, const VerifyOptions& o);
int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o);
int cmd_sweep(const GlobalOptions& g, const SweepOptions& o);

/// Runs `body`, mapping library errors to the stable exit codes and printing
/// them to stderr.
int guarded(const std::function<int()>& body);

} // namespace polycbf::cli
