#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "polycbf/cbf.hpp"
#include "polycbf/sim.hpp"

namespace polycbf {

using Json = nlohmann::json;

/// A safety specification plus optional caller-pinned witnesses.
///
///   {"n": 2,
///    "halfspaces": [{"a": [1, 0], "b": 1.5}, ...],
///    "terms": [[1, 2, 3]],                    // 1-based
///    "witness": [0, 0],                       // optional, all index sets
///    "witnesses": [{"indices": [1, 2], "point": [0, 0]}]}   // optional
struct SpecDocument {
    SafetySpec spec;
    WitnessOverrides witnesses;
};

/// A spec document with the barrier parameters {"cbf": {"gamma", "epsilon"}}.
struct CbfDocument {
    SpecDocument spec;
    double gamma = 0;
    double epsilon = 0;
};

SpecDocument spec_from_json(const Json& j);
Json spec_to_json(const SpecDocument& doc);

CbfDocument cbf_from_json(const Json& j);
Json cbf_to_json(const CbfDocument& doc);

/// Scenario files carry "spec" (object or path relative to `base_dir`),
/// "cbf", "plant", "controller", "weights", "initial_state", "t_final",
/// "dt", "seed", "verification_samples", "skip_verification". A missing
/// "spec" leaves Scenario::spec empty.
Scenario scenario_from_json(const Json& j, const std::string& base_dir = ".");
Json scenario_to_json(const Scenario& s);

InputSet input_set_from_json(const Json& j);
Json input_set_to_json(const InputSet& u);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

SpecDocument load_spec(const std::string& path);
CbfDocument load_cbf(const std::string& path);
Scenario load_scenario(const std::string& path);

/// sample_id, x_1..x_2n, active_indices (1-based, ';'-separated), margin,
/// feasible.
void write_condition_csv(std::ostream& os, const ConditionReport& report);

} // namespace polycbf
