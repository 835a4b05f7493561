#include "polycbf/io.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

namespace polycbf {

namespace {

[[noreturn]] void bad(const std::string& what)
{
    throw Error(ErrorKind::InvalidSpec, what);
}

void allow_keys(const Json& j, const std::set<std::string>& keys, const std::string& where)
{
    if (!j.is_object())
        bad(where + " must be an object");
    for (const auto& item : j.items())
        if (!keys.count(item.key()))
            bad("unknown key '" + item.key() + "' in " + where);
}

double number(const Json& j, const std::string& what)
{
    if (!j.is_number())
        bad(what + " must be a number");
    return j.get<double>();
}

Vector vector_from(const Json& j, const std::string& what)
{
    if (!j.is_array())
        bad(what + " must be an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = number(j[i], what);
    return v;
}

Json vector_to(const Vector& v)
{
    Json j = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        j.push_back(v(i));
    return j;
}

Matrix matrix_from(const Json& j, const std::string& what)
{
    if (!j.is_array() || j.empty() || !j[0].is_array())
        bad(what + " must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Vector row = vector_from(j[static_cast<std::size_t>(r)], what);
        if (row.size() != cols)
            bad(what + " rows must have equal length");
        m.row(r) = row.transpose();
    }
    return m;
}

Json matrix_to(const Matrix& m)
{
    Json j = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        j.push_back(vector_to(m.row(r).transpose()));
    return j;
}

IndexSet indices_from(const Json& j, int r, const std::string& what)
{
    if (!j.is_array() || j.empty())
        bad(what + " must be a nonempty array of 1-based indices");
    IndexSet out;
    for (const auto& k : j) {
        if (!k.is_number_integer())
            bad(what + " entries must be integers");
        const int idx = k.get<int>();
        if (idx < 1 || idx > r)
            bad(what + " index " + std::to_string(idx) + " is out of range");
        out.push_back(idx - 1);
    }
    return out;
}

Json indices_to(const IndexSet& s)
{
    Json j = Json::array();
    for (int i : s)
        j.push_back(i + 1);
    return j;
}

} // namespace

SpecDocument spec_from_json(const Json& j)
{
    allow_keys(j, {"n", "halfspaces", "terms", "witness", "witnesses", "cbf"}, "spec");
    if (!j.contains("n") || !j["n"].is_number_integer() || j["n"].get<int>() < 1)
        bad("spec needs a positive integer 'n'");
    const int n = j["n"].get<int>();
    if (!j.contains("halfspaces") || !j["halfspaces"].is_array())
        bad("spec needs a 'halfspaces' array");

    std::vector<HalfSpace> hs;
    for (const auto& h : j["halfspaces"]) {
        allow_keys(h, {"a", "b"}, "halfspace");
        if (!h.contains("a") || !h.contains("b"))
            bad("each halfspace needs 'a' and 'b'");
        HalfSpace s{vector_from(h["a"], "halfspace a"), number(h["b"], "halfspace b")};
        if (s.a.size() != n)
            bad("halfspace normal has the wrong dimension");
        hs.push_back(std::move(s));
    }
    const int r = static_cast<int>(hs.size());

    std::vector<IndexSet> terms;
    if (!j.contains("terms") || !j["terms"].is_array())
        bad("spec needs a 'terms' array");
    for (const auto& t : j["terms"])
        terms.push_back(indices_from(t, r, "term"));

    SpecDocument doc{SafetySpec(std::move(hs), std::move(terms)), {}};
    if (j.contains("witness")) {
        doc.witnesses.uniform = vector_from(j["witness"], "witness");
        if (doc.witnesses.uniform->size() != n)
            bad("witness has the wrong dimension");
    }
    if (j.contains("witnesses")) {
        if (!j["witnesses"].is_array())
            bad("'witnesses' must be an array");
        for (const auto& w : j["witnesses"]) {
            allow_keys(w, {"indices", "point"}, "witness entry");
            if (!w.contains("indices") || !w.contains("point"))
                bad("witness entries need 'indices' and 'point'");
            IndexSet idx = indices_from(w["indices"], r, "witness indices");
            std::sort(idx.begin(), idx.end());
            const Vector p = vector_from(w["point"], "witness point");
            if (p.size() != n)
                bad("witness point has the wrong dimension");
            doc.witnesses.pinned[idx] = p;
        }
    }
    return doc;
}

Json spec_to_json(const SpecDocument& doc)
{
    Json j;
    j["n"] = doc.spec.dim();
    Json hs = Json::array();
    for (const auto& h : doc.spec.halfspaces())
        hs.push_back({{"a", vector_to(h.a)}, {"b", h.b}});
    j["halfspaces"] = hs;
    Json terms = Json::array();
    for (const auto& t : doc.spec.terms())
        terms.push_back(indices_to(t));
    j["terms"] = terms;
    if (doc.witnesses.uniform)
        j["witness"] = vector_to(*doc.witnesses.uniform);
    if (!doc.witnesses.pinned.empty()) {
        Json ws = Json::array();
        for (const auto& [idx, p] : doc.witnesses.pinned)
            ws.push_back({{"indices", indices_to(idx)}, {"point", vector_to(p)}});
        j["witnesses"] = ws;
    }
    return j;
}

CbfDocument cbf_from_json(const Json& j)
{
    CbfDocument doc;
    doc.spec = spec_from_json(j);
    if (!j.contains("cbf"))
        bad("cbf file needs a 'cbf' block");
    allow_keys(j["cbf"], {"gamma", "epsilon"}, "cbf");
    if (!j["cbf"].contains("gamma") || !j["cbf"].contains("epsilon"))
        bad("cbf block needs 'gamma' and 'epsilon'");
    doc.gamma = number(j["cbf"]["gamma"], "gamma");
    doc.epsilon = number(j["cbf"]["epsilon"], "epsilon");
    return doc;
}

Json cbf_to_json(const CbfDocument& doc)
{
    Json j = spec_to_json(doc.spec);
    j["cbf"] = {{"gamma", doc.gamma}, {"epsilon", doc.epsilon}};
    return j;
}

InputSet input_set_from_json(const Json& j)
{
    if (j.is_string() && j.get<std::string>() == "unbounded")
        return InputSet::unbounded();
    allow_keys(j, {"type", "limits", "radius", "facets"}, "input_set");
    const std::string type = j.value("type", std::string("unbounded"));
    if (type == "unbounded")
        return InputSet::unbounded();
    if (type == "box") {
        if (!j.contains("limits"))
            bad("box input set needs 'limits'");
        return InputSet::box(vector_from(j["limits"], "limits"));
    }
    if (type == "ball") {
        if (!j.contains("radius"))
            bad("ball input set needs 'radius'");
        const int facets = j.contains("facets") ? j["facets"].get<int>() : 16;
        return InputSet::ball(number(j["radius"], "radius"), facets);
    }
    bad("unknown input_set type '" + type + "'");
}

Json input_set_to_json(const InputSet& u)
{
    switch (u.kind()) {
    case InputSet::Kind::Unbounded: return {{"type", "unbounded"}};
    case InputSet::Kind::Box: return {{"type", "box"}, {"limits", vector_to(u.limits())}};
    case InputSet::Kind::Ball:
        return {{"type", "ball"}, {"radius", u.radius()}, {"facets", u.facets()}};
    }
    return {};
}

Scenario scenario_from_json(const Json& j, const std::string& base_dir)
{
    allow_keys(j,
               {"spec", "cbf", "plant", "controller", "weights", "initial_state", "t_final", "dt",
                "seed", "verification_samples", "skip_verification", "record_timing"},
               "scenario");
    Scenario s;
    if (j.contains("spec")) {
        SpecDocument doc;
        if (j["spec"].is_string()) {
            std::filesystem::path p = j["spec"].get<std::string>();
            if (p.is_relative())
                p = std::filesystem::path(base_dir) / p;
            doc = load_spec(p.string());
        } else {
            doc = spec_from_json(j["spec"]);
        }
        s.spec = doc.spec;
        s.witnesses = doc.witnesses;
    }
    if (j.contains("cbf")) {
        allow_keys(j["cbf"], {"gamma", "epsilon"}, "cbf");
        s.gamma = number(j["cbf"].at("gamma"), "gamma");
        s.epsilon = number(j["cbf"].at("epsilon"), "epsilon");
    }
    if (j.contains("plant")) {
        const Json& p = j["plant"];
        allow_keys(p, {"type", "m1", "m2", "l1", "l2", "gravity", "g", "n"}, "plant");
        const std::string type = p.value("type", std::string("two_link_arm"));
        if (type == "two_link_arm") {
            s.plant.type = PlantConfig::Type::TwoLinkArm;
            s.plant.arm.m1 = p.value("m1", 1.0);
            s.plant.arm.m2 = p.value("m2", 1.0);
            s.plant.arm.l1 = p.value("l1", 1.0);
            s.plant.arm.l2 = p.value("l2", 1.0);
            s.plant.arm.gravity = p.value("gravity", false);
            s.plant.arm.g = p.value("g", 9.81);
        } else if (type == "double_integrator") {
            s.plant.type = PlantConfig::Type::DoubleIntegrator;
            s.plant.n = p.value("n", 1);
        } else {
            bad("unknown plant type '" + type + "'");
        }
    }
    if (j.contains("controller")) {
        const Json& c = j["controller"];
        allow_keys(c, {"mode", "reference", "hold"}, "controller");
        const std::string mode = c.value("mode", std::string("safeguarded"));
        if (mode == "safeguarded")
            s.mode = ControlMode::Safeguarded;
        else if (mode == "nominal")
            s.mode = ControlMode::Nominal;
        else
            bad("controller mode must be 'safeguarded' or 'nominal'");
        const std::string hold = c.value("hold", std::string("per_stage"));
        if (hold == "per_stage")
            s.hold = ControlHold::PerStage;
        else if (hold == "zero_order")
            s.hold = ControlHold::ZeroOrder;
        else
            bad("controller hold must be 'per_stage' or 'zero_order'");
        if (c.contains("reference")) {
            allow_keys(c["reference"], {"amplitude", "frequency"}, "reference");
            s.reference.amplitude = vector_from(c["reference"].at("amplitude"), "amplitude");
            s.reference.frequency = vector_from(c["reference"].at("frequency"), "frequency");
        }
    }
    if (j.contains("weights")) {
        const Json& w = j["weights"];
        allow_keys(w, {"q_alpha", "q_M", "c_alpha", "c_M", "Q", "input_set"}, "weights");
        s.weights.q_alpha = w.value("q_alpha", s.weights.q_alpha);
        s.weights.q_M = w.value("q_M", s.weights.q_M);
        s.weights.c_alpha = w.value("c_alpha", s.weights.c_alpha);
        s.weights.c_M = w.value("c_M", s.weights.c_M);
        if (w.contains("Q")) {
            if (w["Q"].is_string()) {
                if (w["Q"].get<std::string>() != "identity")
                    bad("Q must be \"identity\" or a matrix");
            } else {
                const Matrix Q = matrix_from(w["Q"], "Q");
                s.weights.Q = [Q](const Vector&) { return Q; };
            }
        }
        if (w.contains("input_set"))
            s.input_set = input_set_from_json(w["input_set"]);
    }
    if (j.contains("initial_state"))
        s.x0 = vector_from(j["initial_state"], "initial_state");
    if (j.contains("t_final"))
        s.t_final = number(j["t_final"], "t_final");
    if (j.contains("dt"))
        s.dt = number(j["dt"], "dt");
    if (j.contains("seed"))
        s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("verification_samples"))
        s.verification_samples = j["verification_samples"].get<int>();
    if (j.contains("skip_verification"))
        s.skip_verification = j["skip_verification"].get<bool>();
    if (j.contains("record_timing"))
        s.record_timing = j["record_timing"].get<bool>();
    return s;
}

Json scenario_to_json(const Scenario& s)
{
    Json j;
    if (!s.spec.empty())
        j["spec"] = spec_to_json({s.spec, s.witnesses});
    j["cbf"] = {{"gamma", s.gamma}, {"epsilon", s.epsilon}};
    if (s.plant.type == PlantConfig::Type::TwoLinkArm)
        j["plant"] = {{"type", "two_link_arm"}, {"m1", s.plant.arm.m1}, {"m2", s.plant.arm.m2},
                      {"l1", s.plant.arm.l1},   {"l2", s.plant.arm.l2},
                      {"gravity", s.plant.arm.gravity}, {"g", s.plant.arm.g}};
    else
        j["plant"] = {{"type", "double_integrator"}, {"n", s.plant.n}};
    Json c;
    c["mode"] = s.mode == ControlMode::Safeguarded ? "safeguarded" : "nominal";
    c["hold"] = s.hold == ControlHold::PerStage ? "per_stage" : "zero_order";
    if (s.reference.amplitude.size())
        c["reference"] = {{"amplitude", vector_to(s.reference.amplitude)},
                          {"frequency", vector_to(s.reference.frequency)}};
    j["controller"] = c;
    Json w = {{"q_alpha", s.weights.q_alpha},
              {"q_M", s.weights.q_M},
              {"c_alpha", s.weights.c_alpha},
              {"c_M", s.weights.c_M},
              {"input_set", input_set_to_json(s.input_set)}};
    // A state-dependent Q is written as its value at the initial state.
    if (s.weights.Q && !s.spec.empty())
        w["Q"] = matrix_to(s.weights.Q(s.initial_state()));
    else
        w["Q"] = "identity";
    j["weights"] = w;
    if (s.x0.size())
        j["initial_state"] = vector_to(s.x0);
    j["t_final"] = s.t_final;
    j["dt"] = s.dt;
    j["seed"] = s.seed;
    j["verification_samples"] = s.verification_samples;
    j["skip_verification"] = s.skip_verification;
    j["record_timing"] = s.record_timing;
    return j;
}

Json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorKind::Io, "cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const Json& j)
{
    std::ofstream out(path);
    if (!out)
        throw Error(ErrorKind::Io, "cannot write " + path);
    out << j.dump(2) << '\n';
}

SpecDocument load_spec(const std::string& path)
{
    return spec_from_json(read_json_file(path));
}

CbfDocument load_cbf(const std::string& path)
{
    return cbf_from_json(read_json_file(path));
}

Scenario load_scenario(const std::string& path)
{
    const Json j = read_json_file(path);
    try {
        return scenario_from_json(j, std::filesystem::path(path).parent_path().string());
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidSpec, path + ": " + e.what());
    }
}

void write_condition_csv(std::ostream& os, const ConditionReport& report)
{
    const int dim = report.samples.empty() ? 0 : static_cast<int>(report.samples[0].x.size());
    os << "sample_id";
    for (int i = 1; i <= dim; ++i)
        os << ",x_" << i;
    os << ",active_indices,margin,feasible\n";
    for (std::size_t k = 0; k < report.samples.size(); ++k) {
        const auto& s = report.samples[k];
        os << k;
        for (Eigen::Index i = 0; i < s.x.size(); ++i)
            os << ',' << format_number(s.x(i));
        os << ',';
        for (std::size_t a = 0; a < s.active.size(); ++a)
            os << (a ? ";" : "") << s.active[a] + 1;
        os << ',' << format_number(s.margin) << ',' << (s.feasible ? "true" : "false") << '\n';
    }
}

} // namespace polycbf
