#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "polycbf/io.hpp"

namespace fs = std::filesystem;
using polycbf::Json;

namespace {

const std::string kCli = POLYCBF_CLI;
const std::string kScenarios = POLYCBF_SCENARIOS;

struct Run {
    int code;
    std::string out;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
}

class TempDir {
public:
    TempDir()
    {
        path_ = fs::temp_directory_path() / ("polycbf_cli_" + std::to_string(::getpid()));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    fs::path path_;
};

Run run(const std::string& args, const fs::path& dir)
{
    const fs::path log = dir / "stdout.txt";
    const std::string cmd = "'" + kCli + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

// A shortened copy of a bundled scenario with an absolute spec path.
std::string short_scenario(const TempDir& tmp, const std::string& name, double t_final)
{
    Json j = polycbf::read_json_file(kScenarios + "/" + name);
    if (j["spec"].is_string())
        j["spec"] = kScenarios + "/" + j["spec"].get<std::string>();
    j["t_final"] = t_final;
    const std::string path = (tmp.path() / name).string();
    polycbf::write_json_file(path, j);
    return path;
}

} // namespace

TEST_CASE("construct")
{
    TempDir tmp;
    const std::string hex = kScenarios + "/hexagon.json";
    auto r = run("--out " + tmp.str() + " construct " + hex + " --gamma 10 --epsilon 0.1", tmp.path());
    CHECK(r.code == 0);
    CHECK(r.out.find("delta = 1.5707963267948") != std::string::npos);
    REQUIRE(fs::exists(tmp.path() / "hexagon.cbf.json"));
    const std::string first = slurp(tmp.path() / "hexagon.cbf.json");
    const auto doc = polycbf::cbf_from_json(Json::parse(first));
    CHECK(doc.gamma == 10.0);
    CHECK(doc.epsilon == 0.1);

    // Rerunning gives identical bytes.
    r = run("--out " + tmp.str() + " construct " + hex + " --gamma 10 --epsilon 0.1", tmp.path());
    CHECK(slurp(tmp.path() / "hexagon.cbf.json") == first);

    // gamma delta = 0.0157 < epsilon.
    r = run("--out " + tmp.str() + " construct " + hex + " --gamma 0.01 --epsilon 1", tmp.path());
    CHECK(r.code == 2);
    CHECK(r.out.find("error:") != std::string::npos);

    r = run("--out " + tmp.str() + " construct " + kScenarios + "/halfplane.json --gamma 1 --epsilon 0.1",
            tmp.path());
    CHECK(r.code == 3);

    r = run("--out " + tmp.str() + " construct " + kScenarios + "/missing.json --gamma 1 --epsilon 0.1",
            tmp.path());
    CHECK(r.code == 64);

    r = run("--out " + tmp.str() + " construct " + kScenarios + "/slab.json --auto --d 2 --scenario " +
                kScenarios + "/slab_double_integrator.json",
            tmp.path());
    CHECK(r.code == 0);
    CHECK(r.out.find("selected gamma = ") != std::string::npos);
}

TEST_CASE("verify")
{
    TempDir tmp;
    const std::string hex = kScenarios + "/hexagon.json";
    REQUIRE(run("--out " + tmp.str() + " construct " + hex + " --gamma 10 --epsilon 0.1", tmp.path())
                .code == 0);
    const std::string cbf = (tmp.path() / "hexagon.cbf.json").string();
    const std::string scen = kScenarios + "/arm_safeguarded.json";

    auto r = run("--out " + tmp.str() + " verify " + cbf + " " + scen + " --samples 200", tmp.path());
    CHECK(r.code == 0);
    const std::string csv = slurp(tmp.path() / "condition.csv");
    CHECK(csv.rfind("sample_id,x_1,x_2,x_3,x_4,active_indices,margin,feasible\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 201);
    CHECK(csv.find(",false\n") == std::string::npos);

    // Same seed, same file.
    run("--out " + tmp.str() + " verify " + cbf + " " + scen + " --samples 200", tmp.path());
    CHECK(slurp(tmp.path() / "condition.csv") == csv);
    run("--seed 7 --out " + tmp.str() + " verify " + cbf + " " + scen + " --samples 200", tmp.path());
    CHECK(slurp(tmp.path() / "condition.csv") != csv);

    r = run("--out " + tmp.str() + " verify " + cbf + " " + scen + " --samples 0", tmp.path());
    CHECK(r.code == 0);
    CHECK(r.out.find("warning") != std::string::npos);

    // A tight input box cannot satisfy the condition on the slab.
    REQUIRE(run("--out " + tmp.str() + " construct " + kScenarios + "/slab.json --gamma 1 --epsilon 0.5",
                tmp.path())
                .code == 0);
    Json j = polycbf::read_json_file(kScenarios + "/slab_double_integrator.json");
    j["spec"] = kScenarios + "/slab.json";
    j["weights"]["input_set"] = {{"type", "box"}, {"limits", {0.01}}};
    const std::string tight = (tmp.path() / "tight.json").string();
    polycbf::write_json_file(tight, j);
    r = run("--out " + tmp.str() + " verify " + (tmp.path() / "slab.cbf.json").string() + " " + tight +
                " --samples 50",
            tmp.path());
    CHECK(r.code == 4);
}

TEST_CASE("simulate")
{
    TempDir tmp;
    const std::string scen = short_scenario(tmp, "arm_safeguarded.json", 0.5);
    auto r = run("--plot --out " + tmp.str() + " simulate " + scen + " --compare", tmp.path());
    CHECK(r.code == 0);
    CHECK(fs::exists(tmp.path() / "trajectory_safeguarded.csv"));
    CHECK(fs::exists(tmp.path() / "trajectory_nominal.csv"));
    CHECK(fs::exists(tmp.path() / "trajectory_angles.svg"));
    CHECK(fs::exists(tmp.path() / "trajectory_magnitudes.svg"));
    CHECK(fs::exists(tmp.path() / "trajectory_phase.svg"));
    const std::string first = slurp(tmp.path() / "trajectory_safeguarded.csv");
    CHECK(first.rfind("t,x1_1,x1_2,x2_1,x2_2,u_1,u_2,B,h,alpha,M,status,solve_us\n", 0) == 0);
    CHECK(std::count(first.begin(), first.end(), '\n') == 502);

    run("--out " + tmp.str() + " simulate " + scen, tmp.path());
    CHECK(slurp(tmp.path() / "trajectory_safeguarded.csv") == first);

    r = run("--out " + tmp.str() + " simulate " + scen + " --mode nominal", tmp.path());
    CHECK(r.code == 0);
    r = run("--out " + tmp.str() + " simulate " + scen + " --mode bogus", tmp.path());
    CHECK(r.code == 64);

    // Runtime infeasibility on the slab with a tight input box.
    Json j = polycbf::read_json_file(kScenarios + "/slab_double_integrator.json");
    j["spec"] = kScenarios + "/slab.json";
    j["cbf"] = {{"gamma", 1.0}, {"epsilon", 0.5}};
    j["weights"]["input_set"] = {{"type", "box"}, {"limits", {0.01}}};
    j["initial_state"] = {0.0, 0.4};
    j["skip_verification"] = true;
    j["t_final"] = 2.0;
    const std::string tight = (tmp.path() / "tight.json").string();
    polycbf::write_json_file(tight, j);
    r = run("--out " + tmp.str() + " simulate " + tight, tmp.path());
    CHECK(r.code == 5);
}

TEST_CASE("sweep and usage errors")
{
    TempDir tmp;
    const std::string scen = short_scenario(tmp, "arm_safeguarded.json", 0.3);
    auto r = run("--out " + tmp.str() + " sweep " + scen + " --param gamma --values 0.5,1,2", tmp.path());
    CHECK(r.code == 0);
    const std::string csv = slurp(tmp.path() / "sweep.csv");
    CHECK(csv.rfind("gamma,epsilon,max_input,max_velocity,min_B\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

    CHECK(run("--out " + tmp.str() + " sweep " + scen + " --param gamma", tmp.path()).code == 64);
    CHECK(run("--out " + tmp.str() + " sweep " + scen + " --param epsilon --values 1", tmp.path()).code ==
          64);
    CHECK(run("", tmp.path()).code == 64);
    CHECK(run("frobnicate", tmp.path()).code == 64);
    CHECK(run("construct", tmp.path()).code == 64);
    CHECK(run("--help", tmp.path()).code == 0);
}
