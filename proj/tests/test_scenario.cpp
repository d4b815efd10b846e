#include "gammafrac/scenario.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gammafrac;
namespace fs = std::filesystem;

namespace {

std::string env(const char* name) {
    const char* v = std::getenv(name);
    return v ? v : "";
}

const std::string CLI = env("GAMMAFRAC_CLI");
const std::string SCEN = env("GAMMAFRAC_SCENARIOS");

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "gammafrac_test" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

struct CliRun {
    int status = -1;
    std::string err;
};

CliRun cli(const std::string& mode, const std::string& config, const fs::path& out, const std::string& extra = "") {
    const fs::path errf = out / "stderr.txt";
    const std::string cmd = "\"" + CLI + "\" " + mode + " --config \"" + config + "\" --out \"" + out.string() + "\" " + extra +
                            " > \"" + (out / "stdout.txt").string() + "\" 2> \"" + errf.string() + "\"";
    const int raw = std::system(cmd.c_str());
    CliRun r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream in(errf);
    std::stringstream ss;
    ss << in.rdbuf();
    r.err = ss.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json base() {
    return json::parse(R"({"seed": 1, "geometry": {"rect": [0, 0, 1, 1], "displacement": ["0", "0"]},
                           "run": {"mode": "gamma-converge", "eps": [0.1, 0.05, 0.025]}})");
}

ErrorKind parse_kind(const json& j) {
    try {
        parse_scenario(j);
    } catch (const Error& e) {
        return e.kind();
    }
    return ErrorKind::Input;
}

#define REQUIRE_CLI() \
    if (CLI.empty() || SCEN.empty()) GTEST_SKIP() << "GAMMAFRAC_CLI / GAMMAFRAC_SCENARIOS not set"

}  // namespace

TEST(ParseScenario, AcceptsMinimalLadder) {
    const Scenario s = parse_scenario(base());
    EXPECT_EQ(s.run.mode, "gamma-converge");
    EXPECT_EQ(s.run.eps.size(), 3u);
    EXPECT_TRUE(s.potential().zero);
}

TEST(ParseScenario, RejectsBadConfigs) {
    json j = base();
    j.erase("seed");
    EXPECT_EQ(parse_kind(j), ErrorKind::Config);

    j = base();
    j["run"]["eps"] = {0.05, 0.1, 0.025};
    EXPECT_EQ(parse_kind(j), ErrorKind::Config);

    j = base();
    j["run"]["mode"] = "explode";
    EXPECT_EQ(parse_kind(j), ErrorKind::Config);

    j = base();
    j["geometry"]["displacement"] = {"x +", "0"};
    EXPECT_EQ(parse_kind(j), ErrorKind::Config);

    j = base();
    j["run"] = {{"mode", "solve"}, {"grids", {17}}};
    EXPECT_EQ(parse_kind(j), ErrorKind::Config);  // no boundary block

    j["boundary"] = {{"f", {"0", "0"}}};
    j["run"]["eps_factor"] = 3;
    EXPECT_EQ(parse_kind(j), ErrorKind::Config);
}

TEST(ParseScenario, PressureOverride) {
    json j = base();
    j["potential"] = {{"kind", "fracking_affine"}, {"q", 1.0}, {"rho", "0.1"}, {"rho_sup", 0.1}};
    const Scenario s = parse_scenario(j);
    const SymMat2 m{1.0, 1.0, 0.0};
    EXPECT_NEAR(s.potential()({0.5, 0.5}, m, 1.0), -0.2, 1e-15);
    EXPECT_NEAR(s.potential_with_pressure(3.0)({0.5, 0.5}, m, 1.0), -0.6, 1e-15);
}

TEST(ParseScenario, ShippedScenariosParse) {
    REQUIRE_CLI();
    int n = 0;
    for (const auto& e : fs::directory_iterator(SCEN)) {
        if (e.path().extension() != ".json") continue;
        SCOPED_TRACE(e.path().string());
        EXPECT_NO_THROW(load_scenario(e.path().string()));
        ++n;
    }
    EXPECT_GE(n, 8);
}

TEST(Cli, VerticalCrackLadderPasses) {
    REQUIRE_CLI();
    const auto out = scratch("vertical");
    EXPECT_EQ(cli("gamma-converge", SCEN + "/vertical_crack.json", out).status, 0);
    const std::string csv = slurp(out / "ladder.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "eps,total_Feps,total_sharp,gap,bulk_gap,damage_gap,potential_gap,linf_u,min_v,max_grad_v_times_eps");
    EXPECT_TRUE(fs::exists(out / "sharp.csv"));
    EXPECT_TRUE(fs::exists(out / "gap.dat"));
}

TEST(Cli, CrackFreeLadderPasses) {
    REQUIRE_CLI();
    EXPECT_EQ(cli("gamma-converge", SCEN + "/crack_free.json", scratch("crack_free")).status, 0);
}

TEST(Cli, TubeOverlapIsReportedAsJson) {
    REQUIRE_CLI();
    const CliRun r = cli("gamma-converge", SCEN + "/tube_overlap.json", scratch("overlap"));
    EXPECT_EQ(r.status, 2);
    const json j = json::parse(r.err);
    EXPECT_EQ(j.at("error"), "tube_overlap");
}

TEST(Cli, ConfigErrors) {
    REQUIRE_CLI();
    const auto out = scratch("config");
    EXPECT_EQ(cli("gamma-converge", (out / "missing.json").string(), out).status, 4);
    EXPECT_EQ(json::parse(cli("solve", SCEN + "/vertical_crack.json", out).err).at("error"), "config");
    std::ofstream(out / "broken.json") << "{ not json";
    EXPECT_EQ(cli("solve", (out / "broken.json").string(), out).status, 4);
}

TEST(Cli, ZeroLoadSolveWritesArtifacts) {
    REQUIRE_CLI();
    const auto out = scratch("zero");
    EXPECT_EQ(cli("solve", SCEN + "/zero_load.json", out, "--threads 2").status, 0);
    const std::string trace = slurp(out / "trace_n17.csv");
    EXPECT_EQ(trace.substr(0, trace.find('\n')), "iter,bulk,damage,potential,F_eps,W_eps,C_bound");
    const std::string field = slurp(out / "field_n17.txt");
    EXPECT_EQ(field.substr(0, field.find('\n')), "# grid 17 17 0.0625");
    EXPECT_TRUE(fs::exists(out / "sublevel_n17.csv"));
}

TEST(Cli, SolveIsDeterministic) {
    REQUIRE_CLI();
    const auto a = scratch("det_a"), b = scratch("det_b");
    ASSERT_EQ(cli("solve", SCEN + "/compression.json", a).status, 0);
    ASSERT_EQ(cli("solve", SCEN + "/compression.json", b).status, 0);
    for (const char* f : {"trace_n33.csv", "field_n33.txt", "sublevel_n33.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(Cli, SigmaBound) {
    REQUIRE_CLI();
    const auto out = scratch("sigma");
    EXPECT_EQ(cli("sigma-bound", SCEN + "/sigma_unit.json", out).status, 0);
    const std::string text = slurp(out / "stdout.txt");
    EXPECT_NE(text.find("envelope   2.000000"), std::string::npos);
    EXPECT_NE(text.find("C          1.000000"), std::string::npos);
    EXPECT_EQ(cli("sigma-bound", SCEN + "/sigma_strong_fracking.json", out).status, 2);
}

TEST(Cli, RecessionCheck) {
    REQUIRE_CLI();
    EXPECT_EQ(cli("recession-check", SCEN + "/recession_tresca.json", scratch("rec"), "--seed 3").status, 0);
}

TEST(Cli, FrackingDemoOpensMonotonically) {
    REQUIRE_CLI();
    const auto out = scratch("demo");
    EXPECT_EQ(cli("demo-fracking", SCEN + "/fracking_demo.json", out).status, 0);
    std::ifstream in(out / "opening.dat");
    double q, o, prev = -1.0;
    int rows = 0;
    while (in >> q >> o) {
        EXPECT_GE(o, prev);
        prev = o;
        ++rows;
    }
    EXPECT_EQ(rows, 4);
}
