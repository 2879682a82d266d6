#include "doctest.h"

#include "commands.hpp"
#include "config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dncalc;
using namespace dncalc::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("dncalc_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Run {
    int code;
    std::string out, err;
};

Run invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

const char* running_yaml = R"(coefficients:
  family: constant
  base: [[2, 0.5], [0.3, 1]]
grid:
  points: 32
)";

}  // namespace

TEST_CASE("defaults and explicit values") {
    auto c = parse_config("{}");
    CHECK(c.points == 256);
    CHECK(c.length == doctest::Approx(2 * pi));
    CHECK(c.family.tag == FamilyTag::constant);
    CHECK(c.checks == std::vector<std::string>{"all"});

    auto d = parse_config(R"(
seed: 9
grid:
  length: 4*pi
  points: 64
solver:
  backend: direct
  trace: three-point
  top: mean-value
verify:
  kernel_times: [0.5, 1]
  refine: true
tolerances:
  identity: 0.02
)");
    CHECK(d.length == doctest::Approx(4 * pi));
    CHECK(d.points == 64);
    CHECK(d.seed == 9);
    CHECK(d.family.seed == 9);
    CHECK(d.backend == SolverBackend::direct);
    CHECK(d.trace == TraceRule::three_point);
    CHECK(d.top == TopCondition::mean_value);
    CHECK(d.kernel_times == std::vector<double>{0.5, 1.0});
    CHECK(d.refine);
    CHECK(d.tolerances.at("identity") == 0.02);
    auto s = verify_settings_of(d);
    CHECK(s.points == 64);
    CHECK(s.top == TopCondition::mean_value);
}

TEST_CASE("coefficient entries accept numbers, pairs and expressions") {
    auto c = parse_config(R"(coefficients:
  family: constant
  base: [[2, [0.5, 0.1]], [0.3, "1 + 0*x"]]
)");
    REQUIRE(c.family.base);
    CHECK((*c.family.base)(0, 1) == cplx(0.5, 0.1));
    auto e = parse_config(R"(coefficients:
  family: expressions
  expressions:
    a11: 2 + 0.1*cos(x)
    a12: 0
    a21: 0
    a22: 1
)");
    CHECK(e.family.tag == FamilyTag::expressions);
}

TEST_CASE("configuration errors carry line numbers") {
    auto line_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(line_of("grid:\n  points: 64\n  pionts: 3\n").rfind("line 3:", 0) == 0);
    CHECK(line_of("solver:\n  backend: magic\n").rfind("line 2:", 0) == 0);
    CHECK(line_of("grid:\n  points: many\n").rfind("line 2:", 0) == 0);
    CHECK(line_of("bogus: 1\n").rfind("line 1:", 0) == 0);
    CHECK_THROWS_AS(parse_config("grid: [1, 2"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/dncalc.yaml"), ConfigError);
}

TEST_CASE("serialized configuration is complete and stable") {
    auto c = parse_config(running_yaml);
    auto j = to_json(c);
    CHECK(j.dump() == to_json(parse_config(running_yaml)).dump());
    CHECK(j["grid"]["points"] == 32);
    CHECK(j["grid"]["levels"] == 128);
    CHECK(j.contains("solver"));
    CHECK(j.contains("verify"));
}

TEST_CASE("exit codes") {
    auto dir = scratch("exit");
    auto good = write_file(dir / "good.yaml", running_yaml);
    auto bad = write_file(dir / "bad.yaml", "coefficients:\n  family: constant\n  base: [[-1, 0], [0, 1]]\ngrid:\n  points: 32\n");
    auto typo = write_file(dir / "typo.yaml", "grid:\n  pionts: 3\n");

    auto ok = invoke({"check-symbol", good.string(), "-o", (dir / "sym").string()});
    CHECK(ok.code == exit_pass);
    CHECK(fs::exists(dir / "sym" / "symbol.json"));
    CHECK(fs::exists(dir / "sym" / "symbol.csv"));

    auto nonelliptic = invoke({"check-symbol", bad.string(), "-o", (dir / "bad").string()});
    CHECK(nonelliptic.code == exit_config);
    CHECK(nonelliptic.err.find("witness") != std::string::npos);

    auto unknown = invoke({"verify", typo.string(), "-o", (dir / "typo").string()});
    CHECK(unknown.code == exit_config);
    CHECK(unknown.err.find("line 2") != std::string::npos);

    CHECK(invoke({}).code == exit_config);
    CHECK(invoke({"frobnicate"}).code == exit_config);
    CHECK(invoke({"verify", good.string(), "--suite", "nope", "-o", (dir / "nope").string()}).code == exit_config);
}

TEST_CASE("solve reports the running example modal ratio") {
    auto dir = scratch("solve");
    auto cfg = write_file(dir / "run.yaml", running_yaml);
    auto r = invoke({"solve", cfg.string(), "--data", "exp(i*x)", "-o", (dir / "out").string()});
    REQUIRE(r.code == exit_pass);
    auto doc = nlohmann::json::parse(slurp(dir / "out" / "solve.json"));
    auto mode = doc["modes"][0];
    CHECK(mode["k"] == 1);
    CHECK(mode["P_ratio"][0].get<double>() == doctest::Approx(1.356466).epsilon(0.02));
    CHECK(mode["P_ratio"][1].get<double>() == doctest::Approx(0.4).epsilon(0.02));
    CHECK(fs::exists(dir / "out" / "traces.csv"));
    CHECK(fs::exists(dir / "out" / "solution.csv"));
}

TEST_CASE("verify output is byte identical across runs") {
    auto dir = scratch("determinism");
    auto cfg = write_file(dir / "run.yaml", running_yaml);
    auto a = invoke({"verify", cfg.string(), "--suite", "phi", "--suite", "symbol", "-o", (dir / "a").string()});
    auto b = invoke({"verify", cfg.string(), "--suite", "phi", "--suite", "symbol", "-o", (dir / "b").string(), "-j", "2"});
    CHECK(a.code == exit_pass);
    CHECK(b.code == exit_pass);
    CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
    CHECK(slurp(dir / "a" / "summary.csv") == slurp(dir / "b" / "summary.csv"));
    CHECK(slurp(dir / "a" / "phi_closure.csv") == slurp(dir / "b" / "phi_closure.csv"));
    auto doc = nlohmann::json::parse(slurp(dir / "a" / "report.json"));
    CHECK(doc["status"] == "pass");
    CHECK(doc["reports"].size() == 2);
    CHECK(fs::exists(dir / "a" / "report.timing.json"));
}

TEST_CASE("kernel command writes plot data") {
    auto dir = scratch("kernel");
    auto cfg = write_file(dir / "id.yaml", "coefficients:\n  family: constant\n  base: [[1, 0], [0, 1]]\ngrid:\n  points: 32\nverify:\n  kernel_points: 1024\n  kernel_extent: 8\n");
    auto r = invoke({"kernel", cfg.string(), "--weight", "unit", "--times", "0.5", "-o", (dir / "k").string()});
    CHECK(r.code == exit_pass);
    auto csv = slurp(dir / "k" / "kernel.csv");
    CHECK(csv.rfind("y,t,abs_g,fit\n", 0) == 0);
    CHECK(invoke({"kernel", cfg.string(), "--weight", "bogus", "-o", (dir / "k2").string()}).code == exit_config);
}
