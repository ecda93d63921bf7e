#include <doctest.h>

#include "wavelab/error.hpp"
#include "wavelab/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

using namespace wavelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "wavelab-test-experiment" / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text, "cfg.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kZeroRadial = R"({
  "experiment": "run-radial",
  "params": {"n": 3, "p": 7},
  "grid": {"r_max": 6, "h": 0.02},
  "time": {"t_end": 1, "cfl": 0.5},
  "data": {"u0": "zero", "u1": "zero"},
  "output": "zero"
})";

const char* kBumpRadial = R"({
  "experiment": "run-radial",
  "params": {"n": 3, "p": 7},
  "grid": {"r_max": 8, "h": 0.01},
  "time": {"t_end": 2, "dt": 0.005},
  "data": {"u0": {"profile": "bump4", "amplitude": 2}},
  "output": "bump",
  "options": {"energy_tolerance": 1e-3}
})";

}  // namespace

TEST_CASE("missing p is reported with the field name and its line") {
    const std::string msg = config_error("{\n  \"experiment\": \"run-radial\",\n  \"params\": {\n    \"n\": 3\n  }\n}\n");
    CHECK(msg.find("params.p") != std::string::npos);
    CHECK(msg.rfind("cfg.json:3:", 0) == 0);
}

TEST_CASE("malformed JSON carries line and column") {
    const std::string msg = config_error("{\n  \"experiment\": \"run-radial\",\n  \"grid\": {\"h\": 0.1,}\n}\n");
    CHECK(msg.rfind("cfg.json:3:", 0) == 0);
    CHECK(msg.find("malformed JSON") != std::string::npos);
}

TEST_CASE("semantic config errors") {
    const std::string base = "{\n  \"experiment\": \"run-radial\",\n  \"params\": {\"n\": 3, \"p\": 7},\n";
    CHECK(config_error("{\n  \"experiment\": \"bogus\"\n}").rfind("cfg.json:2:", 0) == 0);
    CHECK(config_error(base + "  \"grid\": {\"h\": -1}\n}").find("grid.h") != std::string::npos);
    CHECK(config_error(base + "  \"time\": {\"cfl\": 1.5}\n}").find("time.cfl") != std::string::npos);
    CHECK(config_error(base + "  \"time\": {\"cfl\": 0.5, \"dt\": 0.001}\n}").find("not both") != std::string::npos);
    CHECK(config_error(base + "  \"data\": {\"u0\": \"nope\"}\n}").rfind("cfg.json:4:", 0) == 0);
    CHECK(config_error(base + "  \"data\": {\"u0\": {\"profile\": \"bump4\", \"a\": 3, \"b\": 2}}\n}").find("a < b") !=
          std::string::npos);
    CHECK(config_error(base + "  \"output\": \"/abs\"\n}").find("relative") != std::string::npos);
    CHECK(config_error(base + "  \"seed\": -3\n}").find("seed") != std::string::npos);
    CHECK(config_error("{\"experiment\": \"run-radial\", \"params\": {\"n\": 2, \"p\": 7}}").find("n must be") !=
          std::string::npos);
    CHECK(config_error("[1, 2]").find("object") != std::string::npos);
    CHECK(config_error(kZeroRadial).empty());
}

TEST_CASE("zero data run passes and logs zero energy") {
    const auto cfg = parse_config(kZeroRadial);
    CHECK(cfg.dt == doctest::Approx(0.01));
    const fs::path dir = scratch("zero");
    const auto r = run_experiment(cfg, dir);
    CHECK(r.exit_code == kExitPass);
    std::istringstream log(slurp(dir / "log.csv"));
    std::string line;
    std::getline(log, line);
    CHECK(line.rfind("t,E_total", 0) == 0);
    int rows = 0;
    while (std::getline(log, line)) {
        CHECK(line.find(",0,0,0,0,0,") != std::string::npos);
        ++rows;
    }
    CHECK(rows > 5);
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m["config"] == cfg.raw);
    CHECK(m["code_version"].is_string());
    CHECK(m["wall_time_s"].is_number());
    CHECK(m["outputs"].size() == 2);
}

TEST_CASE("output root comes from WAVELAB_OUT when set") {
    auto cfg = parse_config(kZeroRadial);
    cfg.output_root = "/somewhere";
    ::unsetenv("WAVELAB_OUT");
    CHECK(output_directory(cfg) == fs::path("/somewhere/zero"));
    ::setenv("WAVELAB_OUT", "/elsewhere", 1);
    CHECK(output_directory(cfg) == fs::path("/elsewhere/zero"));
    ::unsetenv("WAVELAB_OUT");
}

TEST_CASE("tight energy tolerance is an assertion failure") {
    auto text = std::string(kBumpRadial);
    text.replace(text.find("1e-3"), 4, "1e-14");
    const auto r = run_experiment(parse_config(text), scratch("tight"));
    CHECK(r.exit_code == kExitAssertion);
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].find("energy drift") != std::string::npos);
}

TEST_CASE("solver failure writes a diagnostic file") {
    auto text = std::string(kBumpRadial);
    text.replace(text.find("\"r_max\": 8"), 10, "\"r_max\": 4");
    const fs::path dir = scratch("causal");
    const auto r = run_experiment(parse_config(text), dir);
    CHECK(r.exit_code == kExitSolver);
    CHECK(r.error.find("causal") != std::string::npos);
    CHECK(fs::exists(dir / "failure.json"));
    CHECK(fs::exists(dir / "manifest.json"));
}

TEST_CASE("compat pre-check rejects data below the requested order") {
    auto text = std::string(kBumpRadial);
    text.replace(text.find("\"bump4\""), 7, "\"poly_bc\"");
    text.replace(text.find("\"energy_tolerance\""), 0, "\"compat_order\": 2, ");
    const auto r = run_experiment(parse_config(text), scratch("precheck"));
    CHECK(r.exit_code == kExitConfig);
    CHECK(r.error.find("order 1") != std::string::npos);
}

TEST_CASE("repeat runs are byte-identical and verify against the manifest") {
    const auto cfg = parse_config(kBumpRadial);
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    REQUIRE(run_experiment(cfg, a).exit_code == kExitPass);
    REQUIRE(run_experiment(cfg, b).exit_code == kExitPass);
    CHECK(slurp(a / "fields.csv") == slurp(b / "fields.csv"));
    CHECK(slurp(a / "log.csv") == slurp(b / "log.csv"));

    const auto v = verify_manifest(a / "manifest.json", scratch("det_verify"));
    CHECK(v.exit_code == kExitPass);
    CHECK(v.checked == 2);
    CHECK(v.mismatches.empty());

    auto m = nlohmann::json::parse(slurp(a / "manifest.json"));
    m["outputs"][0]["fnv1a"] = "0000000000000000";
    std::ofstream(a / "manifest.json") << m.dump(2);
    const auto bad = verify_manifest(a / "manifest.json", scratch("det_verify2"));
    CHECK(bad.exit_code == kExitAssertion);
    CHECK(bad.mismatches.size() == 1);
}

TEST_CASE("hardy suite is reproducible from the seed") {
    const std::string text = R"({"experiment": "hardy-test", "params": {"n": 3, "p": 7}, "seed": 11,
        "output": "h", "options": {"trials": 200, "num_quad": 129}})";
    const fs::path a = scratch("hardy_a"), b = scratch("hardy_b"), c = scratch("hardy_c");
    CHECK(run_experiment(parse_config(text), a).exit_code == kExitPass);
    CHECK(run_experiment(parse_config(text), b).exit_code == kExitPass);
    CHECK(slurp(a / "hardy.json") == slurp(b / "hardy.json"));
    auto other = parse_config(text);
    other.seed = 12;
    run_experiment(other, c);
    CHECK(slurp(a / "hardy.json") != slurp(c / "hardy.json"));
}

TEST_CASE("penrose run with the dual oracle reports a small sup difference") {
    const std::string text = R"({"experiment": "run-penrose", "params": {"n": 3, "p": 7},
        "grid": {"r_max": 14, "h": 0.01}, "time": {"t_end": 1}, "data": {"u0": "bump4"}, "output": "pen",
        "options": {"N": 500, "dual_oracle": {"enabled": true, "tolerance": 5e-3}}})";
    const fs::path dir = scratch("pen");
    const auto r = run_experiment(parse_config(text), dir);
    CHECK(r.exit_code == kExitPass);
    const auto d = nlohmann::json::parse(slurp(dir / "dual.json"));
    CHECK(d["sup_difference"].get<double>() < 5e-3);
    CHECK(d["compared_nodes"].get<int>() > 100);
    CHECK(slurp(dir / "energies.csv").rfind("T,E,F\n", 0) == 0);
}

TEST_CASE("compat check reports per-order verdicts") {
    const std::string text = R"({"experiment": "check-compat", "params": {"n": 3, "p": 7},
        "grid": {"r_max": 4, "h": 0.005}, "data": {"u0": "poly_bc"}, "output": "cc", "options": {"order": 3}})";
    const fs::path dir = scratch("cc");
    CHECK(run_experiment(parse_config(text), dir).exit_code == kExitAssertion);
    const auto j = nlohmann::json::parse(slurp(dir / "compat.json"));
    CHECK(j["verdicts"][0] == true);
    CHECK(j["verdicts"][1] == true);
    CHECK(j["verdicts"][2] == false);

    auto lenient = std::string(text);
    lenient.replace(lenient.find("\"order\": 3"), 10, "\"order\": 3, \"require\": false");
    CHECK(run_experiment(parse_config(lenient), scratch("cc2")).exit_code == kExitPass);
}

TEST_CASE("short perturbation and sweep runs") {
    const std::string perturb = R"({"experiment": "run-perturb", "params": {"n": 3, "p": 7},
        "grid": {"r_max": 8, "h": 0.02}, "time": {"t_end": 1.5, "cfl": 0.5}, "data": {"u0": "bump4"},
        "output": "pt", "options": {"mode": "axisymmetric", "epsilon": 0.01,
        "shape": {"profile": "bump4", "a": 1.5, "b": 3}, "window": 0.5}})";
    const fs::path dir = scratch("pt");
    CHECK(run_experiment(parse_config(perturb), dir).exit_code == kExitPass);
    CHECK(slurp(dir / "perturbation.csv").rfind("epsilon,t,M,E_w,bound\n", 0) == 0);

    const std::string sweep = R"({"experiment": "sweep", "params": {"n": 3, "p": 7},
        "grid": {"r_max": 8, "h": 0.02}, "time": {"t_end": 1.5, "cfl": 0.5}, "data": {"u0": "bump4"},
        "output": "sw", "options": {"epsilons": [0.001, 0.01], "window": 0.5,
        "shape": {"profile": "bump4", "a": 1.5, "b": 3}}})";
    const fs::path sd = scratch("sw");
    const auto r = run_experiment(parse_config(sweep), sd);
    CHECK(r.exit_code == kExitPass);
    CHECK(fs::exists(sd / "sweep_linearized.csv"));
    CHECK(fs::exists(sd / "sweep_axisymmetric.csv"));
    CHECK(nlohmann::json::parse(slurp(sd / "sweep.json")).size() == 4);
}

TEST_CASE("fnv1a reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}
