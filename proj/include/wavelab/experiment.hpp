#pragma once

// JSON-configured experiments behind the command-line runner.
//
// A config is one JSON document:
//   {
//     "experiment": "run-radial" | "run-penrose" | "run-perturb" | "check-compat" |
//                   "diagnose" | "hardy-test" | "sweep",
//     "params": {"n": 3, "p": 7},
//     "grid": {"r_max": 14, "h": 0.01},
//     "time": {"t_end": 10, "dt": 0.005}            (or "cfl": fraction of h instead of dt),
//     "data": {"u0": {"profile": "bump4", "amplitude": 1}, "u1": {"profile": "zero"}},
//     "output": "name", "output_root": "dir", "seed": 1,
//     "options": {...}                               (experiment specific)
//   }
// Outputs land in <root>/<output>, with root = $WAVELAB_OUT if set, else output_root, else ".".

#include "wavelab/params.hpp"
#include "wavelab/profiles.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wavelab {

enum ExitCode : int { kExitPass = 0, kExitAssertion = 1, kExitConfig = 2, kExitSolver = 3 };

enum class ExperimentKind { RunRadial, RunPenrose, RunPerturb, CheckCompat, Diagnose, HardyTest, Sweep };
std::string to_string(ExperimentKind kind);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::RunRadial;
    Params params;
    double r_max = 14.0;
    double h = 0.01;
    double t_end = 1.0;
    double dt = 0.005;
    ProfileSpec u0;
    ProfileSpec u1;
    std::string output;
    std::string output_root = ".";
    std::uint64_t seed = 1;
    nlohmann::json options = nlohmann::json::object();
    nlohmann::json raw;  // the document as given
    std::string source;  // file name used in messages
};

// ConfigError with "<source>:<line>: ..." on malformed input or invalid fields.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);

// $WAVELAB_OUT / output_root, joined with the output name.
std::filesystem::path output_directory(const ExperimentConfig& config);

struct RunOutcome {
    int exit_code = kExitPass;
    std::vector<std::string> failures;  // assertion messages
    std::string error;                  // solver or config error text
    std::vector<std::string> files;     // outputs relative to the output directory
    double wall_time = 0.0;
};

// Runs the experiment, writes its outputs and manifest.json into dir.
RunOutcome run_experiment(const ExperimentConfig& config, const std::filesystem::path& dir);

// 64-bit FNV-1a of a byte string / file.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t fnv1a_file(const std::filesystem::path& path);

struct VerifyOutcome {
    int exit_code = kExitPass;
    std::vector<std::string> mismatches;
    std::size_t checked = 0;
};

// Re-runs the manifest's config into scratch_dir and compares every output hash.
VerifyOutcome verify_manifest(const std::filesystem::path& manifest, const std::filesystem::path& scratch_dir);

}  // namespace wavelab
