#include "wavelab/error.hpp"
#include "wavelab/experiment.hpp"
#include "wavelab/profiles.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace wavelab;

namespace {

int cmd_run(const std::string& path) {
    ExperimentConfig cfg;
    try {
        cfg = load_config(path);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    const fs::path dir = output_directory(cfg);
    const RunOutcome r = run_experiment(cfg, dir);
    for (const auto& f : r.failures) std::cerr << "assertion failed: " << f << '\n';
    if (!r.error.empty()) std::cerr << "error: " << r.error << '\n';
    std::cout << to_string(cfg.kind) << ": exit " << r.exit_code << ", " << r.files.size() << " files in "
              << dir.string() << " (" << r.wall_time << " s)\n";
    return r.exit_code;
}

int cmd_profiles(const std::string& filter, bool as_json) {
    const auto entries = list_profiles(filter);
    if (as_json) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& e : entries) {
            j.push_back({{"name", e.name}, {"compat_order", e.compat_order}, {"description", e.description}});
        }
        std::cout << j.dump(2) << '\n';
        return kExitPass;
    }
    for (const auto& e : entries) {
        std::cout << e.name << "\tcompat order " << e.compat_order << "\t" << e.description << '\n';
    }
    return kExitPass;
}

int cmd_verify(const std::string& manifest, std::string scratch) {
    if (scratch.empty()) {
        std::random_device rd;
        scratch = (fs::temp_directory_path() / ("wavelab-verify-" + std::to_string(rd()))).string();
    }
    try {
        const VerifyOutcome v = verify_manifest(manifest, scratch);
        for (const auto& m : v.mismatches) std::cerr << "mismatch: " << m << '\n';
        std::cout << "verified " << v.checked << " outputs, " << v.mismatches.size() << " mismatches\n";
        return v.exit_code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wavelab: radial defocusing wave equation outside the unit ball"};
    app.require_subcommand(1);

    std::string config;
    auto* run = app.add_subcommand("run", "run the experiment described by a JSON config");
    run->add_option("config", config, "config file")->required();

    std::string filter;
    bool as_json = false;
    auto* profiles = app.add_subcommand("profiles", "list built-in data profiles");
    profiles->add_option("filter", filter, "substring of the profile name");
    profiles->add_flag("--json", as_json, "print JSON");

    std::string manifest, scratch;
    auto* verify = app.add_subcommand("verify", "re-run a manifest and compare output hashes");
    verify->add_option("manifest", manifest, "manifest.json of a previous run")->required();
    verify->add_option("--scratch", scratch, "directory for the re-run (default: a fresh temp dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitPass : kExitConfig;
    }

    if (*run) return cmd_run(config);
    if (*profiles) return cmd_profiles(filter, as_json);
    return cmd_verify(manifest, scratch);
}
