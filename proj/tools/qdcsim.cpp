// qdcsim: command-line front end for the delayed-choice interferometer simulator.
//
//   qdcsim run <config> [--out-dir DIR] [--seed N] [--threads N]
//   qdcsim validate <config>
//
// Exit codes: 0 ok, 2 config parse error, 3 validation error, 4 runtime error.
// Failures print a JSON error record on stderr.

#include "qdc/scenario.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <iostream>
#include <thread>

namespace {

constexpr int kExitParse = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

nlohmann::json issues_json(const std::vector<qdc::Issue>& issues, qdc::Issue::Severity which) {
    auto arr = nlohmann::json::array();
    for (const auto& i : issues)
        if (i.severity == which) arr.push_back({{"where", i.where}, {"message", i.message}});
    return arr;
}

int fail(const std::string& kind, int code, const std::string& message,
         const std::vector<qdc::Issue>& issues = {}) {
    nlohmann::json j{{"status", "error"}, {"kind", kind}, {"exit_code", code}, {"message", message}};
    if (!issues.empty()) j["violations"] = issues_json(issues, qdc::Issue::Severity::violation);
    std::cerr << j.dump() << '\n';
    return code;
}

std::filesystem::path resolve_out_dir(const std::string& flag, const qdc::ScenarioConfig& cfg) {
    if (!flag.empty()) return flag;
    if (cfg.out_dir) return *cfg.out_dir;
    if (const char* env = std::getenv("QDCSIM_OUT_DIR"); env && *env) return std::filesystem::path(env) / cfg.name;
    return std::filesystem::path("qdcsim-out") / cfg.name;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Delayed-choice interferometer simulator with vector-polarized single photons"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("qdcsim ") + QDC_VERSION);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed_override = 0;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());

    auto* run = app.add_subcommand("run", "Execute a scenario config and write its outputs");
    run->add_option("config", config_path, "Scenario config file")->required();
    run->add_option("--out-dir", out_dir, "Output directory (default: config [output] dir, then $QDCSIM_OUT_DIR/<name>)");
    auto* seed_opt = run->add_option("--seed", seed_override, "Override the config seed");
    run->add_option("--threads", threads, "Monte Carlo worker threads")->check(CLI::PositiveNumber);

    auto* validate = app.add_subcommand("validate", "Check a scenario config without running it");
    validate->add_option("config", config_path, "Scenario config file")->required();

    CLI11_PARSE(app, argc, argv);

    qdc::ScenarioConfig cfg;
    try {
        cfg = qdc::load_scenario(config_path);
    } catch (const qdc::ConfigParseError& e) {
        return fail("config_parse", kExitParse, e.what());
    }

    if (validate->parsed()) {
        const auto issues = qdc::validate_scenario(cfg);
        nlohmann::json report{{"config", config_path},
                              {"scenario", qdc::to_string(cfg.scenario)},
                              {"violations", issues_json(issues, qdc::Issue::Severity::violation)},
                              {"warnings", issues_json(issues, qdc::Issue::Severity::warning)}};
        std::cout << report.dump(2) << '\n';
        return qdc::has_violations(issues) ? kExitValidation : 0;
    }

    if (seed_opt->count() > 0) cfg.seed = seed_override;
    const auto dir = resolve_out_dir(out_dir, cfg);
    try {
        const auto manifest = qdc::run_scenario(cfg, dir, qdc::RunOptions{threads});
        std::cout << "qdcsim: " << manifest.scenario << " wrote " << manifest.files.size() << " files to "
                  << dir.string() << '\n';
        return 0;
    } catch (const qdc::ValidationError& e) {
        return fail("validation", kExitValidation, e.what(), e.issues());
    } catch (const std::exception& e) {
        return fail("runtime", kExitRuntime, e.what());
    }
}
