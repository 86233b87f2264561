/**
 * @file scenario.hpp
 * @brief Config-driven scenarios behind the qdcsim command line.
 *
 * Config files are INI-style key/value text with [sections]. Physical
 * quantities carry their unit in the key (r_max_mm, phi_rad, ...). Angles
 * accept plain numbers or multiples of pi such as "pi/2", "-3*pi/4", "2*pi".
 * Unknown keys or sections are rejected so typos cannot silently fall back
 * to defaults.
 */
#pragma once

#include "qdc/detection.hpp"
#include "qdc/errors.hpp"
#include "qdc/interferometer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qdc {

class ConfigParseError : public Error {
public:
    using Error::Error;
};

struct Issue {
    enum class Severity { violation, warning };
    Severity severity = Severity::violation;
    std::string where;
    std::string message;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Issue> issues);
    const std::vector<Issue>& issues() const { return issues_; }

private:
    std::vector<Issue> issues_;
};

enum class ScenarioKind { fringe_sweep, morph_map, emccd_frames, visibility_suite, coincidence_check };

std::string to_string(ScenarioKind k);

/// Evenly spaced axis; the stop value is included only when include_stop is set.
struct AxisSpec {
    double start = 0.0;
    double stop = 0.0;
    int steps = 1;
    bool include_stop = false;

    std::vector<double> values() const;
};

struct RingSpec {
    double r0 = 1.0;  // mm
    double dr = 0.2;  // mm
    int n_bins = 64;
};

struct ScenarioConfig {
    std::string name = "scenario";
    ScenarioKind scenario = ScenarioKind::fringe_sweep;
    std::optional<std::uint64_t> seed;

    MziConfig mzi;
    double mu = 0.05;
    std::uint64_t n_trials = 1000000;  // per theta, or total for coincidence_check

    AxisSpec theta{0.0, 0.0, 32, false};
    AxisSpec phi{0.0, 0.0, 33, true};  // morph_map only
    Port port = Port::ep1;             // morph_map / emccd_frames

    std::vector<DetectorSpec> detectors;
    std::vector<double> visibility_phis;

    EmccdSpec emccd;
    RingSpec ring;

    std::optional<double> target_ratio;  // coincidence_check
    double coincidence_theta = 0.0;
    double coincidence_qe = 1.0;

    std::optional<std::filesystem::path> out_dir;
};

/// Parses config text. Throws ConfigParseError on syntax, type or unknown-key errors.
ScenarioConfig parse_scenario(const std::string& text, const std::string& name = "scenario");
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Canonical text form of the effective configuration (stable for hashing).
std::string canonical_config(const ScenarioConfig& cfg);

/// Every invariant violation and regime warning, without running anything.
std::vector<Issue> validate_scenario(const ScenarioConfig& cfg);

bool has_violations(const std::vector<Issue>& issues);

struct ManifestEntry {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::uintmax_t bytes = 0;
};

struct RunManifest {
    std::string scenario;
    std::string config_hash;
    std::string tool_version;
    std::string started_at;
    std::string finished_at;
    std::uint64_t seed = 0;
    std::vector<ManifestEntry> files;
};

/**
 * Validates and executes the scenario, writing its outputs and
 * manifest.json into out_dir. Throws ValidationError when validation finds
 * a violation; anything else thrown is a runtime failure.
 */
RunManifest run_scenario(const ScenarioConfig& cfg, const std::filesystem::path& out_dir,
                         const RunOptions& options = {});

/// Lists files whose checksum no longer matches manifest.json in dir.
std::vector<std::string> verify_manifest(const std::filesystem::path& dir);

}  // namespace qdc
