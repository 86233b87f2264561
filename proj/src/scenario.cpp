#include "qdc/scenario.hpp"

#include "qdc/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

namespace qdc {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    if (begin != end && *begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

// "1.5", "pi", "-pi/2", "3*pi/4", "0.5*pi"
std::optional<double> parse_angle(const std::string& raw) {
    const std::string s = trim(raw);
    if (auto v = parse_number(s)) return v;
    static const std::regex pi_form(R"(^([+-]?)\s*(?:([0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*\*\s*)?pi(?:\s*/\s*([0-9]*\.?[0-9]+))?$)");
    std::smatch m;
    if (!std::regex_match(s, m, pi_form)) return std::nullopt;
    double v = std::numbers::pi;
    if (m[2].matched) v *= *parse_number(m[2].str());
    if (m[3].matched) {
        const double d = *parse_number(m[3].str());
        if (d == 0.0) return std::nullopt;
        v /= d;
    }
    if (m[1].str() == "-") v = -v;
    return v;
}

// One INI section; remembers which keys were read so leftovers can be reported.
class Section {
public:
    Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

    std::optional<std::string> raw(const std::string& key) {
        used_.insert(key);
        if (!tree_) return std::nullopt;
        auto it = tree_->find(key);
        if (it == tree_->not_found()) return std::nullopt;
        return trim(it->second.data());
    }

    void number(const std::string& key, double& out) {
        if (auto s = raw(key)) {
            auto v = parse_number(*s);
            if (!v) fail(key, "expected a number, got '" + *s + "'");
            out = *v;
        }
    }
    void angle(const std::string& key, double& out) {
        if (auto s = raw(key)) {
            auto v = parse_angle(*s);
            if (!v) fail(key, "expected an angle in radians (e.g. 1.57 or pi/2), got '" + *s + "'");
            out = *v;
        }
    }
    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (auto s = raw(key)) {
            Int v{};
            auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
            if (ec != std::errc{} || ptr != s->data() + s->size()) fail(key, "expected an integer, got '" + *s + "'");
            out = v;
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (auto s = raw(key)) {
            if (*s == "true" || *s == "yes" || *s == "1")
                out = true;
            else if (*s == "false" || *s == "no" || *s == "0")
                out = false;
            else
                fail(key, "expected true/false, got '" + *s + "'");
        }
    }
    void text(const std::string& key, std::string& out) {
        if (auto s = raw(key)) out = *s;
    }
    void angle_list(const std::string& key, std::vector<double>& out) {
        if (auto s = raw(key)) {
            out.clear();
            std::stringstream ss(*s);
            std::string item;
            while (std::getline(ss, item, ',')) {
                auto v = parse_angle(item);
                if (!v) fail(key, "bad angle '" + trim(item) + "' in list");
                out.push_back(*v);
            }
        }
    }
    template <class Enum>
    void choice(const std::string& key, Enum& out, Enum (*from_string)(const std::string&)) {
        if (auto s = raw(key)) {
            try {
                out = from_string(*s);
            } catch (const InvalidArgument& e) {
                fail(key, e.what());
            }
        }
    }

    void reject_unknown() const {
        if (!tree_) return;
        for (const auto& [key, child] : *tree_) {
            if (!child.empty()) throw ConfigParseError("nested section '" + key + "' inside [" + name_ + "] is not supported");
            if (!used_.contains(key)) throw ConfigParseError("unknown key '" + key + "' in " + label());
        }
    }

private:
    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigParseError(label() + " " + key + ": " + msg);
    }
    std::string label() const { return name_.empty() ? "top level" : "[" + name_ + "]"; }

    const pt::ptree* tree_;
    std::string name_;
    std::set<std::string> used_;
};

ScenarioKind scenario_from_string(const std::string& s) {
    if (s == "fringe_sweep") return ScenarioKind::fringe_sweep;
    if (s == "morph_map") return ScenarioKind::morph_map;
    if (s == "emccd_frames") return ScenarioKind::emccd_frames;
    if (s == "visibility_suite") return ScenarioKind::visibility_suite;
    if (s == "coincidence_check") return ScenarioKind::coincidence_check;
    throw InvalidArgument("unknown scenario '" + s + "'");
}

GridKind grid_kind_from_string(const std::string& s) {
    if (s == "polar") return GridKind::polar;
    if (s == "cartesian") return GridKind::cartesian;
    throw InvalidArgument("unknown grid kind '" + s + "'");
}

void read_profile(Section& sec, RadialProfile& p) {
    sec.choice("kind", p.kind, &profile_kind_from_string);
    sec.number("waist_mm", p.waist);
    sec.number("annulus_inner_mm", p.annulus_inner);
    sec.number("annulus_outer_mm", p.annulus_outer);
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

bool single_photon_scenario(ScenarioKind k) { return k != ScenarioKind::morph_map; }

}  // namespace

ValidationError::ValidationError(std::vector<Issue> issues)
    : Error([&] {
          std::string msg = "configuration is invalid:";
          for (const auto& i : issues)
              if (i.severity == Issue::Severity::violation) msg += " [" + i.where + "] " + i.message + ";";
          return msg;
      }()),
      issues_(std::move(issues)) {}

std::string to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::fringe_sweep: return "fringe_sweep";
        case ScenarioKind::morph_map: return "morph_map";
        case ScenarioKind::emccd_frames: return "emccd_frames";
        case ScenarioKind::visibility_suite: return "visibility_suite";
        case ScenarioKind::coincidence_check: return "coincidence_check";
    }
    return "?";
}

std::vector<double> AxisSpec::values() const {
    std::vector<double> out;
    if (steps < 1) return out;
    out.reserve(static_cast<std::size_t>(steps));
    if (steps == 1) {
        out.push_back(start);
        return out;
    }
    const double span = stop - start;
    const double step = include_stop ? span / (steps - 1) : span / steps;
    for (int i = 0; i < steps; ++i) out.push_back(start + i * step);
    if (include_stop) out.back() = stop;
    return out;
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& name) {
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigParseError(std::string("config syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }

    ScenarioConfig cfg;
    cfg.name = name;

    static const std::set<std::string> known_sections = {"source",  "interferometer", "grid",       "arm1_profile",
                                                         "arm2_profile", "sweep",     "visibility", "emccd",
                                                         "ring",    "coincidence",    "output"};
    pt::ptree top;
    std::vector<std::pair<std::string, const pt::ptree*>> detector_sections;
    for (const auto& [key, child] : tree) {
        if (child.empty()) {
            top.put_child(pt::ptree::path_type(key, '\0'), child);
        } else if (key.rfind("detector", 0) == 0) {
            detector_sections.emplace_back(key, &child);
        } else if (!known_sections.contains(key)) {
            throw ConfigParseError("unknown section [" + key + "]");
        }
    }
    auto section = [&](const std::string& n) -> Section {
        auto it = tree.find(n);
        return Section(it == tree.not_found() ? nullptr : &it->second, n);
    };

    Section root(&top, "");
    std::string scenario;
    root.text("scenario", scenario);
    if (scenario.empty()) throw ConfigParseError("top level scenario: missing");
    root.choice("scenario", cfg.scenario, &scenario_from_string);
    if (auto s = root.raw("seed")) {
        std::uint64_t seed = 0;
        auto [ptr, ec] = std::from_chars(s->data(), s->data() + s->size(), seed);
        if (ec != std::errc{} || ptr != s->data() + s->size())
            throw ConfigParseError("top level seed: expected a non-negative integer, got '" + *s + "'");
        cfg.seed = seed;
    }
    root.text("name", cfg.name);
    root.reject_unknown();

    Section source = section("source");
    source.number("mu", cfg.mu);
    source.reject_unknown();

    Section ifm = section("interferometer");
    ifm.choice("bs_convention", cfg.mzi.bs_convention, &bs_convention_from_string);
    ifm.boolean("qplate_enabled", cfg.mzi.qplate_enabled);
    ifm.number("q", cfg.mzi.qspec.q);
    ifm.angle("alpha0_rad", cfg.mzi.qspec.alpha0);
    ifm.choice("handedness", cfg.mzi.qspec.handedness, &handedness_from_string);
    ifm.number("h_leakage", cfg.mzi.h_leakage);
    ifm.reject_unknown();

    Section grid = section("grid");
    grid.choice("kind", cfg.mzi.grid.kind, &grid_kind_from_string);
    grid.integer("n_r", cfg.mzi.grid.n_r);
    grid.integer("n_phi", cfg.mzi.grid.n_phi);
    grid.number("r_max_mm", cfg.mzi.grid.r_max);
    grid.integer("n_x", cfg.mzi.grid.n_x);
    grid.integer("n_y", cfg.mzi.grid.n_y);
    grid.number("half_extent_mm", cfg.mzi.grid.half_extent);
    grid.reject_unknown();

    Section arm1 = section("arm1_profile");
    read_profile(arm1, cfg.mzi.lpsp_profile);
    arm1.reject_unknown();
    Section arm2 = section("arm2_profile");
    read_profile(arm2, cfg.mzi.vpsp_profile);
    arm2.reject_unknown();

    Section sweep = section("sweep");
    sweep.angle("theta_start_rad", cfg.theta.start);
    cfg.theta.stop = 2.0 * std::numbers::pi;
    sweep.angle("theta_stop_rad", cfg.theta.stop);
    sweep.integer("theta_steps", cfg.theta.steps);
    sweep.boolean("theta_include_stop", cfg.theta.include_stop);
    cfg.phi.stop = std::numbers::pi / 2.0;
    sweep.angle("phi_start_rad", cfg.phi.start);
    sweep.angle("phi_stop_rad", cfg.phi.stop);
    sweep.integer("phi_steps", cfg.phi.steps);
    sweep.boolean("phi_include_stop", cfg.phi.include_stop);
    sweep.integer("n_trials", cfg.n_trials);
    sweep.choice("port", cfg.port, &port_from_string);
    sweep.reject_unknown();

    for (const auto& [sec_name, child] : detector_sections) {
        Section det_sec(child, sec_name);
        DetectorSpec det;
        det.name = sec_name;
        det_sec.number("r_mm", det.r);
        det_sec.angle("phi_rad", det.phi);
        det_sec.number("aperture_radius_mm", det.aperture_radius);
        det_sec.number("quantum_efficiency", det.quantum_efficiency);
        det_sec.reject_unknown();
        cfg.detectors.push_back(det);
    }

    Section vis = section("visibility");
    vis.angle_list("phi_list_rad", cfg.visibility_phis);
    vis.reject_unknown();

    Section em = section("emccd");
    em.integer("n_frames", cfg.emccd.n_frames);
    em.integer("exposure_trials_per_frame", cfg.emccd.exposure_trials_per_frame);
    em.number("dark_counts_per_pixel_per_frame", cfg.emccd.dark_counts_per_pixel_per_frame);
    em.number("quantum_efficiency", cfg.emccd.quantum_efficiency);
    em.choice("port", cfg.port, &port_from_string);
    em.reject_unknown();

    Section ring = section("ring");
    ring.number("r0_mm", cfg.ring.r0);
    ring.number("dr_mm", cfg.ring.dr);
    ring.integer("n_bins", cfg.ring.n_bins);
    ring.reject_unknown();

    Section co = section("coincidence");
    if (auto s = co.raw("target_ratio")) {
        auto v = parse_number(*s);
        if (!v) throw ConfigParseError("[coincidence] target_ratio: expected a number, got '" + *s + "'");
        cfg.target_ratio = *v;
    }
    co.angle("theta_rad", cfg.coincidence_theta);
    co.number("quantum_efficiency", cfg.coincidence_qe);
    co.integer("n_trials", cfg.n_trials);
    co.reject_unknown();

    Section out = section("output");
    std::string dir;
    out.text("dir", dir);
    if (!dir.empty()) cfg.out_dir = fs::path(dir);
    out.reject_unknown();

    return cfg;
}

ScenarioConfig load_scenario(const fs::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const Error& e) {
        throw ConfigParseError(e.what());
    }
    return parse_scenario(text, path.stem().string());
}

std::string canonical_config(const ScenarioConfig& c) {
    std::ostringstream os;
    auto kv = [&](const std::string& k, const std::string& v) { os << k << " = " << v << '\n'; };
    auto profile = [&](const char* sec, const RadialProfile& p) {
        os << '[' << sec << "]\n";
        kv("kind", to_string(p.kind));
        kv("waist_mm", io::fmt(p.waist));
        kv("annulus_inner_mm", io::fmt(p.annulus_inner));
        kv("annulus_outer_mm", io::fmt(p.annulus_outer));
    };
    auto axis = [&](const std::string& prefix, const AxisSpec& a) {
        kv(prefix + "_start_rad", io::fmt(a.start));
        kv(prefix + "_stop_rad", io::fmt(a.stop));
        kv(prefix + "_steps", std::to_string(a.steps));
        kv(prefix + "_include_stop", a.include_stop ? "true" : "false");
    };

    kv("scenario", to_string(c.scenario));
    kv("seed", c.seed ? std::to_string(*c.seed) : "unset");
    os << "[source]\n";
    kv("mu", io::fmt(c.mu));
    os << "[interferometer]\n";
    kv("bs_convention", to_string(c.mzi.bs_convention));
    kv("qplate_enabled", c.mzi.qplate_enabled ? "true" : "false");
    kv("q", io::fmt(c.mzi.qspec.q));
    kv("alpha0_rad", io::fmt(c.mzi.qspec.alpha0));
    kv("handedness", to_string(c.mzi.qspec.handedness));
    kv("h_leakage", io::fmt(c.mzi.h_leakage));
    os << "[grid]\n";
    const GridSpec& g = c.mzi.grid;
    if (g.kind == GridKind::polar) {
        kv("kind", "polar");
        kv("n_r", std::to_string(g.n_r));
        kv("n_phi", std::to_string(g.n_phi));
        kv("r_max_mm", io::fmt(g.r_max));
    } else {
        kv("kind", "cartesian");
        kv("n_x", std::to_string(g.n_x));
        kv("n_y", std::to_string(g.n_y));
        kv("half_extent_mm", io::fmt(g.half_extent));
    }
    profile("arm1_profile", c.mzi.lpsp_profile);
    profile("arm2_profile", c.mzi.vpsp_profile);
    os << "[sweep]\n";
    axis("theta", c.theta);
    axis("phi", c.phi);
    kv("n_trials", std::to_string(c.n_trials));
    kv("port", to_string(c.port));
    for (const auto& d : c.detectors) {
        os << '[' << d.name << "]\n";
        kv("r_mm", io::fmt(d.r));
        kv("phi_rad", io::fmt(d.phi));
        kv("aperture_radius_mm", io::fmt(d.aperture_radius));
        kv("quantum_efficiency", io::fmt(d.quantum_efficiency));
    }
    os << "[visibility]\n";
    std::string phis;
    for (double p : c.visibility_phis) phis += (phis.empty() ? "" : ", ") + io::fmt(p);
    kv("phi_list_rad", phis);
    os << "[emccd]\n";
    kv("n_frames", std::to_string(c.emccd.n_frames));
    kv("exposure_trials_per_frame", std::to_string(c.emccd.exposure_trials_per_frame));
    kv("dark_counts_per_pixel_per_frame", io::fmt(c.emccd.dark_counts_per_pixel_per_frame));
    kv("quantum_efficiency", io::fmt(c.emccd.quantum_efficiency));
    os << "[ring]\n";
    kv("r0_mm", io::fmt(c.ring.r0));
    kv("dr_mm", io::fmt(c.ring.dr));
    kv("n_bins", std::to_string(c.ring.n_bins));
    os << "[coincidence]\n";
    kv("target_ratio", c.target_ratio ? io::fmt(*c.target_ratio) : "unset");
    kv("theta_rad", io::fmt(c.coincidence_theta));
    kv("quantum_efficiency", io::fmt(c.coincidence_qe));
    return os.str();
}

std::vector<Issue> validate_scenario(const ScenarioConfig& c) {
    std::vector<Issue> issues;
    auto violation = [&](std::string where, std::string msg) {
        issues.push_back({Issue::Severity::violation, std::move(where), std::move(msg)});
    };
    auto warning = [&](std::string where, std::string msg) {
        issues.push_back({Issue::Severity::warning, std::move(where), std::move(msg)});
    };
    auto guarded = [&](const std::string& where, const std::function<void()>& check) {
        try {
            check();
        } catch (const Error& e) {
            violation(where, e.what());
        }
    };

    if (!c.seed) violation("seed", "seed is mandatory (no wall-clock default)");

    bool grid_ok = true;
    guarded("grid", [&] {
        try {
            c.mzi.grid.validate();
        } catch (...) {
            grid_ok = false;
            throw;
        }
    });
    guarded("arm1_profile", [&] { c.mzi.lpsp_profile.validate(); });
    guarded("arm2_profile", [&] { c.mzi.vpsp_profile.validate(); });
    if (c.mzi.lpsp_profile.kind == ProfileKind::vortex)
        violation("arm1_profile", "the linearly polarized arm needs a gaussian or flat_matched profile");
    if (c.mzi.qplate_enabled && c.mzi.vpsp_profile.kind == ProfileKind::gaussian)
        violation("arm2_profile", "the q-plate arm needs a vortex or flat_matched profile");
    if (!(c.mzi.h_leakage >= 0.0 && c.mzi.h_leakage < 1.0))
        violation("interferometer", "h_leakage must lie in [0, 1)");

    const bool needs_mu = c.scenario == ScenarioKind::fringe_sweep || c.scenario == ScenarioKind::visibility_suite ||
                          (c.scenario == ScenarioKind::coincidence_check && !c.target_ratio);
    if (needs_mu && !(c.mu > 0.0)) violation("source", "mu must be positive");
    if (c.scenario == ScenarioKind::emccd_frames && !(c.mu >= 0.0)) violation("source", "mu must be >= 0");
    if (c.scenario == ScenarioKind::coincidence_check && c.target_ratio &&
        !(*c.target_ratio > 0.0 && *c.target_ratio < 0.1))
        violation("coincidence", "target_ratio must lie in (0, 0.1)");

    const double effective_mu = (c.scenario == ScenarioKind::coincidence_check && c.target_ratio &&
                                 *c.target_ratio > 0.0 && *c.target_ratio < 0.1)
                                    ? calibrate_mu(*c.target_ratio)
                                    : c.mu;
    if (single_photon_scenario(c.scenario) && effective_mu >= SourceSpec::kSinglePhotonLimit)
        warning("source", "mu = " + io::fmt(effective_mu) + " is outside single-photon regime (mu < 0.1)");

    const bool fits = c.scenario == ScenarioKind::fringe_sweep || c.scenario == ScenarioKind::visibility_suite;
    if (c.scenario != ScenarioKind::coincidence_check) {
        if (fits && c.theta.steps < 5) violation("sweep", "theta_steps must be >= 5 for a fringe fit");
        if (c.theta.steps < 1) violation("sweep", "theta_steps must be >= 1");
        if (c.theta.stop < c.theta.start) violation("sweep", "theta_stop_rad must not be below theta_start_rad");
    }
    if (c.scenario == ScenarioKind::morph_map) {
        if (c.phi.steps < 1) violation("sweep", "phi_steps must be >= 1");
        if (c.phi.stop < c.phi.start) violation("sweep", "phi_stop_rad must not be below phi_start_rad");
    }
    if (c.scenario != ScenarioKind::morph_map && c.scenario != ScenarioKind::emccd_frames && c.n_trials < 1)
        violation("sweep", "n_trials must be >= 1");

    if (fits) {
        if (c.detectors.empty()) violation("detector", "at least one [detector...] section is required");
        if (grid_ok)
            for (const auto& d : c.detectors) guarded(d.name, [&] { d.validate(c.mzi.grid); });
    }
    if (c.scenario == ScenarioKind::visibility_suite) {
        if (c.visibility_phis.empty()) violation("visibility", "phi_list_rad must list at least one angle");
        if (grid_ok && !c.detectors.empty()) {
            for (double phi : c.visibility_phis) {
                DetectorSpec d = c.detectors.front();
                d.phi = phi;
                d.name += "@phi=" + io::fmt(phi);
                guarded(c.detectors.front().name, [&] { d.validate(c.mzi.grid); });
            }
        }
    }

    if (c.scenario == ScenarioKind::emccd_frames) {
        guarded("emccd", [&] { c.emccd.validate(); });
        if (c.mzi.grid.kind != GridKind::cartesian) violation("grid", "emccd_frames needs a cartesian pixel grid");
        if (c.ring.n_bins < 4) violation("ring", "n_bins must be >= 4");
        if (!(c.ring.r0 > 0.0) || !(c.ring.dr > 0.0)) violation("ring", "r0_mm and dr_mm must be positive");
        if (grid_ok && (c.ring.r0 - 0.5 * c.ring.dr < 0.0 ||
                        c.ring.r0 + 0.5 * c.ring.dr > c.mzi.grid.inscribed_radius()))
            violation("ring", "annulus is not inside the grid");
    }
    return issues;
}

bool has_violations(const std::vector<Issue>& issues) {
    return std::any_of(issues.begin(), issues.end(),
                       [](const Issue& i) { return i.severity == Issue::Severity::violation; });
}

RunManifest run_scenario(const ScenarioConfig& c, const fs::path& out_dir, const RunOptions& options) {
    auto issues = validate_scenario(c);
    if (has_violations(issues)) throw ValidationError(std::move(issues));

    RunManifest manifest;
    manifest.scenario = to_string(c.scenario);
    manifest.tool_version = QDC_VERSION;
    manifest.started_at = utc_now();
    manifest.seed = *c.seed;
    const std::string canonical = canonical_config(c);
    manifest.config_hash = io::sha256_hex(canonical);
    const std::uint64_t seed = *c.seed;

    fs::create_directories(out_dir);
    std::vector<std::string> emitted;
    auto emit = [&](const std::string& name, const std::function<void(std::ostream&)>& write) {
        std::ofstream os(out_dir / name, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot write '" + (out_dir / name).string() + "'");
        write(os);
        if (!os) throw Error("write failed for '" + (out_dir / name).string() + "'");
        emitted.push_back(name);
    };

    emit("effective_config.ini", [&](std::ostream& os) { os << canonical; });

    const std::vector<double> thetas = c.theta.values();
    switch (c.scenario) {
        case ScenarioKind::fringe_sweep: {
            std::vector<VisibilityRow> fits;
            for (std::size_t k = 0; k < c.detectors.size(); ++k) {
                const DetectorSpec& d = c.detectors[k];
                const auto records = mmf_sweep(c.mzi, d, thetas, c.mu, c.n_trials, detector_seed(seed, k), options);
                emit("fringe_" + d.name + ".csv", [&](std::ostream& os) { write_count_csv(os, records); });
                VisibilityRow row;
                row.phi = d.phi;
                row.fit = fit_fringe(singles_fringe(records));
                row.visibility = row.fit.visibility;
                row.visibility_stderr = row.fit.visibility_stderr;
                fits.push_back(row);
            }
            emit("fringe_visibility.csv", [&](std::ostream& os) { write_visibility_csv(os, fits); });
            break;
        }
        case ScenarioKind::morph_map: {
            const auto phis = c.phi.values();
            const MorphMap m = morph_map(thetas, phis, c.port);
            emit("morph_map.csv", [&](std::ostream& os) { write_morph_csv(os, m); });
            std::vector<VisibilityRow> rows;
            for (std::size_t j = 0; j < phis.size(); ++j) {
                if (thetas.size() < 5) break;
                const FringeFit f = m.fit_column(j);
                rows.push_back({phis[j], f.visibility, f.visibility_stderr, f});
            }
            if (!rows.empty()) emit("morph_visibility.csv", [&](std::ostream& os) { write_visibility_csv(os, rows); });
            break;
        }
        case ScenarioKind::emccd_frames: {
            std::ostringstream ring_morph;
            ring_morph << "theta,phi,intensity,n_pixels\n";
            std::vector<double> bin_centres;
            for (std::size_t i = 0; i < thetas.size(); ++i) {
                MziConfig mzi = c.mzi;
                mzi.theta = thetas[i];
                const std::uint64_t frame_seed = stream_seed(seed, 0xF4A3E000ull, i);
                const CountFrame frame = emccd_accumulate(mzi, c.emccd, c.port, c.mu, frame_seed, options);
                char stem[32];
                std::snprintf(stem, sizeof stem, "frame_%03zu", i);
                emit(std::string(stem) + ".pgm", [&](std::ostream& os) { write_frame_pgm(os, frame); });
                emit(std::string(stem) + ".meta", [&](std::ostream& os) {
                    const GridSpec& g = c.mzi.grid;
                    os << "[frame]\n"
                       << "grid_kind = cartesian\n"
                       << "n_x = " << g.n_x << "\n"
                       << "n_y = " << g.n_y << "\n"
                       << "half_extent_mm = " << io::fmt(g.half_extent) << "\n"
                       << "row_order = top_is_max_y\n"
                       << "theta_rad = " << io::fmt(thetas[i]) << "\n"
                       << "port = " << to_string(c.port) << "\n"
                       << "n_frames = " << c.emccd.n_frames << "\n"
                       << "exposure_trials_per_frame = " << c.emccd.exposure_trials_per_frame << "\n"
                       << "mu = " << io::fmt(c.mu) << "\n"
                       << "seed = " << seed << "\n"
                       << "frame_seed = " << frame_seed << "\n"
                       << "photon_counts = " << frame.photon_counts << "\n"
                       << "dark_counts = " << frame.dark_counts << "\n"
                       << "spec_hash = " << manifest.config_hash << "\n";
                });
                const auto bins = ring_scan(frame.as_scalar(), c.ring.r0, c.ring.dr, c.ring.n_bins);
                emit(std::string("ring_") + (stem + 6) + ".csv",
                     [&](std::ostream& os) { write_ring_scan_csv(os, bins); });
                bin_centres.clear();
                for (const auto& b : bins) {
                    bin_centres.push_back(b.phi_center);
                    io::write_row(ring_morph, {io::fmt(thetas[i]), io::fmt(b.phi_center),
                                               b.mean ? io::fmt(*b.mean) : std::string{}, std::to_string(b.n_pixels)});
                }
            }
            emit("ring_morph.csv", [&](std::ostream& os) { os << ring_morph.str(); });
            const MorphMap theory = morph_map(thetas, bin_centres, c.port);
            emit("morph_map.csv", [&](std::ostream& os) { write_morph_csv(os, theory); });
            break;
        }
        case ScenarioKind::visibility_suite: {
            const auto rows = experimental_visibility_suite(c.mzi, c.detectors.front(), c.visibility_phis, thetas,
                                                            c.mu, c.n_trials, seed, options);
            emit("visibility_suite.csv", [&](std::ostream& os) { write_visibility_csv(os, rows); });
            break;
        }
        case ScenarioKind::coincidence_check: {
            const double mu = c.target_ratio ? calibrate_mu(*c.target_ratio) : c.mu;
            const CountRecord rec =
                bucket_counts(c.mzi, c.coincidence_theta, mu, c.n_trials, seed, c.coincidence_qe, options);
            const CountRecord recs[] = {rec};
            emit("coincidence_counts.csv", [&](std::ostream& os) { write_count_csv(os, recs); });
            emit("coincidence_summary.csv", [&](std::ostream& os) {
                os << "mu,target_ratio,measured_ratio,n_trials\n";
                io::write_row(os, {io::fmt(mu), io::fmt(c.target_ratio.value_or(0.5 * mu)),
                                   io::fmt(coincidence_ratio(rec)), std::to_string(rec.n_trials)});
            });
            break;
        }
    }

    for (const auto& name : emitted) {
        manifest.files.push_back({name, io::sha256_file(out_dir / name), fs::file_size(out_dir / name)});
    }
    manifest.finished_at = utc_now();

    nlohmann::json j;
    j["tool"] = "qdcsim";
    j["tool_version"] = manifest.tool_version;
    j["scenario"] = manifest.scenario;
    j["config_hash"] = manifest.config_hash;
    j["seed"] = manifest.seed;
    j["started_at"] = manifest.started_at;
    j["finished_at"] = manifest.finished_at;
    j["warnings"] = nlohmann::json::array();
    for (const auto& i : issues) j["warnings"].push_back({{"where", i.where}, {"message", i.message}});
    j["files"] = nlohmann::json::array();
    for (const auto& f : manifest.files) j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    std::ofstream(out_dir / "manifest.json", std::ios::binary | std::ios::trunc) << j.dump(2) << '\n';
    return manifest;
}

std::vector<std::string> verify_manifest(const fs::path& dir) {
    const auto j = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
    std::vector<std::string> bad;
    for (const auto& f : j.at("files")) {
        const auto name = f.at("path").get<std::string>();
        const fs::path p = dir / name;
        if (!fs::exists(p) || io::sha256_file(p) != f.at("sha256").get<std::string>()) bad.push_back(name);
    }
    return bad;
}

}  // namespace qdc
