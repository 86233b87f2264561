#include "qdc/io.hpp"
#include "qdc/scenario.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace qdc;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = QDC_SOURCE_DIR;

bool has_issue(const std::vector<Issue>& issues, Issue::Severity sev, const std::string& needle) {
    return std::any_of(issues.begin(), issues.end(), [&](const Issue& i) {
        return i.severity == sev && (i.message.find(needle) != std::string::npos || i.where == needle);
    });
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("qdc_test_scenario_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string small_fringe(const std::string& extra = "") {
    return "scenario = fringe_sweep\nseed = 5\n"
           "[grid]\nkind = polar\nn_r = 16\nn_phi = 32\nr_max_mm = 2\n"
           "[sweep]\ntheta_steps = 8\nn_trials = 2000\n"
           "[detector_a]\nr_mm = 1\nphi_rad = pi/2\n" +
           extra;
}

}  // namespace

TEST_CASE("parse defaults and sections") {
    const auto c = parse_scenario(small_fringe(), "demo");
    CHECK(c.name == "demo");
    CHECK(c.scenario == ScenarioKind::fringe_sweep);
    REQUIRE(c.seed.has_value());
    CHECK(*c.seed == 5);
    CHECK(c.mu == 0.05);
    CHECK(c.mzi.grid.kind == GridKind::polar);
    CHECK(c.mzi.grid.n_phi == 32);
    CHECK(c.theta.steps == 8);
    CHECK(c.theta.stop == doctest::Approx(2 * pi));
    REQUIRE(c.detectors.size() == 1);
    CHECK(c.detectors[0].name == "detector_a");
    CHECK(c.detectors[0].phi == doctest::Approx(pi / 2));
    CHECK(c.mzi.qspec.handedness == Handedness::minus);
    CHECK_FALSE(c.out_dir.has_value());

    const auto named = parse_scenario(small_fringe() + "[output]\ndir = somewhere\n");
    REQUIRE(named.out_dir.has_value());
    CHECK(named.out_dir->string() == "somewhere");
}

TEST_CASE("angle forms") {
    const std::pair<const char*, double> cases[] = {
        {"pi/2", pi / 2}, {"-3*pi/4", -3 * pi / 4}, {"2*pi", 2 * pi}, {"1.5", 1.5}, {"0.5*pi", pi / 2}, {"pi", pi}};
    for (const auto& [text, value] : cases) {
        const auto c = parse_scenario(small_fringe() + "[coincidence]\ntheta_rad = " + text + "\n");
        CHECK(c.coincidence_theta == doctest::Approx(value).epsilon(1e-15));
    }
    CHECK_THROWS_AS(parse_scenario(small_fringe() + "[coincidence]\ntheta_rad = tau\n"), ConfigParseError);

    const auto v = parse_scenario("scenario = visibility_suite\nseed = 1\n[visibility]\nphi_list_rad = 0, pi/4 ,pi/2\n");
    REQUIRE(v.visibility_phis.size() == 3);
    CHECK(v.visibility_phis[1] == doctest::Approx(pi / 4));
}

TEST_CASE("parse errors") {
    CHECK_THROWS_WITH_AS(parse_scenario("scenario = morph_map\n[grid]\nn_rr = 3\n"), doctest::Contains("n_rr"),
                         ConfigParseError);
    CHECK_THROWS_WITH_AS(parse_scenario(small_fringe() + "[gird]\nkind = polar\n"), doctest::Contains("[gird]"),
                         ConfigParseError);
    CHECK_THROWS_AS(parse_scenario("seed = 1\n"), ConfigParseError);
    CHECK_THROWS_AS(parse_scenario("scenario = spin_echo\nseed = 1\n"), ConfigParseError);
    CHECK_THROWS_AS(parse_scenario("scenario = morph_map\nseed = -4\n"), ConfigParseError);
    CHECK_THROWS_AS(parse_scenario("scenario = morph_map\n[sweep\n"), ConfigParseError);
    CHECK_THROWS_AS(parse_scenario(small_fringe() + "[grid]\nkind = polar\n"), ConfigParseError);
    CHECK_THROWS_AS(parse_scenario("scenario = morph_map\n[sweep]\ntheta_steps = 3.5\n"), ConfigParseError);
    CHECK_THROWS_AS(parse_scenario("scenario = morph_map\n[interferometer]\nqplate_enabled = maybe\n"),
                    ConfigParseError);
    CHECK_THROWS_AS(load_scenario(kSource / "tests" / "data" / "does_not_exist.cfg"), ConfigParseError);
}

TEST_CASE("axis values") {
    CHECK(AxisSpec{0.0, 1.0, 4, false}.values() == std::vector<double>{0.0, 0.25, 0.5, 0.75});
    CHECK(AxisSpec{0.0, 1.0, 5, true}.values() == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    CHECK(AxisSpec{2.0, 2.0, 1, true}.values() == std::vector<double>{2.0});
}

TEST_CASE("validation") {
    SUBCASE("a clean config has no issues") { CHECK(validate_scenario(parse_scenario(small_fringe())).empty()); }
    SUBCASE("seed is mandatory") {
        const auto c = parse_scenario("scenario = morph_map\n");
        CHECK(has_issue(validate_scenario(c), Issue::Severity::violation, "seed"));
    }
    SUBCASE("bright source warns but runs") {
        const auto issues = validate_scenario(parse_scenario(small_fringe() + "[source]\nmu = 0.5\n"));
        CHECK(has_issue(issues, Issue::Severity::warning, "outside single-photon regime"));
        CHECK_FALSE(has_violations(issues));
    }
    SUBCASE("too few theta steps for a fit") {
        auto text = small_fringe();
        text.replace(text.find("theta_steps = 8"), 15, "theta_steps = 3");
        CHECK(has_issue(validate_scenario(parse_scenario(text)), Issue::Severity::violation, "theta_steps"));
    }
    SUBCASE("detector outside the grid names the detector") {
        const auto issues = validate_scenario(parse_scenario(small_fringe() + "[detector_far]\nr_mm = 1.9\n"));
        CHECK(has_issue(issues, Issue::Severity::violation, "detector_far"));
    }
    SUBCASE("ring and grid checks for EMCCD frames") {
        const std::string base = "scenario = emccd_frames\nseed = 3\n[grid]\nkind = cartesian\nn_x = 32\nn_y = 32\n";
        CHECK(validate_scenario(parse_scenario(base)).empty());
        CHECK(has_issue(validate_scenario(parse_scenario(base + "[ring]\nn_bins = 2\n")), Issue::Severity::violation,
                        "n_bins must be >= 4"));
        CHECK(has_issue(validate_scenario(parse_scenario(base + "[ring]\nr0_mm = 2.95\n")),
                        Issue::Severity::violation, "annulus is not inside the grid"));
        CHECK(has_issue(validate_scenario(parse_scenario("scenario = emccd_frames\nseed = 3\n")),
                        Issue::Severity::violation, "cartesian"));
    }
    SUBCASE("profile and coincidence checks") {
        CHECK(has_issue(validate_scenario(parse_scenario(small_fringe() + "[arm1_profile]\nkind = vortex\n")),
                        Issue::Severity::violation, "arm1_profile"));
        CHECK(has_issue(
            validate_scenario(parse_scenario("scenario = coincidence_check\nseed = 1\n[coincidence]\ntarget_ratio = 0.2\n")),
            Issue::Severity::violation, "target_ratio must lie in (0, 0.1)"));
    }
    SUBCASE("run_scenario refuses invalid configs") {
        const auto c = parse_scenario(small_fringe() + "[detector_far]\nr_mm = 1.9\n");
        CHECK_THROWS_AS(run_scenario(c, scratch("invalid")), ValidationError);
    }
}

TEST_CASE("bundled configs parse and validate") {
    for (const char* name : {"fig3a", "fig3b", "fig4", "morph", "visibility", "coincidence"}) {
        INFO(name);
        const auto c = load_scenario(kSource / "configs" / (std::string(name) + ".cfg"));
        CHECK(c.name == name);
        CHECK_FALSE(has_violations(validate_scenario(c)));
    }
    const auto bad = load_scenario(kSource / "tests" / "data" / "bad_aperture.cfg");
    CHECK(has_violations(validate_scenario(bad)));
}

TEST_CASE("canonical config hash tracks the effective configuration") {
    const auto a = parse_scenario(small_fringe());
    const auto b = parse_scenario(small_fringe() + "[interferometer]\nh_leakage = 0\n");
    auto c = a;
    c.seed = 6;
    CHECK(canonical_config(a) == canonical_config(b));
    CHECK(io::sha256_hex(canonical_config(a)) != io::sha256_hex(canonical_config(c)));
}

TEST_CASE("run, manifest and byte-identical rerun") {
    const auto cfg = parse_scenario(small_fringe(), "small");
    const auto dir1 = scratch("run1");
    const auto dir2 = scratch("run2");
    const auto m1 = run_scenario(cfg, dir1, RunOptions{1});
    const auto m2 = run_scenario(cfg, dir2, RunOptions{3, 500});
    CHECK(m1.scenario == "fringe_sweep");
    CHECK(m1.seed == 5);
    CHECK(m1.config_hash == m2.config_hash);
    REQUIRE(m1.files.size() == 3);
    CHECK(fs::exists(dir1 / "fringe_detector_a.csv"));
    CHECK(fs::exists(dir1 / "fringe_visibility.csv"));
    CHECK(fs::exists(dir1 / "manifest.json"));
    CHECK(verify_manifest(dir1).empty());

    // Chunk size is part of the stream layout; the same chunking reproduces bytes.
    const auto dir3 = scratch("run3");
    run_scenario(cfg, dir3, RunOptions{4});
    for (const auto& f : m1.files) CHECK(io::read_file(dir1 / f.path) == io::read_file(dir3 / f.path));

    std::ofstream(dir1 / "fringe_visibility.csv", std::ios::app) << "tampered\n";
    const auto bad = verify_manifest(dir1);
    REQUIRE(bad.size() == 1);
    CHECK(bad[0] == "fringe_visibility.csv");

    const std::string csv = io::read_file(dir3 / "fringe_detector_a.csv");
    CHECK(csv.rfind("theta,singles_ep1,singles_ep2,coincidences,n_trials,seed\n", 0) == 0);
    CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("each scenario kind writes its outputs") {
    SUBCASE("morph_map") {
        const auto dir = scratch("morph");
        run_scenario(parse_scenario("scenario = morph_map\nseed = 1\n[sweep]\ntheta_steps = 8\nphi_steps = 5\n"), dir);
        const std::string text = io::read_file(dir / "morph_map.csv");
        CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 8 * 5);
        CHECK(fs::exists(dir / "morph_visibility.csv"));
    }
    SUBCASE("emccd_frames") {
        const auto dir = scratch("emccd");
        run_scenario(parse_scenario("scenario = emccd_frames\nseed = 2\n[grid]\nkind = cartesian\nn_x = 32\nn_y = 32\n"
                                    "[sweep]\ntheta_steps = 2\n[emccd]\nexposure_trials_per_frame = 5000\n"
                                    "[ring]\nn_bins = 8\n"),
                     dir);
        for (const char* f : {"frame_000.pgm", "frame_000.meta", "ring_000.csv", "frame_001.pgm", "ring_morph.csv",
                              "morph_map.csv"})
            CHECK(fs::exists(dir / f));
        const std::string meta = io::read_file(dir / "frame_001.meta");
        CHECK(meta.find("spec_hash = ") != std::string::npos);
        CHECK(meta.find("theta_rad = 3.14159") != std::string::npos);
        CHECK(verify_manifest(dir).empty());
    }
    SUBCASE("coincidence_check") {
        const auto dir = scratch("coinc");
        run_scenario(parse_scenario("scenario = coincidence_check\nseed = 3\n[grid]\nn_r = 8\nn_phi = 16\n"
                                    "[coincidence]\ntarget_ratio = 0.01\nn_trials = 100000\n"),
                     dir);
        const std::string text = io::read_file(dir / "coincidence_summary.csv");
        CHECK(text.rfind("mu,target_ratio,measured_ratio,n_trials\n0.02,0.01,", 0) == 0);
    }
    SUBCASE("visibility_suite") {
        const auto dir = scratch("vis");
        run_scenario(parse_scenario("scenario = visibility_suite\nseed = 4\n[grid]\nn_r = 16\nn_phi = 32\n"
                                    "[sweep]\ntheta_steps = 8\nn_trials = 2000\n[detector]\nr_mm = 1\n"
                                    "[visibility]\nphi_list_rad = 0, pi/2\n"),
                     dir);
        const std::string text = io::read_file(dir / "visibility_suite.csv");
        CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    }
}
