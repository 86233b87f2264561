#include "qdc/errors.hpp"
#include "qdc/interferometer.hpp"
#include "qdc/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace qdc;
using std::numbers::pi;

namespace {

RadialProfile flat() { return {ProfileKind::flat_matched, 1.0, 0.5, 1.5}; }

MziConfig flat_config(GridSpec grid) {
    MziConfig c;
    c.lpsp_profile = flat();
    c.vpsp_profile = flat();
    c.grid = grid;
    return c;
}

// EP1 amplitude (e^{i theta} H + P(phi)) / 2 of a unit photon, squared component by component.
double oracle_ep1(double theta, double phi) {
    const double re = std::cos(theta) + std::sin(phi);
    const double im = std::sin(theta);
    const double v = std::cos(phi);
    return (re * re + im * im + v * v) / 4.0;
}

}  // namespace

TEST_CASE("analytic_prob examples") {
    CHECK(analytic_prob(0.0, pi / 2, Port::ep1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(analytic_prob(pi, pi / 2, Port::ep1) == doctest::Approx(0.0).epsilon(1e-15));
    for (double t : {0.0, 0.5, 2.0, 4.0}) CHECK(analytic_prob(t, 0.0, Port::ep1) == 0.5);
    CHECK(analytic_prob(0.0, pi / 4, Port::ep1) == doctest::Approx(oracle_ep1(0.0, pi / 4)));
}

TEST_CASE("property: port complementarity and the direct-arithmetic oracle") {
    for (int i = 0; i < 64; ++i) {
        for (int j = 0; j < 64; ++j) {
            const double theta = 2 * pi * i / 64;
            const double phi = 2 * pi * j / 64;
            const double p1 = analytic_prob(theta, phi, Port::ep1);
            REQUIRE(p1 + analytic_prob(theta, phi, Port::ep2) == 1.0);
            REQUIRE(std::abs(p1 - oracle_ep1(theta, phi)) <= 1e-12);
        }
    }
}

TEST_CASE("visibility_ideal") {
    CHECK(visibility_ideal(0.0) == 0.0);
    CHECK(visibility_ideal(pi / 2) == 1.0);
    CHECK(visibility_ideal(pi / 6) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("run_mzi examples") {
    SUBCASE("balanced interferometer without the q-plate") {
        MziConfig c;
        c.grid = GridSpec::polar(32, 32, 3.0);
        c.qplate_enabled = false;
        for (auto conv : {BsConvention::hadamard, BsConvention::symmetric}) {
            c.bs_convention = conv;
            const auto out = run_mzi(c);
            CHECK(out.ep2.total_prob() <= 1e-12);
            CHECK(std::abs(out.ep1.total_prob() - 1.0) <= 1e-9);
        }
    }
    SUBCASE("flat_matched cell at phi = pi/4") {
        auto c = flat_config(GridSpec::polar(16, 64, 2.0));
        const auto map = conditional_prob_map(run_mzi(c), Port::ep1);
        // iphi = 8 of 64 is phi = pi/4; ir = 6 has r = 0.8125, inside the annulus.
        CHECK(map.values[6 * 64 + 8] == doctest::Approx((1.0 + std::sqrt(2.0) / 2.0) / 2.0).epsilon(1e-12));
        CHECK(std::isnan(map.values[0]));  // r < annulus_inner carries nothing
    }
    SUBCASE("unitarity with default profiles") {
        MziConfig c;
        c.grid = GridSpec::polar(64, 64, 3.0);
        for (double t : {0.0, 1.0, 2.5}) {
            c.theta = t;
            const auto out = run_mzi(c);
            CHECK(std::abs(out.ep1.total_prob() + out.ep2.total_prob() - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("property: oracle equivalence on a 16x16 lattice") {
    const auto spec = GridSpec::polar(32, 256, 2.0);
    const MziModel model(flat_config(spec));
    const Grid& grid = *model.grid();
    for (int i = 0; i < 16; ++i) {
        const double theta = 2 * pi * i / 16;
        const auto out = model.exit_fields(theta);
        const auto ep1 = conditional_prob_map(out, Port::ep1);
        const auto ep2 = conditional_prob_map(out, Port::ep2);
        // 16 azimuths: every 16th column of the 256-column grid.
        for (int ir = 0; ir < spec.n_r; ++ir) {
            for (int j = 0; j < 16; ++j) {
                const std::size_t k = static_cast<std::size_t>(ir) * 256 + 16 * j;
                if (std::isnan(ep1.values[k])) continue;
                const double phi = grid[k].phi;
                REQUIRE(std::abs(ep1.values[k] - analytic_prob(theta, phi, Port::ep1)) <= 1e-9);
                REQUIRE(std::abs(ep2.values[k] - analytic_prob(theta, phi, Port::ep2)) <= 1e-9);
            }
        }
    }
}

TEST_CASE("property: beamsplitter convention does not change any probability") {
    MziConfig a;
    a.grid = GridSpec::polar(48, 64, 3.0);
    a.h_leakage = 0.05;
    MziConfig b = a;
    b.bs_convention = BsConvention::symmetric;
    const MziModel ma(a), mb(b);
    for (double t : {0.0, 0.3, 1.7, pi, 5.0}) {
        const auto oa = ma.exit_fields(t);
        const auto ob = mb.exit_fields(t);
        double worst = 0.0;
        for (std::size_t i = 0; i < oa.ep1.size(); ++i) {
            worst = std::max(worst, std::abs(oa.ep1[i].norm2() - ob.ep1[i].norm2()));
            worst = std::max(worst, std::abs(oa.ep2[i].norm2() - ob.ep2[i].norm2()));
        }
        CHECK(worst <= 1e-12);
    }
}

TEST_CASE("property: fitted visibility of noiseless sweeps follows |sin phi|") {
    // n_phi = 240 puts pi/6, pi/4, pi/3 and pi/2 on cell centres.
    const MziModel model(flat_config(GridSpec::polar(8, 240, 2.0)));
    const int ir = 4;
    std::vector<std::vector<FringeSample>> sweeps(5);
    const int columns[] = {0, 20, 30, 40, 60};
    for (int i = 0; i < 24; ++i) {
        const double theta = 2 * pi * i / 24;
        const auto map = conditional_prob_map(model.exit_fields(theta), Port::ep1);
        for (int c = 0; c < 5; ++c) sweeps[c].push_back({theta, map.values[ir * 240 + columns[c]]});
    }
    const double phis[] = {0.0, pi / 6, pi / 4, pi / 3, pi / 2};
    for (int c = 0; c < 5; ++c) {
        const auto fit = fit_fringe(sweeps[c]);
        CHECK(std::abs(fit.visibility - visibility_ideal(phis[c])) <= 1e-6);
    }
}

TEST_CASE("property: flat_matched probability is independent of r") {
    const auto spec = GridSpec::polar(64, 32, 2.0);
    const MziModel model(flat_config(spec));
    for (double t : {0.2, 1.1, 2.9}) {
        const auto map = conditional_prob_map(model.exit_fields(t), Port::ep1);
        for (int ip = 0; ip < spec.n_phi; ++ip) {
            double lo = 2.0, hi = -1.0;
            for (int ir = 0; ir < spec.n_r; ++ir) {
                const double v = map.values[static_cast<std::size_t>(ir) * spec.n_phi + ip];
                if (std::isnan(v)) continue;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            REQUIRE(hi >= lo);
            CHECK(hi - lo <= 1e-12);
        }
    }
}

TEST_CASE("property: doubling resolution leaves exit-port totals unchanged") {
    for (auto kind : {GridKind::polar, GridKind::cartesian}) {
        MziConfig coarse;
        coarse.grid = kind == GridKind::polar ? GridSpec::polar(64, 64, 3.0) : GridSpec::cartesian(64, 64, 3.0);
        coarse.qplate_enabled = false;
        MziConfig fine = coarse;
        fine.grid = kind == GridKind::polar ? GridSpec::polar(128, 128, 3.0) : GridSpec::cartesian(128, 128, 3.0);
        MziConfig vcoarse = coarse, vfine = fine;
        vcoarse.qplate_enabled = vfine.qplate_enabled = true;
        for (double t : {0.0, 0.8, 2.0}) {
            coarse.theta = fine.theta = vcoarse.theta = vfine.theta = t;
            const auto a = run_mzi(coarse), b = run_mzi(fine);
            CHECK(std::abs(a.ep1.total_prob() - b.ep1.total_prob()) <= 1e-6);
            CHECK(std::abs(a.ep2.total_prob() - b.ep2.total_prob()) <= 1e-6);
            const auto c = run_mzi(vcoarse), d = run_mzi(vfine);
            CHECK(std::abs(c.ep1.total_prob() - d.ep1.total_prob()) <= 1e-6);
            CHECK(std::abs(c.ep2.total_prob() - d.ep2.total_prob()) <= 1e-6);
        }
    }
}

TEST_CASE("property: polar and cartesian grids agree on ring probabilities") {
    // Rings of 0.5 mm; 288 radial cells put every ring edge on a cell edge.
    MziConfig polar;
    polar.grid = GridSpec::polar(288, 256, 3.0);
    polar.theta = 0.7;
    MziConfig cart = polar;
    cart.grid = GridSpec::cartesian(256, 256, 3.0);
    const auto p = run_mzi(polar);
    const auto c = run_mzi(cart);
    for (Port port : {Port::ep1, Port::ep2}) {
        const auto pp = polar_partition(*p.ep1.grid_ptr(), 6, 1);
        const auto cp = polar_partition(*c.ep1.grid_ptr(), 6, 1);
        const auto pr = bin_values(intensity_map(p.port(port)).values, pp, 6);
        const auto cr = bin_values(intensity_map(c.port(port)).values, cp, 6);
        for (int k = 0; k < 6; ++k) {
            if (pr[k] < 1e-6) continue;  // the outermost ring is empty to double precision
            INFO("ring " << k << " polar " << pr[k] << " cartesian " << cr[k]);
            CHECK(std::abs(pr[k] - cr[k]) <= 0.01 * pr[k]);
        }
    }
}

TEST_CASE("morph_map") {
    std::vector<double> thetas, phis;
    for (int i = 0; i < 41; ++i) thetas.push_back(2 * pi * i / 40);
    for (int j = 0; j <= 32; ++j) phis.push_back(-pi / 2 + pi * j / 32);
    const auto m = morph_map(thetas, phis, Port::ep1);
    REQUIRE(m.values.size() == thetas.size() * phis.size());

    const std::size_t j0 = 16, jhalf = 32;  // phi = 0, phi = pi/2
    REQUIRE(phis[j0] == 0.0);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        CHECK(std::abs(m.at(i, j0) - 0.5) <= 1e-12);
        CHECK(std::abs(m.at(i, jhalf) - (1.0 + std::cos(thetas[i])) / 2.0) <= 1e-12);
        // Opposite azimuths are complementary.
        for (std::size_t j = 0; j < phis.size(); ++j) CHECK(std::abs(m.at(i, j) + m.at(i, phis.size() - 1 - j) - 1.0) <= 1e-12);
        for (std::size_t j = 1; j < phis.size(); ++j)
            CHECK(std::abs(m.at(i, j) - m.at(i, j - 1)) <= (pi / 2) * (phis[j] - phis[j - 1]));
    }
    for (double v : m.values) CHECK((v >= 0.0 && v <= 1.0));

    const auto f = m.fit_column(jhalf);
    CHECK(f.visibility == doctest::Approx(1.0).epsilon(1e-9));

    std::ostringstream os;
    write_morph_csv(os, m);
    const std::string text = os.str();
    CHECK(text.rfind("theta,phi,prob\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + static_cast<long>(m.values.size()));

    const std::vector<double> empty;
    const std::vector<double> unsorted{1.0, 0.0};
    CHECK_THROWS_AS(morph_map(empty, phis, Port::ep1), InvalidArgument);
    CHECK_THROWS_AS(morph_map(thetas, unsorted, Port::ep1), InvalidArgument);
}

TEST_CASE("ring_scan") {
    const auto grid = make_grid(GridSpec::cartesian(256, 256, 2.0));

    SUBCASE("uniform frame") {
        const ScalarGrid frame{grid, std::vector<double>(grid->size(), 3.25)};
        const auto bins = ring_scan(frame, 1.0, 0.2, 64);
        REQUIRE(bins.size() == 64);
        for (const auto& b : bins) {
            REQUIRE(b.mean.has_value());
            CHECK(std::abs(*b.mean - 3.25) <= 1e-12);
            CHECK(b.n_pixels > 0);
        }
    }

    SUBCASE("EP1 at theta = 0 follows the bin-averaged oracle") {
        auto c = flat_config(GridSpec::cartesian(256, 256, 2.0));
        const auto frame = intensity_map(run_mzi(c).ep1);
        const auto bins = ring_scan(frame, 1.0, 0.2, 64);
        std::vector<double> ratio;
        const double w = 2 * pi / 64;
        for (std::size_t k = 0; k < bins.size(); ++k) {
            const double a = (k - 0.5) * w, b = a + w;
            // Mean of (1 + sin phi)/2 over the sector.
            const double oracle = 0.5 * (1.0 + (std::cos(a) - std::cos(b)) / w);
            if (oracle < 0.05) continue;  // near phi = 3pi/2 the relative error is meaningless
            ratio.push_back(*bins[k].mean / oracle);
        }
        double mean = 0.0;
        for (double r : ratio) mean += r;
        mean /= static_cast<double>(ratio.size());
        for (double r : ratio) CHECK(std::abs(r / mean - 1.0) <= 0.02);

        const auto four = ring_scan(frame, 1.0, 0.2, 4);
        const auto peak = std::max_element(four.begin(), four.end(),
                                           [](const RingBin& x, const RingBin& y) { return *x.mean < *y.mean; });
        CHECK(peak - four.begin() == 1);
        CHECK(peak->phi_center == doctest::Approx(pi / 2));
        const auto peak64 = std::max_element(bins.begin(), bins.end(),
                                             [](const RingBin& x, const RingBin& y) { return *x.mean < *y.mean; });
        CHECK(peak64 - bins.begin() == 16);
    }

    SUBCASE("empty sectors are reported as missing") {
        const auto coarse = make_grid(GridSpec::cartesian(8, 8, 2.0));
        const ScalarGrid frame{coarse, std::vector<double>(coarse->size(), 1.0)};
        const auto bins = ring_scan(frame, 1.0, 0.1, 64);
        const auto missing = std::count_if(bins.begin(), bins.end(), [](const RingBin& b) { return !b.mean; });
        CHECK(missing > 0);
        std::ostringstream os;
        write_ring_scan_csv(os, bins);
        CHECK(os.str().rfind("phi,intensity,n_pixels\n", 0) == 0);
        CHECK(os.str().find(",,0\n") != std::string::npos);
    }

    SUBCASE("errors") {
        const ScalarGrid frame{grid, std::vector<double>(grid->size(), 1.0)};
        CHECK_THROWS_AS(ring_scan(frame, 1.0, 0.2, 2), InvalidArgument);
        CHECK_THROWS_AS(ring_scan(frame, 0.0, 0.2, 8), InvalidArgument);
        CHECK_THROWS_AS(ring_scan(frame, 1.0, -0.1, 8), InvalidArgument);
        CHECK_THROWS_AS(ring_scan(frame, 1.95, 0.2, 8), AnnulusOutsideGridError);
        CHECK_THROWS_AS(ring_scan(frame, 0.05, 0.2, 8), AnnulusOutsideGridError);
    }
}
