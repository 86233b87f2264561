#include "qdc/errors.hpp"
#include "qdc/polarization.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qdc;
using std::numbers::pi;

namespace {

bool close(Complex a, Complex b, double tol) { return std::abs(a - b) <= tol; }

bool close(const JonesVector& a, const JonesVector& b, double tol) {
    return close(a.h, b.h, tol) && close(a.v, b.v, tol);
}

// Generic 2x2 complex solve by Cramer's rule: columns p, w; right-hand side psi.
std::pair<Complex, Complex> cramer(const JonesVector& p, const JonesVector& w, const JonesVector& psi) {
    const Complex det = p.h * w.v - w.h * p.v;
    return {(psi.h * w.v - w.h * psi.v) / det, (p.h * psi.v - psi.h * p.v) / det};
}

}  // namespace

TEST_CASE("basis kets") {
    CHECK(close(ket_H(), JonesVector{1.0, 0.0}, 0.0));
    CHECK(close(ket_V(), JonesVector{0.0, 1.0}, 0.0));
    CHECK(inner(ket_H(), ket_V()) == Complex(0.0, 0.0));
    CHECK(ket_H().norm2() == 1.0);
}

TEST_CASE("ket_P follows sin(phi)|H> + cos(phi)|V>") {
    CHECK(close(ket_P(0.0), ket_V(), 1e-15));
    CHECK(close(ket_P(pi / 2), ket_H(), 1e-15));
    const double s = std::sqrt(2.0) / 2.0;
    CHECK(close(ket_P(pi / 4), JonesVector{s, s}, 1e-15));
}

TEST_CASE("inner product") {
    CHECK(close(inner(ket_P(0.0), ket_P(pi / 2)), 0.0, 1e-15));
    for (double phi : {0.0, 0.3, 1.2, 2.9, -4.0}) {
        CHECK(close(inner(ket_H(), ket_P(phi)), std::sin(phi), 1e-15));
        CHECK(close(inner(ket_P(phi), ket_P(phi)), 1.0, 1e-15));
    }
    // Conjugate-linear in the first slot.
    const JonesVector a{Complex(0.0, 1.0), 0.0};
    CHECK(close(inner(a, ket_H()), Complex(0.0, -1.0), 0.0));
    const Complex self = inner(JonesVector{Complex(1.0, 2.0), Complex(-3.0, 0.5)},
                               JonesVector{Complex(1.0, 2.0), Complex(-3.0, 0.5)});
    CHECK(self.imag() == 0.0);
    CHECK(self.real() == doctest::Approx(14.25));
}

TEST_CASE("particle and wave states") {
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(close(particle_state(0.0), JonesVector{r, r}, 1e-15));
    CHECK(close(particle_state(pi), JonesVector{-r, r}, 1e-15));
    CHECK(particle_state(1.234).norm() == doctest::Approx(1.0).epsilon(1e-15));

    CHECK(close(wave_state(0.0), JonesVector{std::sqrt(2.0), 0.0}, 1e-15));
    CHECK(wave_state(pi).norm() < 1e-15);
    CHECK(wave_state(pi / 2).norm() == doctest::Approx(1.0).epsilon(1e-14));
    for (double t : {0.0, 0.7, 2.0, 3.0})
        CHECK(wave_state(t).norm() == doctest::Approx(std::sqrt(2.0) * std::abs(std::cos(t / 2))).epsilon(1e-14));
}

TEST_CASE("decompose_wp hand-solved cases") {
    // psi = (1, 1) at theta = 0 is pure particle.
    auto d = decompose_wp(JonesVector{1.0, 1.0}, 0.0, WpConvention::oblique);
    CHECK(close(d.c1, std::sqrt(2.0), 1e-14));
    CHECK(close(d.c2, 0.0, 1e-14));
    CHECK(d.residual_norm <= 1e-14);

    // psi = (2, 0) at theta = 0 is pure wave.
    d = decompose_wp(JonesVector{2.0, 0.0}, 0.0, WpConvention::oblique);
    CHECK(close(d.c1, 0.0, 1e-14));
    CHECK(close(d.c2, std::sqrt(2.0), 1e-14));

    // Projection convention returns the bare inner products.
    d = decompose_wp(JonesVector{1.0, 1.0}, 0.0, WpConvention::projection);
    CHECK(close(d.c1, std::sqrt(2.0), 1e-14));
    CHECK(close(d.c2, std::sqrt(2.0), 1e-14));  // <(sqrt2, 0)|(1, 1)>
    CHECK(d.convention == WpConvention::projection);
    // The non-orthogonal pair does not reconstruct psi from projections.
    CHECK(d.residual_norm > 0.1);
}

TEST_CASE("decompose_wp refuses the degenerate basis") {
    CHECK_THROWS_AS(decompose_wp(JonesVector{1.0, 1.0}, pi, WpConvention::oblique), DegenerateBasisError);
    CHECK_THROWS_AS(decompose_wp(JonesVector{1.0, 1.0}, -pi, WpConvention::oblique), DegenerateBasisError);
    // The projection convention is defined everywhere.
    CHECK_NOTHROW(decompose_wp(JonesVector{1.0, 1.0}, pi, WpConvention::projection));
}

TEST_CASE("property: P(phi) is a unit vector orthogonal to P(phi + pi/2)") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> angle(-10.0, 10.0);
    for (int i = 0; i < 1000; ++i) {
        const double phi = angle(rng);
        CHECK(std::abs(inner(ket_P(phi), ket_P(phi)) - 1.0) <= 1e-12);
        CHECK(std::abs(inner(ket_P(phi), ket_P(phi + pi / 2))) <= 1e-12);
    }
}

TEST_CASE("property: oblique split agrees with Cramer's rule and reconstructs psi") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> amp(-3.0, 3.0);
    std::uniform_real_distribution<double> angle(-pi, pi);
    int checked = 0;
    while (checked < 1000) {
        const double theta = angle(rng);
        if (std::abs(std::cos(theta / 2)) <= 0.1) continue;
        const JonesVector psi{Complex(amp(rng), amp(rng)), Complex(amp(rng), amp(rng))};
        const auto d = decompose_wp(psi, theta);
        const auto [c1, c2] = cramer(particle_state(theta), wave_state(theta), psi);
        CHECK(close(d.c1, c1, 1e-10 * psi.norm()));
        CHECK(close(d.c2, c2, 1e-10 * psi.norm()));
        CHECK(d.residual_norm <= 1e-10 * psi.norm());
        ++checked;
    }
}

TEST_CASE("property: exit-point state is pure particle at phi=0 and pure wave at phi=pi/2") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> angle(-pi, pi);
    int checked = 0;
    while (checked < 1000) {
        const double theta = angle(rng);
        if (std::abs(std::cos(theta / 2)) <= 0.1) continue;
        const auto retained = decompose_wp(exit_point_state(0.0, theta), theta);
        CHECK(std::abs(retained.c2) <= 1e-10);
        CHECK(std::abs(retained.c1 - std::sqrt(2.0)) <= 1e-10);
        const auto erased = decompose_wp(exit_point_state(pi / 2, theta), theta);
        CHECK(std::abs(erased.c1) <= 1e-10);
        CHECK(erased.residual_norm <= 1e-10 * exit_point_state(pi / 2, theta).norm());
        ++checked;
    }
}
