#include "qdc/polarization.hpp"

#include "qdc/errors.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace qdc {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
constexpr double kDegenerateTol = 1e-9;
}  // namespace

double JonesVector::norm() const { return std::sqrt(norm2()); }

JonesVector ket_H() { return {Complex(1.0, 0.0), Complex(0.0, 0.0)}; }

JonesVector ket_V() { return {Complex(0.0, 0.0), Complex(1.0, 0.0)}; }

JonesVector ket_P(double phi) { return {Complex(std::sin(phi), 0.0), Complex(std::cos(phi), 0.0)}; }

Complex inner(const JonesVector& a, const JonesVector& b) {
    return std::conj(a.h) * b.h + std::conj(a.v) * b.v;
}

JonesVector normalized(const JonesVector& v) {
    const double n = v.norm();
    if (n == 0.0) return v;
    return (1.0 / n) * v;
}

JonesVector particle_state(double theta) {
    return {std::polar(kInvSqrt2, theta), Complex(kInvSqrt2, 0.0)};
}

JonesVector wave_state(double theta) {
    return {(std::polar(1.0, theta) + 1.0) * kInvSqrt2, Complex(0.0, 0.0)};
}

JonesVector exit_point_state(double phi, double theta) {
    return std::polar(1.0, theta) * ket_H() + ket_P(phi);
}

WpDecomposition decompose_wp(const JonesVector& psi, double theta, WpConvention convention) {
    const JonesVector particle = particle_state(theta);
    const JonesVector wave = wave_state(theta);

    WpDecomposition out;
    out.convention = convention;
    if (convention == WpConvention::projection) {
        out.c1 = inner(particle, psi);
        out.c2 = inner(wave, psi);
    } else {
        // [particle.h wave.h; particle.v 0] [c1; c2] = psi; |det| = |cos(theta/2)|.
        if (std::abs(std::cos(0.5 * theta)) < kDegenerateTol) {
            throw DegenerateBasisError("decompose_wp: particle/wave basis is degenerate at theta = " +
                                       std::to_string(theta));
        }
        out.c1 = psi.v / particle.v;
        out.c2 = (psi.h - out.c1 * particle.h) / wave.h;
    }
    out.residual_norm = (out.c1 * particle + out.c2 * wave - psi).norm();
    return out;
}

}  // namespace qdc
