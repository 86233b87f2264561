/**
 * @file polarization.hpp
 * @brief Jones-vector algebra in the {H, V} basis.
 *
 * The global e^{-i omega t} factor of a monochromatic mode multiplies every
 * amplitude identically, so it is dropped from the data model entirely.
 */
#pragma once

#include <complex>

namespace qdc {

using Complex = std::complex<double>;

/// Local polarization state: amplitudes of the horizontal and vertical components.
struct JonesVector {
    Complex h{0.0, 0.0};
    Complex v{0.0, 0.0};

    constexpr JonesVector() = default;
    constexpr JonesVector(Complex h_, Complex v_) : h(h_), v(v_) {}

    /// |h|^2 + |v|^2
    double norm2() const { return std::norm(h) + std::norm(v); }
    double norm() const;

    JonesVector& operator+=(const JonesVector& o) {
        h += o.h;
        v += o.v;
        return *this;
    }
    JonesVector& operator-=(const JonesVector& o) {
        h -= o.h;
        v -= o.v;
        return *this;
    }
    JonesVector& operator*=(Complex s) {
        h *= s;
        v *= s;
        return *this;
    }
};

inline JonesVector operator+(JonesVector a, const JonesVector& b) { return a += b; }
inline JonesVector operator-(JonesVector a, const JonesVector& b) { return a -= b; }
inline JonesVector operator*(Complex s, JonesVector a) { return a *= s; }
inline JonesVector operator*(JonesVector a, Complex s) { return a *= s; }
inline JonesVector operator*(double s, JonesVector a) { return a *= Complex(s, 0.0); }

JonesVector ket_H();
JonesVector ket_V();

/// Local polarization of the vector-polarized mode at azimuth phi:
/// sin(phi)|H> + cos(phi)|V>.
JonesVector ket_P(double phi);

/// Hermitian inner product <a|b>, conjugate-linear in the first argument.
Complex inner(const JonesVector& a, const JonesVector& b);

/// Unit-norm copy of v; the zero vector is returned unchanged.
JonesVector normalized(const JonesVector& v);

/// (e^{i theta}|H> + |V>)/sqrt(2): the two arms stay distinguishable.
JonesVector particle_state(double theta);

/// (e^{i theta} + 1)|H>/sqrt(2). Not normalized: its norm is
/// sqrt(2)|cos(theta/2)| and it vanishes at theta = pi.
JonesVector wave_state(double theta);

/// Unnormalized exit-port state e^{i theta}|H> + |P(phi)> seen at one point.
JonesVector exit_point_state(double phi, double theta);

enum class WpConvention {
    projection,  ///< C1 = <particle|psi>, C2 = <wave|psi>
    oblique,     ///< exact solve of psi = C1 |particle> + C2 |wave>
};

struct WpDecomposition {
    Complex c1;
    Complex c2;
    WpConvention convention = WpConvention::oblique;
    /// || C1 |particle> + C2 |wave> - psi ||
    double residual_norm = 0.0;
};

/**
 * Split psi over the (non-orthogonal) particle/wave pair at phase theta.
 *
 * The oblique convention is the one that reconstructs psi; the projection
 * convention returns the bare inner products and generally leaves a residual.
 * Throws DegenerateBasisError for the oblique convention when
 * |cos(theta/2)| < 1e-9, where |wave> vanishes.
 */
WpDecomposition decompose_wp(const JonesVector& psi, double theta,
                             WpConvention convention = WpConvention::oblique);

}  // namespace qdc
