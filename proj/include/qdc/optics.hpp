#pragma once

#include "qdc/polarization.hpp"

#include <numbers>
#include <string>
#include <utility>

namespace qdc {

/// 2x2 complex operator in the {H, V} basis.
struct JonesOperator {
    Complex m00{1.0, 0.0};
    Complex m01{0.0, 0.0};
    Complex m10{0.0, 0.0};
    Complex m11{1.0, 0.0};

    static JonesOperator identity() { return {}; }

    JonesVector apply(const JonesVector& v) const {
        return {m00 * v.h + m01 * v.v, m10 * v.h + m11 * v.v};
    }
    JonesOperator adjoint() const {
        return {std::conj(m00), std::conj(m10), std::conj(m01), std::conj(m11)};
    }
};

JonesOperator operator*(const JonesOperator& a, const JonesOperator& b);
inline JonesVector operator*(const JonesOperator& m, const JonesVector& v) { return m.apply(v); }

/// Largest entrywise deviation of M^dagger M from the identity.
double unitarity_error(const JonesOperator& m);

enum class Handedness { plus, minus };

/**
 * Q-plate geometry. The local fast axis sits at chi = s*q*phi + alpha0 with
 * s = +1/-1 for plus/minus handedness.
 *
 * The defaults (q = 1/2, minus, alpha0 = pi/4) turn |H> into
 * sin(phi)|H> + cos(phi)|V> at every azimuth.
 */
struct QplateSpec {
    double q = 0.5;
    double alpha0 = std::numbers::pi / 4.0;
    Handedness handedness = Handedness::minus;

    double axis_angle(double phi) const;
    bool operator==(const QplateSpec&) const = default;
};

/// Attenuated coherent source: mean photon number per trial.
struct SourceSpec {
    double mu = 0.05;

    static constexpr double kSinglePhotonLimit = 0.1;
    bool single_photon_regime() const { return mu < kSinglePhotonLimit; }
};

enum class BsConvention {
    hadamard,   ///< ((a+b)/sqrt2, (a-b)/sqrt2)
    symmetric,  ///< ((a+ib)/sqrt2, (ia+b)/sqrt2)
};

std::string to_string(BsConvention c);
BsConvention bs_convention_from_string(const std::string& s);
std::string to_string(Handedness h);
Handedness handedness_from_string(const std::string& s);

/// 50:50 beamsplitter acting on the two input modes, per polarization component.
std::pair<JonesVector, JonesVector> bs_5050(const JonesVector& in1, const JonesVector& in2,
                                            BsConvention convention = BsConvention::hadamard);

/// Multiplies both components by e^{i theta}.
JonesVector phase_shift(const JonesVector& v, double theta);

/// Half-wave retarder with its axis at chi(phi):
/// [[cos 2chi, sin 2chi], [sin 2chi, -cos 2chi]]. Unitary, Hermitian and involutory.
JonesOperator qplate_operator(const QplateSpec& spec, double phi);

/// M1/M2 fold mirrors: the common reflection phase cancels between the arms.
JonesVector mirror(const JonesVector& v);

}  // namespace qdc
