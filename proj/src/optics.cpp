#include "qdc/optics.hpp"

#include "qdc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qdc {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
constexpr Complex kI{0.0, 1.0};
}  // namespace

JonesOperator operator*(const JonesOperator& a, const JonesOperator& b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
            a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}

double unitarity_error(const JonesOperator& m) {
    const JonesOperator p = m.adjoint() * m;
    return std::max({std::abs(p.m00 - 1.0), std::abs(p.m01), std::abs(p.m10), std::abs(p.m11 - 1.0)});
}

double QplateSpec::axis_angle(double phi) const {
    const double s = handedness == Handedness::plus ? 1.0 : -1.0;
    return s * q * phi + alpha0;
}

std::string to_string(BsConvention c) { return c == BsConvention::hadamard ? "hadamard" : "symmetric"; }

BsConvention bs_convention_from_string(const std::string& s) {
    if (s == "hadamard") return BsConvention::hadamard;
    if (s == "symmetric") return BsConvention::symmetric;
    throw InvalidArgument("unknown beamsplitter convention '" + s + "'");
}

std::string to_string(Handedness h) { return h == Handedness::plus ? "plus" : "minus"; }

Handedness handedness_from_string(const std::string& s) {
    if (s == "plus") return Handedness::plus;
    if (s == "minus") return Handedness::minus;
    throw InvalidArgument("unknown q-plate handedness '" + s + "'");
}

std::pair<JonesVector, JonesVector> bs_5050(const JonesVector& in1, const JonesVector& in2,
                                            BsConvention convention) {
    if (convention == BsConvention::hadamard) {
        return {kInvSqrt2 * (in1 + in2), kInvSqrt2 * (in1 - in2)};
    }
    return {kInvSqrt2 * (in1 + kI * in2), kInvSqrt2 * (kI * in1 + in2)};
}

JonesVector phase_shift(const JonesVector& v, double theta) { return std::polar(1.0, theta) * v; }

JonesOperator qplate_operator(const QplateSpec& spec, double phi) {
    const double two_chi = 2.0 * spec.axis_angle(phi);
    const double c = std::cos(two_chi);
    const double s = std::sin(two_chi);
    return {Complex(c, 0.0), Complex(s, 0.0), Complex(s, 0.0), Complex(-c, 0.0)};
}

JonesVector mirror(const JonesVector& v) { return v; }

}  // namespace qdc
