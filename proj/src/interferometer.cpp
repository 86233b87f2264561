#include "qdc/interferometer.hpp"

#include "qdc/errors.hpp"
#include "qdc/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace qdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_sorted_nonempty(std::span<const double> axis, const char* name) {
    if (axis.empty()) throw InvalidArgument(std::string("morph_map: ") + name + " axis is empty");
    if (!std::is_sorted(axis.begin(), axis.end()))
        throw InvalidArgument(std::string("morph_map: ") + name + " axis is not sorted");
}

}  // namespace

std::string to_string(Port p) { return p == Port::ep1 ? "EP1" : "EP2"; }

Port port_from_string(const std::string& s) {
    if (s == "EP1" || s == "ep1") return Port::ep1;
    if (s == "EP2" || s == "ep2") return Port::ep2;
    throw InvalidArgument("unknown exit port '" + s + "'");
}

MziModel::MziModel(const MziConfig& config) : MziModel(config, make_grid(config.grid)) {}

MziModel::MziModel(const MziConfig& config, GridPtr grid)
    : config_(config),
      grid_(std::move(grid)),
      arm1_(make_lpsp(grid_, config.lpsp_profile)),
      arm2_(arm1_) {
    if (!(grid_->spec() == config.grid)) throw GridMismatchError("MziModel: grid does not match config.grid");

    // BS1 transfer amplitudes for a unit input in port 1.
    const auto [t1, t2] = bs_5050(ket_H(), JonesVector{}, config.bs_convention);
    const TransverseField arm2_mode = config.qplate_enabled
                                          ? make_vpsp(grid_, config.vpsp_profile, config.qspec, config.h_leakage)
                                          : arm1_;
    arm1_ = arm1_.scaled(t1.h);
    arm2_ = arm2_mode.scaled(t2.h);

    // M1 and M2 apply the same reflection to both arms.
    std::vector<JonesVector> a1(arm1_.values().begin(), arm1_.values().end());
    std::vector<JonesVector> a2(arm2_.values().begin(), arm2_.values().end());
    for (auto& v : a1) v = mirror(v);
    for (auto& v : a2) v = mirror(v);
    arm1_ = TransverseField(grid_, std::move(a1));
    arm2_ = TransverseField(grid_, std::move(a2));
}

ExitFields MziModel::exit_fields(double theta) const {
    const std::size_t n = grid_->size();
    std::vector<JonesVector> out1(n);
    std::vector<JonesVector> out2(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto [o1, o2] = bs_5050(phase_shift(arm1_[i], theta), arm2_[i], config_.bs_convention);
        out1[i] = o1;
        out2[i] = o2;
    }
    TransverseField f1(grid_, std::move(out1));
    TransverseField f2(grid_, std::move(out2));
    // The symmetric splitter puts the in-phase sum on its second output.
    if (config_.bs_convention == BsConvention::symmetric) return {std::move(f2), std::move(f1)};
    return {std::move(f1), std::move(f2)};
}

ExitFields run_mzi(const MziConfig& config) { return MziModel(config).exit_fields(config.theta); }

double analytic_prob(double theta, double phi, Port port) {
    const double fringe = std::sin(phi) * std::cos(theta);
    return port == Port::ep1 ? 0.5 * (1.0 + fringe) : 0.5 * (1.0 - fringe);
}

ScalarGrid conditional_prob_map(const ExitFields& fields, Port port) {
    const TransverseField& a = fields.port(port);
    const TransverseField& other = fields.port(port == Port::ep1 ? Port::ep2 : Port::ep1);
    ScalarGrid out{a.grid_ptr(), std::vector<double>(a.size())};
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double pa = a[i].norm2();
        const double total = pa + other[i].norm2();
        out.values[i] = total > 0.0 ? pa / total : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

double visibility_ideal(double phi) { return std::abs(std::sin(phi)); }

FringeFit MorphMap::fit_column(std::size_t j_phi) const {
    std::vector<FringeSample> samples;
    samples.reserve(theta_axis.size());
    for (std::size_t i = 0; i < theta_axis.size(); ++i) samples.push_back({theta_axis[i], at(i, j_phi)});
    return fit_fringe(samples);
}

MorphMap morph_map(std::span<const double> theta_axis, std::span<const double> phi_axis, Port port) {
    require_sorted_nonempty(theta_axis, "theta");
    require_sorted_nonempty(phi_axis, "phi");
    MorphMap m;
    m.theta_axis.assign(theta_axis.begin(), theta_axis.end());
    m.phi_axis.assign(phi_axis.begin(), phi_axis.end());
    m.values.reserve(theta_axis.size() * phi_axis.size());
    for (double t : theta_axis)
        for (double p : phi_axis) m.values.push_back(analytic_prob(t, p, port));
    return m;
}

void write_morph_csv(std::ostream& os, const MorphMap& m) {
    os << "theta,phi,prob\n";
    for (std::size_t i = 0; i < m.theta_axis.size(); ++i)
        for (std::size_t j = 0; j < m.phi_axis.size(); ++j)
            io::write_row(os, {io::fmt(m.theta_axis[i]), io::fmt(m.phi_axis[j]), io::fmt(m.at(i, j))});
}

std::vector<RingBin> ring_scan(const ScalarGrid& frame, double r0, double dr, int n_bins) {
    if (n_bins < 4) throw InvalidArgument("ring_scan: n_bins must be >= 4");
    if (!(r0 > 0.0) || !(dr > 0.0)) throw InvalidArgument("ring_scan: r0 and dr must be positive");
    const double r_lo = r0 - 0.5 * dr;
    const double r_hi = r0 + 0.5 * dr;
    const double extent = frame.grid->spec().inscribed_radius();
    if (r_lo < 0.0 || r_hi > extent) {
        throw AnnulusOutsideGridError("ring_scan: annulus [" + io::fmt(r_lo) + ", " + io::fmt(r_hi) +
                                      "] mm is not inside the grid (radius " + io::fmt(extent) + " mm)");
    }

    const double width = kTwoPi / n_bins;
    std::vector<double> sums(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(n_bins), 0);
    const Grid& grid = *frame.grid;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Cell& c = grid[i];
        if (c.r < r_lo || c.r >= r_hi) continue;
        // Sector k is centred on k * width, so sector 0 straddles phi = 0.
        auto bin = static_cast<std::size_t>((c.phi + 0.5 * width) / width);
        if (bin >= static_cast<std::size_t>(n_bins)) bin = 0;
        sums[bin] += frame.values[i];
        ++counts[bin];
    }

    std::vector<RingBin> out;
    out.reserve(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
        const auto k = static_cast<std::size_t>(b);
        RingBin bin{b * width, std::nullopt, counts[k]};
        if (counts[k] > 0) bin.mean = sums[k] / static_cast<double>(counts[k]);
        out.push_back(bin);
    }
    return out;
}

void write_ring_scan_csv(std::ostream& os, std::span<const RingBin> bins) {
    os << "phi,intensity,n_pixels\n";
    for (const auto& b : bins) {
        const std::string mean = b.mean ? io::fmt(*b.mean) : std::string{};
        io::write_row(os, {io::fmt(b.phi_center), mean, std::to_string(b.n_pixels)});
    }
}

}  // namespace qdc
