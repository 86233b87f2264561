#include "qdc/field.hpp"

#include "qdc/errors.hpp"
#include "qdc/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace qdc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

double wrap_azimuth(double phi) {
    if (phi < 0.0) phi += kTwoPi;
    if (phi >= kTwoPi) phi -= kTwoPi;
    return phi;
}

void require_same_grid(const TransverseField& a, const TransverseField& b, const char* what) {
    if (a.grid_ptr() != b.grid_ptr() && !(a.grid().spec() == b.grid().spec())) {
        throw GridMismatchError(std::string(what) + ": fields live on different grids (" +
                                a.grid().spec().describe() + " vs " + b.grid().spec().describe() + ")");
    }
}

// Scale so that sum |v|^2 area == 1.
void normalize_in_place(const Grid& grid, std::vector<JonesVector>& values, const char* what) {
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) total += values[i].norm2() * grid[i].area;
    if (!(total > 0.0)) {
        throw InvalidArgument(std::string(what) + ": profile carries no probability on this grid");
    }
    const double s = 1.0 / std::sqrt(total);
    for (auto& v : values) v *= Complex(s, 0.0);
}

}  // namespace

GridSpec GridSpec::polar(int n_r, int n_phi, double r_max_mm) {
    GridSpec g;
    g.kind = GridKind::polar;
    g.n_r = n_r;
    g.n_phi = n_phi;
    g.r_max = r_max_mm;
    return g;
}

GridSpec GridSpec::cartesian(int n_x, int n_y, double half_extent_mm) {
    GridSpec g;
    g.kind = GridKind::cartesian;
    g.n_x = n_x;
    g.n_y = n_y;
    g.half_extent = half_extent_mm;
    return g;
}

std::size_t GridSpec::cell_count() const {
    return kind == GridKind::polar ? static_cast<std::size_t>(n_r) * static_cast<std::size_t>(n_phi)
                                   : static_cast<std::size_t>(n_x) * static_cast<std::size_t>(n_y);
}

double GridSpec::inscribed_radius() const { return kind == GridKind::polar ? r_max : half_extent; }

void GridSpec::validate() const {
    if (kind == GridKind::polar) {
        if (n_r < 4 || n_phi < 4) throw InvalidArgument("polar grid needs n_r, n_phi >= 4");
        if (!(r_max > 0.0) || !std::isfinite(r_max)) throw InvalidArgument("polar grid needs r_max > 0");
    } else {
        if (n_x < 4 || n_y < 4) throw InvalidArgument("cartesian grid needs n_x, n_y >= 4");
        if (!(half_extent > 0.0) || !std::isfinite(half_extent))
            throw InvalidArgument("cartesian grid needs half_extent > 0");
    }
}

std::string GridSpec::describe() const {
    std::ostringstream ss;
    if (kind == GridKind::polar)
        ss << "polar " << n_r << "x" << n_phi << " r_max=" << r_max << "mm";
    else
        ss << "cartesian " << n_x << "x" << n_y << " half_extent=" << half_extent << "mm";
    return ss.str();
}

bool GridSpec::operator==(const GridSpec& o) const {
    if (kind != o.kind) return false;
    if (kind == GridKind::polar) return n_r == o.n_r && n_phi == o.n_phi && r_max == o.r_max;
    return n_x == o.n_x && n_y == o.n_y && half_extent == o.half_extent;
}

Grid::Grid(const GridSpec& spec) : spec_(spec) {
    spec_.validate();
    cells_.reserve(spec_.cell_count());
    if (spec_.kind == GridKind::polar) {
        const double dr = spec_.r_max / spec_.n_r;
        const double dphi = kTwoPi / spec_.n_phi;
        for (int ir = 0; ir < spec_.n_r; ++ir) {
            const double r = (ir + 0.5) * dr;
            for (int ip = 0; ip < spec_.n_phi; ++ip) {
                const double phi = ip * dphi;
                cells_.push_back({r * std::cos(phi), r * std::sin(phi), r, phi, r * dr * dphi});
            }
        }
    } else {
        const double dx = 2.0 * spec_.half_extent / spec_.n_x;
        const double dy = 2.0 * spec_.half_extent / spec_.n_y;
        for (int iy = 0; iy < spec_.n_y; ++iy) {
            // Snap the odd-n centre row/column onto exactly zero.
            const double y = (2 * iy + 1 == spec_.n_y) ? 0.0 : -spec_.half_extent + (iy + 0.5) * dy;
            for (int ix = 0; ix < spec_.n_x; ++ix) {
                const double x = (2 * ix + 1 == spec_.n_x) ? 0.0 : -spec_.half_extent + (ix + 0.5) * dx;
                const double r = std::hypot(x, y);
                const double phi = r == 0.0 ? 0.0 : wrap_azimuth(std::atan2(y, x));
                cells_.push_back({x, y, r, phi, dx * dy});
            }
        }
    }
}

GridPtr make_grid(const GridSpec& spec) { return std::make_shared<const Grid>(spec); }

std::string to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::gaussian: return "gaussian";
        case ProfileKind::vortex: return "vortex";
        case ProfileKind::flat_matched: return "flat_matched";
    }
    return "?";
}

ProfileKind profile_kind_from_string(const std::string& s) {
    if (s == "gaussian") return ProfileKind::gaussian;
    if (s == "vortex") return ProfileKind::vortex;
    if (s == "flat_matched") return ProfileKind::flat_matched;
    throw InvalidArgument("unknown radial profile '" + s + "'");
}

double RadialProfile::amplitude(double r) const {
    switch (kind) {
        case ProfileKind::gaussian: return std::exp(-(r * r) / (waist * waist));
        case ProfileKind::vortex:
            return std::numbers::sqrt2 * r / waist * std::exp(-(r * r) / (waist * waist));
        case ProfileKind::flat_matched: return (r >= annulus_inner && r <= annulus_outer) ? 1.0 : 0.0;
    }
    return 0.0;
}

void RadialProfile::validate() const {
    if (kind == ProfileKind::flat_matched) {
        if (!(annulus_inner >= 0.0) || !(annulus_outer > annulus_inner))
            throw InvalidArgument("flat_matched profile needs 0 <= annulus_inner < annulus_outer");
    } else if (!(waist > 0.0) || !std::isfinite(waist)) {
        throw InvalidArgument("radial profile needs waist > 0");
    }
}

TransverseField::TransverseField(GridPtr grid, std::vector<JonesVector> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw InvalidArgument("TransverseField: null grid");
    if (values_.size() != grid_->size())
        throw InvalidArgument("TransverseField: value count does not match grid size");
}

double TransverseField::total_prob() const {
    double total = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) total += cell_prob(i);
    return total;
}

TransverseField TransverseField::scaled(Complex s) const {
    std::vector<JonesVector> out(values_);
    for (auto& v : out) v *= s;
    return {grid_, std::move(out)};
}

double ScalarGrid::sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

double ScalarGrid::max() const {
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

TransverseField make_lpsp(const GridPtr& grid, const RadialProfile& profile) {
    if (profile.kind == ProfileKind::vortex)
        throw InvalidArgument("make_lpsp: the linearly polarized arm needs a gaussian or flat_matched profile");
    profile.validate();
    std::vector<JonesVector> values(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
        values[i] = profile.amplitude((*grid)[i].r) * ket_H();
    }
    normalize_in_place(*grid, values, "make_lpsp");
    return {grid, std::move(values)};
}

TransverseField make_vpsp(const GridPtr& grid, const RadialProfile& profile, const QplateSpec& qspec,
                          double h_leakage) {
    if (profile.kind == ProfileKind::gaussian)
        throw InvalidArgument("make_vpsp: the vector-polarized arm needs a vortex or flat_matched profile");
    if (!(h_leakage >= 0.0) || !(h_leakage < 1.0))
        throw InvalidArgument("make_vpsp: h_leakage must lie in [0, 1)");
    profile.validate();
    std::vector<JonesVector> values(grid->size());
    for (std::size_t i = 0; i < grid->size(); ++i) {
        const Cell& c = (*grid)[i];
        JonesVector pol = qplate_operator(qspec, c.phi) * ket_H();
        if (h_leakage > 0.0) pol = normalized((1.0 - h_leakage) * pol + h_leakage * ket_H());
        values[i] = profile.amplitude(c.r) * pol;
    }
    normalize_in_place(*grid, values, "make_vpsp");
    return {grid, std::move(values)};
}

std::pair<TransverseField, TransverseField> superpose_at_bs2(const TransverseField& f1,
                                                             const TransverseField& f2, double theta) {
    require_same_grid(f1, f2, "superpose_at_bs2");
    const Complex phase = std::polar(1.0, theta);
    std::vector<JonesVector> ep1(f1.size());
    std::vector<JonesVector> ep2(f1.size());
    for (std::size_t i = 0; i < f1.size(); ++i) {
        const JonesVector a = phase * f1[i];
        ep1[i] = kInvSqrt2 * (a + f2[i]);
        ep2[i] = kInvSqrt2 * (a - f2[i]);
    }
    return {TransverseField(f1.grid_ptr(), std::move(ep1)), TransverseField(f1.grid_ptr(), std::move(ep2))};
}

ScalarGrid intensity_map(const TransverseField& f) {
    ScalarGrid out{f.grid_ptr(), std::vector<double>(f.size())};
    for (std::size_t i = 0; i < f.size(); ++i) out.values[i] = f.cell_prob(i);
    return out;
}

void write_field_csv(std::ostream& os, const TransverseField& f) {
    const bool polar = f.grid().spec().kind == GridKind::polar;
    if (polar)
        os << "r,phi,h2,v2,total\n";
    else
        os << "x,y,phi,h2,v2,total\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Cell& c = f.grid()[i];
        const double h2 = std::norm(f[i].h);
        const double v2 = std::norm(f[i].v);
        const std::string total = io::fmt((h2 + v2) * c.area);
        if (polar)
            io::write_row(os, {io::fmt(c.r), io::fmt(c.phi), io::fmt(h2), io::fmt(v2), total});
        else
            io::write_row(os, {io::fmt(c.x), io::fmt(c.y), io::fmt(c.phi), io::fmt(h2), io::fmt(v2), total});
    }
}

void write_intensity_pgm(std::ostream& os, const ScalarGrid& g) {
    const GridSpec& spec = g.grid->spec();
    if (spec.kind != GridKind::cartesian)
        throw InvalidArgument("write_intensity_pgm: only cartesian grids map onto pixels");
    const double peak = g.max();
    std::vector<std::uint16_t> pixels(g.values.size());
    for (int iy = 0; iy < spec.n_y; ++iy) {
        const int row = spec.n_y - 1 - iy;
        for (int ix = 0; ix < spec.n_x; ++ix) {
            const double v = g.values[static_cast<std::size_t>(iy) * spec.n_x + ix];
            const double scaled = peak > 0.0 ? std::clamp(v / peak, 0.0, 1.0) * 65535.0 : 0.0;
            pixels[static_cast<std::size_t>(row) * spec.n_x + ix] =
                static_cast<std::uint16_t>(std::lround(scaled));
        }
    }
    io::write_pgm16(os, spec.n_x, spec.n_y, 65535, pixels);
}

}  // namespace qdc
