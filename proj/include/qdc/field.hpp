/**
 * @file field.hpp
 * @brief Discretized transverse mode of the single photon.
 *
 * A TransverseField stores one Jones vector per grid cell. Amplitudes are
 * probability-amplitude densities: the probability carried by cell i is
 * |value_i|^2 * area_i, and a normalized field sums to one. The azimuthal
 * weight of the vector mode is uniform, so it is folded into this
 * normalization rather than carried separately.
 *
 * Azimuth is measured counterclockwise from +x (the H axis), phi in [0, 2pi).
 */
#pragma once

#include "qdc/optics.hpp"
#include "qdc/polarization.hpp"

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qdc {

enum class GridKind { polar, cartesian };

struct GridSpec {
    GridKind kind = GridKind::polar;
    // polar
    int n_r = 64;
    int n_phi = 256;
    double r_max = 3.0;  // mm
    // cartesian
    int n_x = 256;
    int n_y = 256;
    double half_extent = 3.0;  // mm

    static GridSpec polar(int n_r, int n_phi, double r_max_mm);
    static GridSpec cartesian(int n_x, int n_y, double half_extent_mm);

    std::size_t cell_count() const;
    /// Radius of the largest centred disk fully covered by the grid.
    double inscribed_radius() const;
    /// Throws InvalidArgument when a size or extent is out of range.
    void validate() const;
    std::string describe() const;

    bool operator==(const GridSpec& o) const;
};

struct Cell {
    double x;     // mm
    double y;     // mm
    double r;     // mm
    double phi;   // rad, [0, 2pi)
    double area;  // mm^2
};

/// Cell geometry for a GridSpec. Polar cells are indexed ir * n_phi + iphi,
/// with radial midpoints (ir + 1/2) dr and azimuths iphi * dphi; area r dr dphi.
/// Cartesian cells are indexed iy * n_x + ix with centres on a uniform lattice.
class Grid {
public:
    explicit Grid(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    std::size_t size() const { return cells_.size(); }
    const Cell& operator[](std::size_t i) const { return cells_[i]; }
    std::span<const Cell> cells() const { return cells_; }

private:
    GridSpec spec_;
    std::vector<Cell> cells_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(const GridSpec& spec);

enum class ProfileKind { gaussian, vortex, flat_matched };

std::string to_string(ProfileKind k);
ProfileKind profile_kind_from_string(const std::string& s);

/// Radial amplitude A(r) before normalization.
///   gaussian:     exp(-r^2/w^2)
///   vortex:       (sqrt2 r / w) exp(-r^2/w^2), zero on axis
///   flat_matched: 1 on [annulus_inner, annulus_outer], 0 elsewhere
struct RadialProfile {
    ProfileKind kind = ProfileKind::gaussian;
    double waist = 1.0;           // mm
    double annulus_inner = 0.5;   // mm
    double annulus_outer = 1.5;   // mm

    double amplitude(double r) const;
    void validate() const;
    bool operator==(const RadialProfile&) const = default;
};

class TransverseField {
public:
    TransverseField(GridPtr grid, std::vector<JonesVector> values);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::span<const JonesVector> values() const { return values_; }
    const JonesVector& operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    double cell_prob(std::size_t i) const { return values_[i].norm2() * (*grid_)[i].area; }
    /// Sum of |value|^2 * area in cell order.
    double total_prob() const;
    /// Copy with every amplitude multiplied by s.
    TransverseField scaled(Complex s) const;

private:
    GridPtr grid_;
    std::vector<JonesVector> values_;
};

/// Per-cell real values on a grid (probabilities, counts, ...).
struct ScalarGrid {
    GridPtr grid;
    std::vector<double> values;

    double sum() const;
    double max() const;
};

/// Horizontally polarized mode A1(r)|H>, normalized to unit probability.
TransverseField make_lpsp(const GridPtr& grid, const RadialProfile& profile);

/**
 * Vector-polarized mode A2(r) QP(phi)|H>, normalized to unit probability.
 *
 * h_leakage mixes a uniform |H> floor into the local polarization before
 * per-cell renormalization; zero gives the ideal q-plate output.
 */
TransverseField make_vpsp(const GridPtr& grid, const RadialProfile& profile, const QplateSpec& qspec,
                          double h_leakage = 0.0);

/// Cellwise (e^{i theta} f1 + f2)/sqrt2 and (e^{i theta} f1 - f2)/sqrt2.
std::pair<TransverseField, TransverseField> superpose_at_bs2(const TransverseField& f1,
                                                             const TransverseField& f2, double theta);

/// Cell probabilities |h|^2 + |v|^2 times the cell area.
ScalarGrid intensity_map(const TransverseField& f);

/// CSV with header r,phi,h2,v2,total (polar) or x,y,phi,h2,v2,total (cartesian).
/// h2, v2 are densities per mm^2; total is the cell probability.
void write_field_csv(std::ostream& os, const TransverseField& f);

/// Binary 16-bit PGM of a cartesian scalar grid; the peak maps to 65535.
/// Row 0 is the top (largest y) row.
void write_intensity_pgm(std::ostream& os, const ScalarGrid& g);

}  // namespace qdc
