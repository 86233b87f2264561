/**
 * @file interferometer.hpp
 * @brief Mach-Zehnder composition: BS1, phase arm, q-plate arm, BS2.
 *
 * Arm 1 carries the H-polarized mode with the PZT phase theta; arm 2 carries
 * the q-plate output. EP1 is the port where the two arms add in phase for
 * theta = 0 (the bright port of the balanced interferometer), so port labels
 * and every probability are independent of the beamsplitter convention.
 *
 * The per-point probabilities are conditional: at each transverse point the
 * two ports are normalized to sum to one.
 */
#pragma once

#include "qdc/field.hpp"
#include "qdc/fringe_fit.hpp"
#include "qdc/optics.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qdc {

enum class Port { ep1, ep2 };

std::string to_string(Port p);
Port port_from_string(const std::string& s);

struct MziConfig {
    double theta = 0.0;  // PZT phase, rad
    QplateSpec qspec;
    bool qplate_enabled = true;
    RadialProfile lpsp_profile{ProfileKind::gaussian};
    RadialProfile vpsp_profile{ProfileKind::vortex};
    GridSpec grid;
    BsConvention bs_convention = BsConvention::hadamard;
    /// Polarization-contrast imperfection: |H> floor mixed into the q-plate output.
    double h_leakage = 0.0;
};

struct ExitFields {
    TransverseField ep1;
    TransverseField ep2;

    const TransverseField& port(Port p) const { return p == Port::ep1 ? ep1 : ep2; }
};

/// Caches the two arm fields so theta sweeps only redo the BS2 step.
class MziModel {
public:
    explicit MziModel(const MziConfig& config);
    MziModel(const MziConfig& config, GridPtr grid);

    const MziConfig& config() const { return config_; }
    const GridPtr& grid() const { return grid_; }
    /// Arm fields after BS1 (each carries probability 1/2), before the PZT phase.
    const TransverseField& arm1() const { return arm1_; }
    const TransverseField& arm2() const { return arm2_; }

    ExitFields exit_fields(double theta) const;

private:
    MziConfig config_;
    GridPtr grid_;
    TransverseField arm1_;
    TransverseField arm2_;
};

/// Exit-port fields at config.theta.
ExitFields run_mzi(const MziConfig& config);

/// (1 +/- sin(phi) cos(theta)) / 2 for EP1 / EP2.
double analytic_prob(double theta, double phi, Port port);

/// Per-cell port probability divided by the two-port total at that cell.
/// Cells where neither port carries probability hold NaN.
ScalarGrid conditional_prob_map(const ExitFields& fields, Port port);

/// Fringe contrast of analytic_prob over theta: |sin(phi)|.
double visibility_ideal(double phi);

struct MorphMap {
    std::vector<double> theta_axis;
    std::vector<double> phi_axis;
    std::vector<double> values;  // theta-major: values[i * phi_axis.size() + j]

    double at(std::size_t i_theta, std::size_t j_phi) const { return values[i_theta * phi_axis.size() + j_phi]; }
    /// fit_fringe over the theta axis at one phi column.
    FringeFit fit_column(std::size_t j_phi) const;
};

/// values[i][j] = analytic_prob(theta_axis[i], phi_axis[j], port).
/// Axes must be non-empty and sorted ascending.
MorphMap morph_map(std::span<const double> theta_axis, std::span<const double> phi_axis, Port port);

/// Header theta,phi,prob; theta-major rows.
void write_morph_csv(std::ostream& os, const MorphMap& m);

struct RingBin {
    double phi_center;
    std::optional<double> mean;  // empty when no pixel centre falls in the sector
    std::size_t n_pixels;
};

/**
 * Mean frame value per azimuthal sector of the annulus [r0 - dr/2, r0 + dr/2].
 * Sector k is centred on phi = 2 pi k / n_bins. A pixel belongs to the
 * annulus and sector containing its centre.
 * Throws AnnulusOutsideGridError when the annulus leaves the grid or reaches
 * below r = 0, InvalidArgument when n_bins < 4 or r0, dr are not positive.
 */
std::vector<RingBin> ring_scan(const ScalarGrid& frame, double r0, double dr, int n_bins);

/// Header phi,intensity,n_pixels; a missing sector leaves intensity empty.
void write_ring_scan_csv(std::ostream& os, std::span<const RingBin> bins);

}  // namespace qdc
