/**
 * @file detection.hpp
 * @brief Photon-level Monte Carlo: attenuated source, fibre detectors, EMCCD.
 *
 * Source: each trial draws Poisson(mu) photons (attenuated coherent light).
 * Every photon is routed independently to a port and transverse cell from
 * the joint density of the exit fields, then thinned by the detector
 * quantum efficiency. Detectors are threshold devices: a detector "fires"
 * in a trial when at least one photon is detected, and the coincidence
 * window is one trial.
 *
 * Reproducibility: trials are cut into fixed-size chunks, each with its own
 * RNG stream derived from (seed, stream tag, chunk index). Chunk totals are
 * integer sums, so results do not depend on the worker count.
 */
#pragma once

#include "qdc/field.hpp"
#include "qdc/fringe_fit.hpp"
#include "qdc/interferometer.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace qdc {

using Rng = std::mt19937_64;

/// Independent stream seed for (master seed, tag, index).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

/// Seed for the k-th detector of a multi-detector run.
std::uint64_t detector_seed(std::uint64_t seed, std::size_t k);

struct RunOptions {
    unsigned threads = 1;
    std::uint64_t chunk_trials = 1u << 18;
};

/// Fibre-coupled point detector. The same aperture geometry is placed on
/// both exit ports by mmf_sweep; `port` selects the port elsewhere.
struct DetectorSpec {
    std::string name = "mmf";
    Port port = Port::ep1;
    double r = 1.0;                 // mm
    double phi = 0.0;               // rad
    double aperture_radius = 0.3;   // mm
    double quantum_efficiency = 1.0;

    bool contains(const Cell& c) const;
    /// Throws InvalidArgument naming the detector when the aperture leaves the grid.
    void validate(const GridSpec& grid) const;
};

struct EmccdSpec {
    int n_frames = 1;
    std::uint64_t exposure_trials_per_frame = 100000;
    double dark_counts_per_pixel_per_frame = 0.0;
    double quantum_efficiency = 1.0;

    void validate() const;
};

struct CountRecord {
    double theta = 0.0;
    std::uint64_t singles_ep1 = 0;   // trials in which the EP1 detector fired
    std::uint64_t singles_ep2 = 0;
    std::uint64_t coincidences = 0;  // trials in which both fired
    std::uint64_t n_trials = 0;
    std::uint64_t seed = 0;

    // Photon bookkeeping: drawn = detected_ep1 + detected_ep2 + lost_qe + outside_aperture.
    std::uint64_t photons_drawn = 0;
    std::uint64_t detected_ep1 = 0;
    std::uint64_t detected_ep2 = 0;
    std::uint64_t lost_qe = 0;
    std::uint64_t outside_aperture = 0;

    CountRecord& operator+=(const CountRecord& o);
    bool operator==(const CountRecord&) const = default;
};

/// Poisson(mu) photon number for one trial. Throws InvalidArgument for mu <= 0.
std::uint64_t sample_trial_photons(double mu, Rng& rng);

struct PhotonHit {
    Port port;
    std::size_t cell;
};

/// Inverse-CDF sampler over (port, cell) with weights |field|^2 * area.
class PhotonRouter {
public:
    /// Throws UnnormalizedFieldError unless the two ports carry 1 +/- 1e-9.
    PhotonRouter(const TransverseField& ep1, const TransverseField& ep2);

    PhotonHit operator()(Rng& rng) const;
    const GridPtr& grid() const { return grid_; }
    std::size_t cells_per_port() const { return n_cells_; }

private:
    GridPtr grid_;
    std::size_t n_cells_;
    std::vector<double> cdf_;  // ep1 cells then ep2 cells
};

/// One photon drawn from the joint exit-port density.
PhotonHit route_photon(const TransverseField& ep1, const TransverseField& ep2, Rng& rng);

/// Fibre-detector counts at each theta (same aperture on both ports).
std::vector<CountRecord> mmf_sweep(const MziConfig& config, const DetectorSpec& det,
                                   std::span<const double> theta_axis, double mu, std::uint64_t n_trials,
                                   std::uint64_t seed, const RunOptions& options = {});

/// Whole-port ("bucket") detectors on both exits at one theta.
CountRecord bucket_counts(const MziConfig& config, double theta, double mu, std::uint64_t n_trials,
                          std::uint64_t seed, double quantum_efficiency = 1.0, const RunOptions& options = {});

/// Coincidence-to-singles ratio coincidences / singles_ep1.
double coincidence_ratio(const CountRecord& rec);

/// Mean photon number whose small-mu ratio mu/2 equals target_ratio.
/// Throws OutOfRegimeError unless 0 < target_ratio < 0.1.
double calibrate_mu(double target_ratio);

/// Accumulated EMCCD counts on the field grid.
struct CountFrame {
    GridPtr grid;
    std::vector<std::uint64_t> counts;
    std::uint64_t photon_counts = 0;  // detected photons, dark counts excluded
    std::uint64_t dark_counts = 0;

    std::uint64_t total() const { return photon_counts + dark_counts; }
    ScalarGrid as_scalar() const;
};

/// Frames of exposure_trials_per_frame trials each, photons binned on the
/// field grid of `port` (cartesian grids only), plus Poisson dark counts.
/// mu = 0 records dark counts only.
CountFrame emccd_accumulate(const MziConfig& config, const EmccdSpec& spec, Port port, double mu,
                            std::uint64_t seed, const RunOptions& options = {});

/// 16-bit PGM of the frame; maxval is the peak count (scaled when above 65535).
void write_frame_pgm(std::ostream& os, const CountFrame& frame);

struct VisibilityRow {
    double phi = 0.0;
    double visibility = 0.0;
    double visibility_stderr = 0.0;
    FringeFit fit;
};

/// Runs mmf_sweep with the detector moved to each phi and fits the EP1
/// singles fringe. The imperfection model is whatever config.h_leakage and
/// the detector aperture impose.
std::vector<VisibilityRow> experimental_visibility_suite(const MziConfig& config, const DetectorSpec& base,
                                                         std::span<const double> phis,
                                                         std::span<const double> theta_axis, double mu,
                                                         std::uint64_t n_trials, std::uint64_t seed,
                                                         const RunOptions& options = {});

/// Header theta,singles_ep1,singles_ep2,coincidences,n_trials,seed.
void write_count_csv(std::ostream& os, std::span<const CountRecord> records);

/// Header phi,visibility,stderr.
void write_visibility_csv(std::ostream& os, std::span<const VisibilityRow> rows);

/// EP1 singles against theta, ready for fit_fringe.
std::vector<FringeSample> singles_fringe(std::span<const CountRecord> records, Port port = Port::ep1);

}  // namespace qdc
