#include "qdc/detection.hpp"

#include "qdc/errors.hpp"
#include "qdc/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace qdc {

namespace {

constexpr std::uint64_t kDarkTag = 0xDA4C0000ull;
constexpr std::uint64_t kBucketTag = 0xB0C4E700ull;
constexpr std::uint64_t kDetectorTag = 0xD7000000ull;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Runs fn(chunk_index, n_trials_in_chunk) over fixed-size chunks on a small
// worker pool and returns the per-chunk results in chunk order.
template <class Result, class Fn>
std::vector<Result> run_chunks(std::uint64_t n_trials, const RunOptions& opt, Fn fn) {
    const std::uint64_t chunk = std::max<std::uint64_t>(opt.chunk_trials, 1);
    const std::uint64_t n_chunks = (n_trials + chunk - 1) / chunk;
    std::vector<Result> results(n_chunks);
    if (n_chunks == 0) return results;

    auto trials_in = [&](std::uint64_t k) { return std::min(chunk, n_trials - k * chunk); };
    const auto n_workers = static_cast<unsigned>(std::clamp<std::uint64_t>(opt.threads, 1, n_chunks));
    if (n_workers == 1) {
        for (std::uint64_t k = 0; k < n_chunks; ++k) results[k] = fn(k, trials_in(k));
        return results;
    }

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::uint64_t k = next++; k < n_chunks; k = next++) results[k] = fn(k, trials_in(k));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n_chunks;
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
    return results;
}

// Per-cell acceptance masks for the two ports; empty means "whole port".
struct Acceptance {
    std::vector<char> ep1;
    std::vector<char> ep2;

    bool accepts(const PhotonHit& hit) const {
        const auto& mask = hit.port == Port::ep1 ? ep1 : ep2;
        return mask.empty() || mask[hit.cell] != 0;
    }
};

CountRecord run_trial_chunk(const PhotonRouter& router, const Acceptance& acc, double qe, double mu,
                            std::uint64_t n_trials, Rng& rng) {
    CountRecord rec;
    rec.n_trials = n_trials;
    std::poisson_distribution<std::uint64_t> photons(mu);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (std::uint64_t t = 0; t < n_trials; ++t) {
        const std::uint64_t n = photons(rng);
        if (n == 0) continue;
        bool fired1 = false;
        bool fired2 = false;
        for (std::uint64_t k = 0; k < n; ++k) {
            const PhotonHit hit = router(rng);
            if (!acc.accepts(hit)) {
                ++rec.outside_aperture;
                continue;
            }
            if (qe < 1.0 && uniform(rng) >= qe) {
                ++rec.lost_qe;
                continue;
            }
            if (hit.port == Port::ep1) {
                ++rec.detected_ep1;
                fired1 = true;
            } else {
                ++rec.detected_ep2;
                fired2 = true;
            }
        }
        rec.photons_drawn += n;
        rec.singles_ep1 += fired1;
        rec.singles_ep2 += fired2;
        rec.coincidences += fired1 && fired2;
    }
    return rec;
}

CountRecord count_trials(const PhotonRouter& router, const Acceptance& acc, double qe, double mu,
                         std::uint64_t n_trials, std::uint64_t seed, std::uint64_t tag, double theta,
                         const RunOptions& options) {
    auto chunks = run_chunks<CountRecord>(n_trials, options, [&](std::uint64_t k, std::uint64_t n) {
        Rng rng(stream_seed(seed, tag, k));
        return run_trial_chunk(router, acc, qe, mu, n, rng);
    });
    CountRecord total;
    for (const auto& c : chunks) total += c;
    total.theta = theta;
    total.seed = seed;
    return total;
}

void require_quantum_efficiency(double qe, const std::string& who) {
    if (!(qe > 0.0 && qe <= 1.0)) throw InvalidArgument(who + ": quantum efficiency must lie in (0, 1]");
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) ^ tag) ^ index);
}

std::uint64_t detector_seed(std::uint64_t seed, std::size_t k) { return stream_seed(seed, kDetectorTag, k); }

bool DetectorSpec::contains(const Cell& c) const {
    const double dx = c.x - r * std::cos(phi);
    const double dy = c.y - r * std::sin(phi);
    return dx * dx + dy * dy <= aperture_radius * aperture_radius;
}

void DetectorSpec::validate(const GridSpec& grid) const {
    const std::string who = "detector '" + name + "'";
    if (!(aperture_radius > 0.0)) throw InvalidArgument(who + ": aperture radius must be positive");
    if (!(r >= 0.0) || !std::isfinite(phi)) throw InvalidArgument(who + ": centre must have r >= 0 and finite phi");
    require_quantum_efficiency(quantum_efficiency, who);
    bool inside;
    if (grid.kind == GridKind::polar) {
        inside = r + aperture_radius <= grid.r_max;
    } else {
        const double x = r * std::cos(phi);
        const double y = r * std::sin(phi);
        inside = std::abs(x) + aperture_radius <= grid.half_extent &&
                 std::abs(y) + aperture_radius <= grid.half_extent;
    }
    if (!inside) throw InvalidArgument(who + ": aperture disk extends outside the grid (" + grid.describe() + ")");
}

void EmccdSpec::validate() const {
    if (n_frames < 1) throw InvalidArgument("emccd: n_frames must be >= 1");
    if (exposure_trials_per_frame < 1) throw InvalidArgument("emccd: exposure_trials_per_frame must be >= 1");
    if (!(dark_counts_per_pixel_per_frame >= 0.0))
        throw InvalidArgument("emccd: dark_counts_per_pixel_per_frame must be >= 0");
    require_quantum_efficiency(quantum_efficiency, "emccd");
}

CountRecord& CountRecord::operator+=(const CountRecord& o) {
    singles_ep1 += o.singles_ep1;
    singles_ep2 += o.singles_ep2;
    coincidences += o.coincidences;
    n_trials += o.n_trials;
    photons_drawn += o.photons_drawn;
    detected_ep1 += o.detected_ep1;
    detected_ep2 += o.detected_ep2;
    lost_qe += o.lost_qe;
    outside_aperture += o.outside_aperture;
    return *this;
}

std::uint64_t sample_trial_photons(double mu, Rng& rng) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidArgument("sample_trial_photons: mu must be positive");
    return std::poisson_distribution<std::uint64_t>(mu)(rng);
}

PhotonRouter::PhotonRouter(const TransverseField& ep1, const TransverseField& ep2)
    : grid_(ep1.grid_ptr()), n_cells_(ep1.size()) {
    if (!(ep1.grid().spec() == ep2.grid().spec())) throw GridMismatchError("PhotonRouter: port grids differ");
    cdf_.resize(2 * n_cells_);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_cells_; ++i) cdf_[i] = (acc += ep1.cell_prob(i));
    for (std::size_t i = 0; i < n_cells_; ++i) cdf_[n_cells_ + i] = (acc += ep2.cell_prob(i));
    if (!(std::abs(acc - 1.0) <= 1e-9)) {
        throw UnnormalizedFieldError("PhotonRouter: exit ports carry total probability " + io::fmt(acc) +
                                     ", expected 1");
    }
}

PhotonHit PhotonRouter::operator()(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, cdf_.back())(rng);
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
    idx = std::min(idx, cdf_.size() - 1);
    if (idx < n_cells_) return {Port::ep1, idx};
    return {Port::ep2, idx - n_cells_};
}

PhotonHit route_photon(const TransverseField& ep1, const TransverseField& ep2, Rng& rng) {
    return PhotonRouter(ep1, ep2)(rng);
}

std::vector<CountRecord> mmf_sweep(const MziConfig& config, const DetectorSpec& det,
                                   std::span<const double> theta_axis, double mu, std::uint64_t n_trials,
                                   std::uint64_t seed, const RunOptions& options) {
    det.validate(config.grid);
    if (!(mu > 0.0)) throw InvalidArgument("mmf_sweep: mu must be positive");
    const MziModel model(config);
    const Grid& grid = *model.grid();
    Acceptance acc;
    acc.ep1.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) acc.ep1[i] = det.contains(grid[i]) ? 1 : 0;
    acc.ep2 = acc.ep1;

    std::vector<CountRecord> out;
    out.reserve(theta_axis.size());
    for (std::size_t i = 0; i < theta_axis.size(); ++i) {
        const ExitFields fields = model.exit_fields(theta_axis[i]);
        const PhotonRouter router(fields.ep1, fields.ep2);
        out.push_back(count_trials(router, acc, det.quantum_efficiency, mu, n_trials, seed, i, theta_axis[i], options));
    }
    return out;
}

CountRecord bucket_counts(const MziConfig& config, double theta, double mu, std::uint64_t n_trials,
                          std::uint64_t seed, double quantum_efficiency, const RunOptions& options) {
    require_quantum_efficiency(quantum_efficiency, "bucket_counts");
    if (!(mu > 0.0)) throw InvalidArgument("bucket_counts: mu must be positive");
    const ExitFields fields = MziModel(config).exit_fields(theta);
    const PhotonRouter router(fields.ep1, fields.ep2);
    return count_trials(router, Acceptance{}, quantum_efficiency, mu, n_trials, seed, kBucketTag, theta, options);
}

double coincidence_ratio(const CountRecord& rec) {
    if (rec.singles_ep1 == 0) throw Error("coincidence_ratio: no EP1 singles recorded");
    return static_cast<double>(rec.coincidences) / static_cast<double>(rec.singles_ep1);
}

double calibrate_mu(double target_ratio) {
    if (!(target_ratio > 0.0) || !(target_ratio < 0.1)) {
        throw OutOfRegimeError("calibrate_mu: target ratio " + io::fmt(target_ratio) +
                               " is outside the single-photon regime (0, 0.1)");
    }
    return 2.0 * target_ratio;
}

ScalarGrid CountFrame::as_scalar() const {
    ScalarGrid g{grid, std::vector<double>(counts.size())};
    for (std::size_t i = 0; i < counts.size(); ++i) g.values[i] = static_cast<double>(counts[i]);
    return g;
}

CountFrame emccd_accumulate(const MziConfig& config, const EmccdSpec& spec, Port port, double mu,
                            std::uint64_t seed, const RunOptions& options) {
    spec.validate();
    if (config.grid.kind != GridKind::cartesian)
        throw InvalidArgument("emccd_accumulate: the EMCCD needs a cartesian pixel grid");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidArgument("emccd_accumulate: mu must be >= 0");

    const MziModel model(config);
    CountFrame frame{model.grid(), std::vector<std::uint64_t>(model.grid()->size(), 0)};
    const ExitFields fields = model.exit_fields(config.theta);
    const PhotonRouter router(fields.ep1, fields.ep2);
    const double qe = spec.quantum_efficiency;

    for (int f = 0; f < spec.n_frames; ++f) {
        if (mu > 0.0) {
            using Hits = std::vector<std::uint32_t>;
            auto chunks = run_chunks<Hits>(spec.exposure_trials_per_frame, options,
                                           [&](std::uint64_t k, std::uint64_t n) {
                                               Rng rng(stream_seed(seed, static_cast<std::uint64_t>(f), k));
                                               std::poisson_distribution<std::uint64_t> photons(mu);
                                               std::uniform_real_distribution<double> uniform(0.0, 1.0);
                                               Hits hits;
                                               for (std::uint64_t t = 0; t < n; ++t) {
                                                   const std::uint64_t np = photons(rng);
                                                   for (std::uint64_t j = 0; j < np; ++j) {
                                                       const PhotonHit hit = router(rng);
                                                       if (qe < 1.0 && uniform(rng) >= qe) continue;
                                                       if (hit.port == port)
                                                           hits.push_back(static_cast<std::uint32_t>(hit.cell));
                                                   }
                                               }
                                               return hits;
                                           });
            for (const auto& hits : chunks) {
                for (auto cell : hits) ++frame.counts[cell];
                frame.photon_counts += hits.size();
            }
        }
        if (spec.dark_counts_per_pixel_per_frame > 0.0) {
            Rng rng(stream_seed(seed, kDarkTag, static_cast<std::uint64_t>(f)));
            std::poisson_distribution<std::uint64_t> dark(spec.dark_counts_per_pixel_per_frame);
            for (auto& c : frame.counts) {
                const std::uint64_t d = dark(rng);
                c += d;
                frame.dark_counts += d;
            }
        }
    }
    return frame;
}

void write_frame_pgm(std::ostream& os, const CountFrame& frame) {
    const GridSpec& spec = frame.grid->spec();
    if (spec.kind != GridKind::cartesian) throw InvalidArgument("write_frame_pgm: frame grid is not cartesian");
    const std::uint64_t peak = frame.counts.empty() ? 0 : *std::max_element(frame.counts.begin(), frame.counts.end());
    const bool scale = peak > 65535;
    std::vector<std::uint16_t> pixels(frame.counts.size());
    for (int iy = 0; iy < spec.n_y; ++iy) {
        const int row = spec.n_y - 1 - iy;
        for (int ix = 0; ix < spec.n_x; ++ix) {
            const std::uint64_t c = frame.counts[static_cast<std::size_t>(iy) * spec.n_x + ix];
            const std::uint64_t v = scale ? (c * 65535 + peak / 2) / peak : c;
            pixels[static_cast<std::size_t>(row) * spec.n_x + ix] = static_cast<std::uint16_t>(v);
        }
    }
    const auto maxval = static_cast<std::uint16_t>(scale ? 65535 : std::max<std::uint64_t>(peak, 1));
    io::write_pgm16(os, spec.n_x, spec.n_y, maxval, pixels);
}

std::vector<VisibilityRow> experimental_visibility_suite(const MziConfig& config, const DetectorSpec& base,
                                                         std::span<const double> phis,
                                                         std::span<const double> theta_axis, double mu,
                                                         std::uint64_t n_trials, std::uint64_t seed,
                                                         const RunOptions& options) {
    std::vector<VisibilityRow> rows;
    rows.reserve(phis.size());
    for (std::size_t k = 0; k < phis.size(); ++k) {
        DetectorSpec det = base;
        det.phi = phis[k];
        const auto records = mmf_sweep(config, det, theta_axis, mu, n_trials, detector_seed(seed, k), options);
        VisibilityRow row;
        row.phi = phis[k];
        row.fit = fit_fringe(singles_fringe(records));
        row.visibility = row.fit.visibility;
        row.visibility_stderr = row.fit.visibility_stderr;
        rows.push_back(row);
    }
    return rows;
}

void write_count_csv(std::ostream& os, std::span<const CountRecord> records) {
    os << "theta,singles_ep1,singles_ep2,coincidences,n_trials,seed\n";
    for (const auto& r : records) {
        io::write_row(os, {io::fmt(r.theta), std::to_string(r.singles_ep1), std::to_string(r.singles_ep2),
                           std::to_string(r.coincidences), std::to_string(r.n_trials), std::to_string(r.seed)});
    }
}

void write_visibility_csv(std::ostream& os, std::span<const VisibilityRow> rows) {
    os << "phi,visibility,stderr\n";
    for (const auto& r : rows) io::write_row(os, {io::fmt(r.phi), io::fmt(r.visibility), io::fmt(r.visibility_stderr)});
}

std::vector<FringeSample> singles_fringe(std::span<const CountRecord> records, Port port) {
    std::vector<FringeSample> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const auto singles = port == Port::ep1 ? r.singles_ep1 : r.singles_ep2;
        out.push_back({r.theta, static_cast<double>(singles)});
    }
    return out;
}

}  // namespace qdc
