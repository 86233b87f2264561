#include "qdc/stats.hpp"

#include "qdc/errors.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace qdc {

std::vector<int> sector_partition(const Grid& grid, double r_lo, double r_hi, int n_sectors) {
    if (n_sectors < 1) throw InvalidArgument("sector_partition: need at least one sector");
    const double width = 2.0 * std::numbers::pi / n_sectors;
    std::vector<int> out(grid.size(), -1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Cell& c = grid[i];
        if (c.r < r_lo || c.r >= r_hi) continue;
        out[i] = std::min(static_cast<int>(c.phi / width), n_sectors - 1);
    }
    return out;
}

std::vector<int> polar_partition(const Grid& grid, int n_radial, int n_sectors) {
    if (n_radial < 1 || n_sectors < 1) throw InvalidArgument("polar_partition: need at least one bin");
    const double extent = grid.spec().inscribed_radius();
    const double dr = extent / n_radial;
    const double width = 2.0 * std::numbers::pi / n_sectors;
    std::vector<int> out(grid.size(), -1);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Cell& c = grid[i];
        if (c.r >= extent) continue;
        const int ring = std::min(static_cast<int>(c.r / dr), n_radial - 1);
        const int sector = std::min(static_cast<int>(c.phi / width), n_sectors - 1);
        out[i] = ring * n_sectors + sector;
    }
    return out;
}

std::vector<double> bin_values(std::span<const double> cell_values, std::span<const int> partition, int n_bins) {
    if (cell_values.size() != partition.size()) throw InvalidArgument("bin_values: size mismatch");
    std::vector<double> out(static_cast<std::size_t>(n_bins), 0.0);
    for (std::size_t i = 0; i < partition.size(); ++i) {
        if (partition[i] >= 0) out[static_cast<std::size_t>(partition[i])] += cell_values[i];
    }
    return out;
}

ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected_prob) {
    if (observed.size() != expected_prob.size() || observed.size() < 2)
        throw InvalidArgument("chi_square_test: need matching bins, at least two");
    const double n_obs = std::accumulate(observed.begin(), observed.end(), 0.0);
    const double p_tot = std::accumulate(expected_prob.begin(), expected_prob.end(), 0.0);
    if (!(n_obs > 0.0) || !(p_tot > 0.0)) throw InvalidArgument("chi_square_test: empty histogram");

    ChiSquareResult r;
    int used = 0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        const double e = n_obs * expected_prob[k] / p_tot;
        if (e <= 0.0) {
            if (observed[k] > 0.0) return {std::numeric_limits<double>::infinity(), 0, 0.0};
            continue;
        }
        r.statistic += (observed[k] - e) * (observed[k] - e) / e;
        ++used;
    }
    r.dof = used - 1;
    r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic) : 1.0;
    return r;
}

double total_variation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("total_variation: size mismatch");
    const double sa = std::accumulate(a.begin(), a.end(), 0.0);
    const double sb = std::accumulate(b.begin(), b.end(), 0.0);
    double tv = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) tv += std::abs(a[k] / sa - b[k] / sb);
    return 0.5 * tv;
}

}  // namespace qdc
