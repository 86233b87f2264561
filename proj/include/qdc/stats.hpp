#pragma once

#include "qdc/field.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qdc {

/// Assigns each grid cell to one of n_sectors equal azimuthal sectors of the
/// annulus [r_lo, r_hi), or -1 when the cell centre lies outside it.
std::vector<int> sector_partition(const Grid& grid, double r_lo, double r_hi, int n_sectors);

/// n_radial equal-width rings over [0, inscribed radius) times n_sectors
/// sectors; index ring * n_sectors + sector, or -1 outside the disk.
std::vector<int> polar_partition(const Grid& grid, int n_radial, int n_sectors);

/// Sums per-cell values into partition bins (cells labelled -1 are skipped).
std::vector<double> bin_values(std::span<const double> cell_values, std::span<const int> partition, int n_bins);

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

/// Pearson chi-square of observed counts against expected probabilities
/// (rescaled to the observed total). Bins with zero expectation must be empty.
ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected_prob);

/// Half the L1 distance between two distributions (each normalized here).
double total_variation(std::span<const double> a, std::span<const double> b);

}  // namespace qdc
