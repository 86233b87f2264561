#pragma once

#include <cstddef>
#include <span>

namespace qdc {

struct FringeSample {
    double theta;      // rad
    double intensity;  // counts, probability, ... any linear scale
};

/// Least-squares model a + b cos(theta + delta) with b >= 0.
struct FringeFit {
    double offset = 0.0;      // a
    double amplitude = 0.0;   // b
    double phase = 0.0;       // delta, (-pi, pi]
    double visibility = 0.0;  // b / a
    double visibility_stderr = 0.0;
    double rss = 0.0;  // residual sum of squares
    std::size_t n_samples = 0;
};

/**
 * Linear least squares on a + c cos(theta) + s sin(theta), converted to
 * amplitude/phase form. The standard error comes from the residual variance
 * propagated through the normal-equation covariance, so it is zero for
 * noiseless input.
 *
 * Throws InvalidArgument for fewer than 5 samples and DegenerateFitError
 * when the thetas do not determine the cosine (e.g. all equal) or the fitted
 * offset is not positive.
 */
FringeFit fit_fringe(std::span<const FringeSample> samples);

}  // namespace qdc
