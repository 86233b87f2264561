#include "qdc/fringe_fit.hpp"

#include "qdc/errors.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace qdc {

FringeFit fit_fringe(std::span<const FringeSample> samples) {
    const auto n = static_cast<Eigen::Index>(samples.size());
    if (n < 5) throw InvalidArgument("fit_fringe: need at least 5 samples");

    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = samples[static_cast<std::size_t>(i)].theta;
        design(i, 0) = 1.0;
        design(i, 1) = std::cos(t);
        design(i, 2) = std::sin(t);
        y(i) = samples[static_cast<std::size_t>(i)].intensity;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw DegenerateFitError("fit_fringe: sample phases do not determine a cosine");

    const Eigen::Vector3d coef = qr.solve(y);
    const double a = coef(0);
    const double c = coef(1);
    const double s = coef(2);
    if (!(a > 0.0)) throw DegenerateFitError("fit_fringe: fitted offset is not positive");

    FringeFit fit;
    fit.n_samples = samples.size();
    fit.offset = a;
    fit.amplitude = std::hypot(c, s);
    // b cos(theta + delta) = b cos(delta) cos(theta) - b sin(delta) sin(theta)
    fit.phase = fit.amplitude > 0.0 ? std::atan2(-s, c) : 0.0;
    fit.visibility = fit.amplitude / a;
    fit.rss = (design * coef - y).squaredNorm();

    if (n > 3) {
        const double sigma2 = fit.rss / static_cast<double>(n - 3);
        const Eigen::Matrix3d cov = sigma2 * (design.transpose() * design).inverse();
        Eigen::Vector3d grad;
        if (fit.amplitude > 0.0) {
            const double b = fit.amplitude;
            grad << -b / (a * a), c / (b * a), s / (b * a);
        } else {
            // At b = 0 the direction is undefined; use the isotropic average.
            grad << 0.0, std::sqrt(0.5) / a, std::sqrt(0.5) / a;
        }
        fit.visibility_stderr = std::sqrt(std::max(0.0, double(grad.transpose() * cov * grad)));
    }
    return fit;
}

}  // namespace qdc
