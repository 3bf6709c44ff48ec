#include "shadowblow/fit.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "shadowblow/error.hpp"

namespace shadowblow {

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    if (n < 2 || y.size() != x.size()) throw FitUnavailableError("a line fit needs at least two samples");
    // Centering keeps the normal equations well conditioned.
    const Eigen::Map<const Eigen::VectorXd> xs(x.data(), n), ys(y.data(), n);
    const double xm = xs.mean(), ym = ys.mean();
    Eigen::MatrixXd design(n, 2);
    design.col(0) = xs.array() - xm;
    design.col(1).setOnes();
    const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(ys);
    LinearFit out;
    out.slope = coef(0);
    out.intercept = coef(1) - coef(0) * xm;
    const Eigen::VectorXd resid = ys - design * coef;
    const double ss_res = resid.squaredNorm();
    const double ss_tot = (ys.array() - ym).matrix().squaredNorm();
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    out.rms = std::sqrt(ss_res / static_cast<double>(n));
    out.samples = static_cast<std::size_t>(n);
    return out;
}

}  // namespace shadowblow
