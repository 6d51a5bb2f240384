#include "kramers/fit/linear.hpp"

#include <cmath>

#include "kramers/errors.hpp"

namespace kramers::fit {

LinearFit fit_linear_weighted(std::span<const double> x, std::span<const double> y,
                              std::span<const double> sigma) {
  const std::size_t n = x.size();
  if (y.size() != n || (!sigma.empty() && sigma.size() != n))
    throw DomainError("x, y and sigma differ in length");
  if (n < 2) throw DomainError("a line fit needs at least two points");
  const bool weighted = !sigma.empty();

  // Centre on the weighted mean of x for a well-conditioned solve.
  double sw = 0.0, swx = 0.0, swy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw DomainError("non-finite data point");
    double w = 1.0;
    if (weighted) {
      if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i]))
        throw DomainError("sigma must be positive and finite");
      w = 1.0 / (sigma[i] * sigma[i]);
    }
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
  }
  const double xm = swx / sw, ym = swy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
    sxx += w * (x[i] - xm) * (x[i] - xm);
    sxy += w * (x[i] - xm) * (y[i] - ym);
  }
  double xscale = 0.0;
  for (std::size_t i = 0; i < n; ++i) xscale = std::max(xscale, std::abs(x[i]));
  if (!(sxx > 1e-24 * sw * std::max(xscale * xscale, 1e-300)))
    throw DomainError("degenerate x values: all points share one abscissa");

  LinearFit f;
  f.n = static_cast<int>(n);
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    f.chi2 += w * r * r;
  }
  double scale = 1.0;
  if (!weighted) scale = n > 2 ? f.chi2 / static_cast<double>(n - 2) : 0.0;
  f.var_slope = scale / sxx;
  f.var_intercept = scale * (1.0 / sw + xm * xm / sxx);
  f.cov_slope_intercept = -scale * xm / sxx;
  return f;
}

}  // namespace kramers::fit
