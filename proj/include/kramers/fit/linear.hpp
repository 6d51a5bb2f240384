#pragma once

#include <span>

namespace kramers::fit {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  // Covariance of (slope, intercept). Absolute when sigmas are given,
  // otherwise scaled by the residual variance chi2 / (n - 2).
  double var_slope = 0.0;
  double var_intercept = 0.0;
  double cov_slope_intercept = 0.0;
  double chi2 = 0.0;
  int n = 0;
};

/// Weighted straight-line fit y = slope x + intercept. An empty `sigma`
/// means unit weights. Throws DomainError when all x coincide or fewer
/// than two points are given.
LinearFit fit_linear_weighted(std::span<const double> x, std::span<const double> y,
                              std::span<const double> sigma = {});

}  // namespace kramers::fit
