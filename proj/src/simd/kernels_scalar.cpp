#include <cmath>

#include "kramers/simd/kernels.hpp"

namespace kramers::simd::scalar {

void gaussian_sum(std::span<const double> x, std::span<const double> center,
                  std::span<const double> height, double inv_two_sigma2, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < center.size(); ++k) {
      const double d = x[i] - center[k];
      acc += height[k] * std::exp(-d * d * inv_two_sigma2);
    }
    out[i] = acc;
  }
}

double dipolar_sum(const double origin[3], PointSet points, std::span<const double> weight,
                   double box) {
  const bool wrap = box > 0.0;
  const double inv_box = wrap ? 1.0 / box : 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < weight.size(); ++j) {
    double dx = points.x[j] - origin[0];
    double dy = points.y[j] - origin[1];
    double dz = points.z[j] - origin[2];
    if (wrap) {
      dx -= box * std::nearbyint(dx * inv_box);
      dy -= box * std::nearbyint(dy * inv_box);
      dz -= box * std::nearbyint(dz * inv_box);
    }
    const double r2 = dx * dx + dy * dy + dz * dz;
    const double inv_r2 = 1.0 / r2;
    const double inv_r3 = inv_r2 * std::sqrt(inv_r2);
    acc += weight[j] * (1.0 - 3.0 * dz * dz * inv_r2) * inv_r3;
  }
  return acc;
}

double sum_squares(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

}  // namespace kramers::simd::scalar
