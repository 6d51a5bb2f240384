#pragma once

#include <span>
#include <string_view>

// Data-parallel inner loops. Each kernel has a scalar reference
// implementation and, on x86-64, an AVX2 variant; the public entry points
// dispatch to the best variant the running CPU supports.
namespace kramers::simd {

enum class Backend { Scalar, Avx2 };

std::string_view backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();

/// Forces a backend (tests and benchmarking). Throws DomainError if the
/// CPU or the build lacks it.
void set_backend(Backend b);

/// Positions of point dipoles, structure-of-arrays.
struct PointSet {
  std::span<const double> x, y, z;
};

/// out[i] = sum_k height[k] * exp(-(x[i] - center[k])^2 * inv_two_sigma2)
void gaussian_sum(std::span<const double> x, std::span<const double> center,
                  std::span<const double> height, double inv_two_sigma2, std::span<double> out);

/// sum_j weight[j] * (1 - 3 cos^2 theta_j) / r_j^3 for the vectors from
/// `origin` to each point, using the minimum-image convention in a cubic
/// periodic box of side `box` (no wrapping when box <= 0). The quantization
/// axis is z. Points must not coincide with the origin.
double dipolar_sum(const double origin[3], PointSet points, std::span<const double> weight,
                   double box);

/// sum_i v[i]^2
double sum_squares(std::span<const double> v);

// Variant entry points, exposed for equivalence testing.
namespace scalar {
void gaussian_sum(std::span<const double> x, std::span<const double> center,
                  std::span<const double> height, double inv_two_sigma2, std::span<double> out);
double dipolar_sum(const double origin[3], PointSet points, std::span<const double> weight,
                   double box);
double sum_squares(std::span<const double> v);
}  // namespace scalar

namespace avx2 {
void gaussian_sum(std::span<const double> x, std::span<const double> center,
                  std::span<const double> height, double inv_two_sigma2, std::span<double> out);
double dipolar_sum(const double origin[3], PointSet points, std::span<const double> weight,
                   double box);
double sum_squares(std::span<const double> v);
}  // namespace avx2

}  // namespace kramers::simd
