#include <atomic>

#include "kramers/errors.hpp"
#include "kramers/simd/kernels.hpp"

namespace kramers::simd {

#ifndef KRAMERS_HAVE_AVX2
// Stubs keep the variant namespace linkable on builds without AVX2; they
// are unreachable because backend_available() reports false.
namespace avx2 {
void gaussian_sum(std::span<const double> x, std::span<const double> c,
                  std::span<const double> h, double s, std::span<double> out) {
  scalar::gaussian_sum(x, c, h, s, out);
}
double dipolar_sum(const double o[3], PointSet p, std::span<const double> w, double box) {
  return scalar::dipolar_sum(o, p, w, box);
}
double sum_squares(std::span<const double> v) { return scalar::sum_squares(v); }
}  // namespace avx2
#endif

namespace {

bool cpu_has_avx2() {
#if defined(KRAMERS_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() { return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar; }

std::atomic<Backend>& current() {
  static std::atomic<Backend> b{detect()};
  return b;
}

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) { return b == Backend::Scalar || cpu_has_avx2(); }

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (!backend_available(b))
    throw DomainError("SIMD backend '" + std::string(backend_name(b)) + "' not available");
  current().store(b, std::memory_order_relaxed);
}

void gaussian_sum(std::span<const double> x, std::span<const double> center,
                  std::span<const double> height, double inv_two_sigma2, std::span<double> out) {
  if (active_backend() == Backend::Avx2)
    avx2::gaussian_sum(x, center, height, inv_two_sigma2, out);
  else
    scalar::gaussian_sum(x, center, height, inv_two_sigma2, out);
}

double dipolar_sum(const double origin[3], PointSet points, std::span<const double> weight,
                   double box) {
  return active_backend() == Backend::Avx2 ? avx2::dipolar_sum(origin, points, weight, box)
                                           : scalar::dipolar_sum(origin, points, weight, box);
}

double sum_squares(std::span<const double> v) {
  return active_backend() == Backend::Avx2 ? avx2::sum_squares(v) : scalar::sum_squares(v);
}

}  // namespace kramers::simd
