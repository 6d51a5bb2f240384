#include <immintrin.h>

#include <cmath>

#include "kramers/simd/kernels.hpp"

namespace kramers::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Cephes-style exp: range reduction by ln 2 and a (3,4) rational
// approximation on [-ln2/2, ln2/2]. Arguments below -708 flush to zero.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo_limit = _mm256_set1_pd(-708.0);
  const __m256d hi_limit = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo_limit, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo_limit), hi_limit);

  const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                     _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_sub_pd(x, _mm256_mul_pd(fx, _mm256_set1_pd(6.93145751953125E-1)));
  x = _mm256_sub_pd(x, _mm256_mul_pd(fx, _mm256_set1_pd(1.42860682030941723212E-6)));

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_add_pd(_mm256_mul_pd(p, xx), _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_add_pd(_mm256_mul_pd(p, xx), _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, x);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  r = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_add_pd(r, r));

  // 2^fx assembled in the exponent field.
  const __m256i n = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(fx));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(n, _mm256_set1_epi64x(1023)), 52);
  r = _mm256_mul_pd(r, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, r);
}

}  // namespace

void gaussian_sum(std::span<const double> x, std::span<const double> center,
                  std::span<const double> height, double inv_two_sigma2, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d neg_scale = _mm256_set1_pd(-inv_two_sigma2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x.data() + i);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < center.size(); ++k) {
      const __m256d d = _mm256_sub_pd(xv, _mm256_set1_pd(center[k]));
      const __m256d e = exp_pd(_mm256_mul_pd(_mm256_mul_pd(d, d), neg_scale));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(height[k]), e));
    }
    _mm256_storeu_pd(out.data() + i, acc);
  }
  if (i < n)
    scalar::gaussian_sum(x.subspan(i), center, height, inv_two_sigma2, out.subspan(i));
}

double dipolar_sum(const double origin[3], PointSet points, std::span<const double> weight,
                   double box) {
  const std::size_t n = weight.size();
  const bool wrap = box > 0.0;
  const __m256d ox = _mm256_set1_pd(origin[0]);
  const __m256d oy = _mm256_set1_pd(origin[1]);
  const __m256d oz = _mm256_set1_pd(origin[2]);
  const __m256d vbox = _mm256_set1_pd(box);
  const __m256d vinv_box = _mm256_set1_pd(wrap ? 1.0 / box : 0.0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d three = _mm256_set1_pd(3.0);
  constexpr int kRound = _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC;

  __m256d acc = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(points.x.data() + j), ox);
    __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(points.y.data() + j), oy);
    __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(points.z.data() + j), oz);
    if (wrap) {
      dx = _mm256_sub_pd(dx, _mm256_mul_pd(vbox, _mm256_round_pd(_mm256_mul_pd(dx, vinv_box), kRound)));
      dy = _mm256_sub_pd(dy, _mm256_mul_pd(vbox, _mm256_round_pd(_mm256_mul_pd(dy, vinv_box), kRound)));
      dz = _mm256_sub_pd(dz, _mm256_mul_pd(vbox, _mm256_round_pd(_mm256_mul_pd(dz, vinv_box), kRound)));
    }
    const __m256d dz2 = _mm256_mul_pd(dz, dz);
    const __m256d r2 = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)), dz2);
    const __m256d inv_r2 = _mm256_div_pd(one, r2);
    const __m256d inv_r3 = _mm256_mul_pd(inv_r2, _mm256_sqrt_pd(inv_r2));
    const __m256d angular = _mm256_sub_pd(one, _mm256_mul_pd(three, _mm256_mul_pd(dz2, inv_r2)));
    const __m256d w = _mm256_loadu_pd(weight.data() + j);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(w, _mm256_mul_pd(angular, inv_r3)));
  }
  double total = hsum(acc);
  if (j < n) {
    PointSet tail{points.x.subspan(j), points.y.subspan(j), points.z.subspan(j)};
    total += scalar::dipolar_sum(origin, tail, weight.subspan(j), box);
  }
  return total;
}

double sum_squares(std::span<const double> v) {
  const std::size_t n = v.size();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d a = _mm256_loadu_pd(v.data() + i);
    const __m256d b = _mm256_loadu_pd(v.data() + i + 4);
    acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(a, a));
    acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(b, b));
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) total += v[i] * v[i];
  return total;
}

}  // namespace kramers::simd::avx2
