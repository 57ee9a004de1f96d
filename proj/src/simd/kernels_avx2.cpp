#include "haar/simd/kernels.hpp"

#if defined(HAAR_SIMD_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <cassert>
#include <cmath>

// Compiled for the baseline ISA; only these functions are built with AVX2
// enabled, and the dispatcher calls them after checking the CPU flags.
#define HAAR_AVX2 __attribute__((target("avx2")))

namespace haar::simd::avx2 {
namespace {

// Lane order is fixed: lanes 0..3 are combined as (l0 + l1) + (l2 + l3).
HAAR_AVX2 inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

HAAR_AVX2 double sum(std::span<const double> a) {
  const std::size_t n = a.size();
  const double* p = a.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(p + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += p[i];
  return s;
}

HAAR_AVX2 double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += pa[i] * pb[i];
  return s;
}

HAAR_AVX2 double dot3(std::span<const double> a, std::span<const double> b,
                      std::span<const double> c) {
  assert(a.size() == b.size() && a.size() == c.size());
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  const double* pc = c.data();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d ab = _mm256_mul_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(ab, _mm256_loadu_pd(pc + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += pa[i] * pb[i] * pc[i];
  return s;
}

HAAR_AVX2 double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  const double* pa = a.data();
  const double* pb = b.data();
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(pa + i), _mm256_loadu_pd(pb + i));
    acc = _mm256_max_pd(acc, _mm256_andnot_pd(sign, d));
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  for (; i < n; ++i) m = std::max(m, std::abs(pa[i] - pb[i]));
  return m;
}

HAAR_AVX2 void scale(std::span<double> a, double factor) {
  const std::size_t n = a.size();
  double* p = a.data();
  const __m256d f = _mm256_set1_pd(factor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(p + i, _mm256_mul_pd(_mm256_loadu_pd(p + i), f));
  for (; i < n; ++i) p[i] *= factor;
}

HAAR_AVX2 void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
                      std::span<const double> x, std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == cols && y.size() == rows);
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a.subspan(r * cols, cols), x);
}

}  // namespace haar::simd::avx2

#endif
