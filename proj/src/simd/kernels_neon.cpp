#include "haar/simd/kernels.hpp"

#if defined(HAAR_SIMD_HAVE_NEON)

#include <arm_neon.h>

#include <algorithm>
#include <cassert>
#include <cmath>

namespace haar::simd::neon {
namespace {

inline double hsum(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

}  // namespace

double sum(std::span<const double> a) {
  const std::size_t n = a.size();
  const double* p = a.data();
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(p + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += p[i];
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dot3(std::span<const double> a, std::span<const double> b,
            std::span<const double> c) {
  assert(a.size() == b.size() && a.size() == c.size());
  const std::size_t n = a.size();
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t ab = vmulq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i));
    acc = vaddq_f64(acc, vmulq_f64(ab, vld1q_f64(c.data() + i)));
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += a[i] * b[i] * c[i];
  return s;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  const std::size_t n = a.size();
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vmaxq_f64(acc, vabdq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
  }
  double m = std::max(vgetq_lane_f64(acc, 0), vgetq_lane_f64(acc, 1));
  for (; i < n; ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void scale(std::span<double> a, double factor) {
  const std::size_t n = a.size();
  const float64x2_t f = vdupq_n_f64(factor);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(a.data() + i, vmulq_f64(vld1q_f64(a.data() + i), f));
  for (; i < n; ++i) a[i] *= factor;
}

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == cols && y.size() == rows);
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a.subspan(r * cols, cols), x);
}

}  // namespace haar::simd::neon

#endif
