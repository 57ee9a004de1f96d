#include "haar/simd/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace haar::simd::scalar {

double sum(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double dot3(std::span<const double> a, std::span<const double> b,
            std::span<const double> c) {
  assert(a.size() == b.size() && a.size() == c.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i] * c[i];
  return s;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void scale(std::span<double> a, double factor) {
  for (double& v : a) v *= factor;
}

void matvec(std::span<const double> a, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  assert(a.size() == rows * cols && x.size() == cols && y.size() == rows);
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a.subspan(r * cols, cols), x);
}

}  // namespace haar::simd::scalar
