#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "haar/simd/kernels.hpp"

namespace simd = haar::simd;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// |a - b| <= 1e-13 * max(1, sum of magnitudes).
bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-13 * std::max(1.0, scale); }

double abs_sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

struct LevelGuard {
  simd::Level saved = simd::active_level();
  ~LevelGuard() { simd::force_level(saved); }
};

}  // namespace

TEST_CASE("scalar kernels match their definitions") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> b{0.5, -1.0, 2.0, 0.0, 1.0};
  const std::vector<double> c{2.0, 2.0, 2.0, 2.0, 2.0};
  CHECK(simd::scalar::sum(a) == 15.0);
  CHECK(simd::scalar::dot(a, b) == 0.5 - 2.0 + 6.0 + 0.0 + 5.0);
  CHECK(simd::scalar::dot3(a, b, c) == 2.0 * (0.5 - 2.0 + 6.0 + 0.0 + 5.0));
  CHECK(simd::scalar::max_abs_diff(a, b) == 4.0);
  std::vector<double> s = a;
  simd::scalar::scale(s, 2.0);
  CHECK(s == std::vector<double>{2.0, 4.0, 6.0, 8.0, 10.0});
  const std::vector<double> m{1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  std::vector<double> y(2);
  simd::scalar::matvec(m, 2, 3, std::vector<double>{1.0, 0.0, -1.0}, y);
  CHECK(y == std::vector<double>{-2.0, -2.0});
  CHECK(simd::scalar::sum(std::vector<double>{}) == 0.0);
}

TEST_CASE("forcing a level falls back to scalar when unsupported") {
  LevelGuard guard;
  CHECK(simd::force_level(simd::Level::Scalar) == simd::Level::Scalar);
  CHECK(simd::active_level() == simd::Level::Scalar);
  const simd::Level best = simd::force_level(simd::detected_level());
  CHECK(best == simd::detected_level());
#if !defined(HAAR_SIMD_HAVE_NEON)
  CHECK(simd::force_level(simd::Level::Neon) == simd::Level::Scalar);
#endif
  MESSAGE("detected level: " << simd::level_name(simd::detected_level()));
}

TEST_CASE("dispatched kernels agree with the scalar reference") {
  LevelGuard guard;
  simd::force_level(simd::detected_level());
  std::mt19937_64 rng(7);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto a = random_vec(rng, n);
    const auto b = random_vec(rng, n);
    const auto c = random_vec(rng, n);
    CHECK(close(simd::sum(a), simd::scalar::sum(a), abs_sum(a)));
    CHECK(close(simd::dot(a, b), simd::scalar::dot(a, b), 4.0 * n));
    CHECK(close(simd::dot3(a, b, c), simd::scalar::dot3(a, b, c), 8.0 * n));
    CHECK(simd::max_abs_diff(a, b) == simd::scalar::max_abs_diff(a, b));
    auto s1 = a;
    auto s2 = a;
    simd::scale(s1, 0.37);
    simd::scalar::scale(s2, 0.37);
    CHECK(s1 == s2);
  }
  for (std::size_t rows : {1u, 3u, 8u}) {
    for (std::size_t cols : {1u, 4u, 5u, 17u}) {
      const auto m = random_vec(rng, rows * cols);
      const auto x = random_vec(rng, cols);
      std::vector<double> y1(rows), y2(rows);
      simd::matvec(m, rows, cols, x, y1);
      simd::scalar::matvec(m, rows, cols, x, y2);
      for (std::size_t r = 0; r < rows; ++r) CHECK(close(y1[r], y2[r], 4.0 * cols));
    }
  }
}

TEST_CASE("each level is deterministic") {
  LevelGuard guard;
  std::mt19937_64 rng(11);
  const auto a = random_vec(rng, 1001);
  const auto b = random_vec(rng, 1001);
  for (simd::Level level : {simd::Level::Scalar, simd::detected_level()}) {
    simd::force_level(level);
    const double first = simd::dot(a, b);
    for (int i = 0; i < 5; ++i) CHECK(simd::dot(a, b) == first);
  }
}
