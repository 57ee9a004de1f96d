#pragma once
// Random fixtures and naive reference computations for the tests. The
// oracles work on plain vectors and class index lists, written straight
// from the defining formulas, and never call the library's arithmetic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "haar/groupoid.hpp"
#include "haar/transfer.hpp"

namespace testing {

using Classes = std::vector<std::vector<std::size_t>>;

struct RandomSystem {
  Classes classes;
  std::vector<std::size_t> class_of;
  std::vector<double> nu;  // nu_hat weights
  haar::HaarSystem sys;
};

inline std::vector<std::string> point_labels(std::size_t n) {
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = "x" + std::to_string(i);
  return out;
}

/// n points in k nonempty classes, nu_hat positive and normalized per class.
inline RandomSystem random_system(std::mt19937_64& rng, std::size_t max_points = 64,
                                  std::size_t max_classes = 8) {
  std::uniform_int_distribution<std::size_t> kd(1, max_classes);
  const std::size_t k = kd(rng);
  std::uniform_int_distribution<std::size_t> nd(k, std::max(k, max_points));
  const std::size_t n = nd(rng);
  std::vector<std::size_t> class_of(n);
  std::uniform_int_distribution<std::size_t> cd(0, k - 1);
  for (std::size_t x = 0; x < n; ++x) class_of[x] = x < k ? x : cd(rng);
  std::shuffle(class_of.begin(), class_of.end(), rng);
  Classes classes(k);
  for (std::size_t x = 0; x < n; ++x) classes[class_of[x]].push_back(x);
  std::uniform_real_distribution<double> wd(0.05, 1.0);
  std::vector<double> nu(n);
  for (const auto& c : classes) {
    double total = 0.0;
    for (std::size_t x : c) total += nu[x] = wd(rng);
    for (std::size_t x : c) nu[x] /= total;
  }
  auto g = haar::build_partition_groupoid(haar::PointSpace(point_labels(n)), classes);
  haar::HaarSystem sys(g, haar::TransverseFunction(g, nu));
  return RandomSystem{std::move(classes), std::move(class_of), std::move(nu), std::move(sys)};
}

inline std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline std::vector<double> random_probability(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v = uniform_vector(rng, n, 0.0, 1.0);
  double total = 0.0;
  for (double x : v) total += x;
  for (double& x : v) x /= total;
  return v;
}

// ----- oracles --------------------------------------------------------------

/// U~(C) = sum_{x in C} e^{U(x)} nu(x).
inline std::vector<double> oracle_u_tilde(const RandomSystem& r, const std::vector<double>& u) {
  std::vector<double> out(r.classes.size(), 0.0);
  for (std::size_t c = 0; c < r.classes.size(); ++c) {
    for (std::size_t x : r.classes[c]) out[c] += std::exp(u[x]) * r.nu[x];
  }
  return out;
}

/// M(x) = e^{V(x)} nu(x) seed([x]).
inline std::vector<double> oracle_invariant(const RandomSystem& r, const std::vector<double>& v,
                                            const std::vector<double>& seed) {
  std::vector<double> out(v.size());
  for (const auto& c : r.classes) {
    double mass = 0.0;
    for (std::size_t x : c) mass += seed[x];
    for (std::size_t x : c) out[x] = std::exp(v[x]) * r.nu[x] * mass;
  }
  return out;
}

/// Lambda(w) = sum_C M(C) sum_{x in C} e^{V(x)} w(x).
inline double oracle_lambda(const RandomSystem& r, const std::vector<double>& v,
                            const std::vector<double>& m, const std::vector<double>& w) {
  double total = 0.0;
  for (const auto& c : r.classes) {
    double mass = 0.0;
    double inner = 0.0;
    for (std::size_t x : c) {
      mass += m[x];
      inner += std::exp(v[x]) * w[x];
    }
    total += mass * inner;
  }
  return total;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

/// The four-point fixture: classes {p1,p2},{p3,p4}, uniform nu_hat, e^U = (2,4,1,1).
struct G4 {
  haar::HaarSystem sys;
  haar::Potential u;
};

inline G4 g4() {
  auto g = haar::build_partition_groupoid(
      haar::PointSpace({"p1", "p2", "p3", "p4"}),
      std::vector<std::vector<std::string>>{{"p1", "p2"}, {"p3", "p4"}});
  haar::HaarSystem sys(g, haar::TransverseFunction::uniform(g));
  return G4{sys, haar::Potential({std::log(2.0), std::log(4.0), 0.0, 0.0})};
}

}  // namespace testing
