#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "haar/error.hpp"
#include "haar/transverse.hpp"
#include "support.hpp"

using namespace haar;
using testing::max_abs_diff;

namespace {

struct RandomLambda {
  testing::RandomSystem r;
  Potential v;
  Measure m;
};

RandomLambda random_lambda(std::mt19937_64& rng) {
  auto r = testing::random_system(rng);
  const std::size_t n = r.nu.size();
  Potential v = normalize(Potential(testing::uniform_vector(rng, n, -3, 3)), r.sys);
  Measure m = invariant_from_seed(v, Measure(testing::random_probability(rng, n)), r.sys);
  return RandomLambda{std::move(r), std::move(v), std::move(m)};
}

}  // namespace

TEST_CASE("G4: Lambda(F nu_hat) = int F dM") {
  const auto f = testing::g4();
  const Potential v = normalize(f.u, f.sys);
  const TransverseMeasure lambda(f.sys, v, invariant_from_seed(v, Measure::point_mass(4, 0), f.sys));
  const std::vector<double> F{1.0, 2.0, 3.0, 4.0};
  CHECK(lambda_eval(lambda, density(F, f.sys.nu_hat())) == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(density_identity_check(lambda, F) <= 1e-15);
  CHECK(lambda_eval(lambda, f.sys.nu_hat()) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("construction validates the pair (V, M)") {
  const auto f = testing::g4();
  const Potential v = normalize(f.u, f.sys);
  CHECK_THROWS_AS(TransverseMeasure(f.sys, f.u, Measure({1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0})),
                  ValidationError);
  CHECK_THROWS_AS(TransverseMeasure(f.sys, v, Measure::uniform(4)), ValidationError);
  CHECK_THROWS_AS(TransverseMeasure(f.sys, v, Measure({1.0, 2.0, 0.0, 0.0})), ValidationError);
  CHECK_THROWS_AS(TransverseMeasure(f.sys, v, Measure({1.0, 0.0})), InputError);
}

TEST_CASE("lambda_eval matches the oracle, both forms, and is linear") {
  std::mt19937_64 rng(201);
  for (int trial = 0; trial < 100; ++trial) {
    const auto L = random_lambda(rng);
    const TransverseMeasure lambda(L.r.sys, L.v, L.m);
    const std::size_t n = L.r.nu.size();
    const auto w1 = testing::uniform_vector(rng, n, 0, 1);
    const auto w2 = testing::uniform_vector(rng, n, -1, 1);
    const auto& g = L.r.sys.groupoid();
    const TransverseFunction nu1(g, w1), nu2(g, w2);
    const double a = lambda_eval(lambda, nu1);
    CHECK(a == doctest::Approx(testing::oracle_lambda(L.r, L.v.values, L.m.mass, w1)).epsilon(1e-12));
    CHECK(lambda_eval_relative(lambda, nu1) == doctest::Approx(a).epsilon(1e-12));
    const double b = lambda_eval(lambda, nu2);
    CHECK(b == doctest::Approx(testing::oracle_lambda(L.r, L.v.values, L.m.mass, w2)).epsilon(1e-10));
    std::vector<double> combo(n);
    for (std::size_t x = 0; x < n; ++x) combo[x] = 2.0 * w1[x] - 3.0 * w2[x];
    CHECK(std::abs(lambda_eval(lambda, TransverseFunction(g, combo)) - (2.0 * a - 3.0 * b)) <= 1e-12);
  }
}

TEST_CASE("M -> Lambda -> M round trip") {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 50; ++trial) {
    const auto L = random_lambda(rng);
    const TransverseMeasure lambda(L.r.sys, L.v, L.m);
    const Measure back = measure_from_transverse(
        L.r.sys, [&](const TransverseFunction& nu) { return lambda_eval(lambda, nu); }, L.v);
    CHECK(max_abs_diff(back.mass, L.m.mass) <= 1e-14);
  }
  const auto f = testing::g4();
  const Potential v = normalize(f.u, f.sys);
  CHECK_THROWS_AS(measure_from_transverse(
                      f.sys, [](const TransverseFunction& nu) { return 2.0 * nu.weight(0); }, v),
                  ValidationError);
}

TEST_CASE("invariance axiom under nu -> nu * (delta lambda)") {
  std::mt19937_64 rng(203);
  for (int trial = 0; trial < 50; ++trial) {
    const auto L = random_lambda(rng);
    const TransverseMeasure lambda(L.r.sys, L.v, L.m);
    const auto& g = L.r.sys.groupoid();
    const std::size_t n = g.size();
    const TransverseFunction nu1(g, testing::uniform_vector(rng, n, 0, 1));
    const CocoResult structured = coco_invariance_check(lambda, nu1, jacobian_kernel(L.r.sys, L.v));
    CHECK(structured.residual <= 1e-12);
    CHECK(structured.transverse.ok);
    std::vector<double> rows(n * n, 0.0);
    for (std::size_t y = 0; y < n; ++y) {
      const auto& cls = L.r.classes[L.r.class_of[y]];
      const auto w = testing::random_probability(rng, cls.size());
      for (std::size_t i = 0; i < cls.size(); ++i) rows[y * n + cls[i]] = w[i];
    }
    CHECK(coco_invariance_check(lambda, nu1, Kernel(g, rows)).residual <= 1e-12);
  }
  const auto f = testing::g4();
  const Potential v = normalize(f.u, f.sys);
  const TransverseMeasure lambda(f.sys, v, invariant_from_seed(v, Measure::uniform(4), f.sys));
  const auto& g = f.sys.groupoid();
  std::vector<double> neg{1.5, -0.5, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0,
                          0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(coco_invariance_check(lambda, f.sys.nu_hat(), Kernel(g, neg)), ValidationError);
  std::vector<double> heavy{1.0, 1.0, 0.0, 0.0, 0.5, 0.5, 0.0, 0.0,
                            0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(coco_invariance_check(lambda, f.sys.nu_hat(), Kernel(g, heavy)), ValidationError);
}

TEST_CASE("the Jacobian kernel has unit rows") {
  const auto f = testing::g4();
  const Potential v = normalize(f.u, f.sys);
  const Kernel k = jacobian_kernel(f.sys, v);
  CHECK(k(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(k(1, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(k(2, 3) == doctest::Approx(0.5));
  CHECK(validate_transverse(k).ok);
}
