#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "haar/error.hpp"
#include "haar/thermo.hpp"
#include "support.hpp"

using namespace haar;

namespace {

struct RandomLambda {
  testing::RandomSystem r;
  TransverseMeasure lambda;
};

RandomLambda random_lambda(std::mt19937_64& rng) {
  auto r = testing::random_system(rng);
  const std::size_t n = r.nu.size();
  Potential v = normalize(Potential(testing::uniform_vector(rng, n, -3, 3)), r.sys);
  Measure m = invariant_from_seed(v, Measure(testing::random_probability(rng, n)), r.sys);
  TransverseMeasure lambda(r.sys, std::move(v), std::move(m));
  return RandomLambda{std::move(r), std::move(lambda)};
}

double integral(const std::vector<double>& f, const Measure& m) {
  double s = 0.0;
  for (std::size_t x = 0; x < f.size(); ++x) s += f[x] * m[x];
  return s;
}

}  // namespace

TEST_CASE("G4 entropy and pressure") {
  const auto f = testing::g4();
  const Equilibrium eq = equilibrium_for(f.u, f.sys);
  const double expect_h = -(std::log(2.0 / 3.0) / 3.0 + 2.0 * std::log(4.0 / 3.0) / 3.0);
  CHECK(entropy(eq.lambda) == doctest::Approx(expect_h).epsilon(1e-15));
  CHECK(std::abs(entropy(eq.lambda) - (-0.056633)) <= 1e-6);
  CHECK(eq.pressure.value == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(std::abs(eq.pressure.value - 1.098612) <= 1e-6);
  CHECK(eq.pressure.argmax_classes == std::vector<std::size_t>{0});
  CHECK(eq.seed_point == 0);
  CHECK(testing::max_abs_diff(eq.lambda.base().mass, {1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0}) <= 1e-15);
}

TEST_CASE("pressure ties are reported, lowest class seeds the equilibrium") {
  const auto f = testing::g4();
  const Potential tie({0.0, 0.0, std::log(0.5), std::log(1.5)});  // U~ = (1, 1)
  const PressureResult p = pressure(tie, f.sys);
  CHECK(p.value == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(p.argmax_classes == std::vector<std::size_t>{0, 1});
  CHECK(equilibrium_for(tie, f.sys).seed_point == 0);
}

TEST_CASE("pressure of a transverse function goes through its density") {
  const auto f = testing::g4();
  const TransverseFunction nu(f.sys.groupoid(), {0.25, 0.75, 1.0, 0.0});
  // U = nu / nu_hat = (0.5, 1.5, 2, 0).
  const double expect = std::log(0.5 * (std::exp(2.0) + 1.0));
  const PressureResult p = pressure(nu, f.sys);
  CHECK(p.value == doctest::Approx(expect).epsilon(1e-15));
  CHECK(p.argmax_classes == std::vector<std::size_t>{1});
}

TEST_CASE("entropy is nonpositive and the Jacobian bounds every normalized F") {
  std::mt19937_64 rng(301);
  for (int trial = 0; trial < 30; ++trial) {
    const auto [r, lambda] = random_lambda(rng);
    const double h = entropy(lambda);
    CHECK(h <= 1e-15);
    const double jv = integral(lambda.modulus().values, lambda.base());
    CHECK(h == doctest::Approx(-jv).epsilon(1e-14));
    const NormalizedFamily fam = make_normalized_family(r.sys, {lambda.modulus()}, 100, 7 + trial);
    for (const auto& u : fam.members) CHECK(integral(u.values, lambda.base()) <= jv + 1e-12);
    CHECK(std::abs(entropy_sup_estimate(lambda, fam) - h) <= 1e-12);
    // Without V in the family the estimate is a one-sided bound.
    const NormalizedFamily draws = make_normalized_family(r.sys, {}, 100, 99 + trial);
    CHECK(entropy_sup_estimate(lambda, draws) >= h - 1e-12);
  }
}

TEST_CASE("normalized families are reproducible and validated") {
  const auto f = testing::g4();
  const NormalizedFamily a = make_normalized_family(f.sys, {}, 10, 5);
  const NormalizedFamily b = make_normalized_family(f.sys, {}, 10, 5);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a.members[i].values == b.members[i].values);
  for (const auto& u : a.members) CHECK(is_haar_normalized(u, f.sys));
  CHECK_THROWS_AS(make_normalized_family(f.sys, {f.u}, 0, 1), ValidationError);
}

TEST_CASE("variational pressure: bounded by the closed form, attained by the equilibrium") {
  std::mt19937_64 rng(302);
  for (int trial = 0; trial < 30; ++trial) {
    const auto r = testing::random_system(rng);
    const std::size_t n = r.nu.size();
    const Potential u(testing::uniform_vector(rng, n, -2, 2));
    const PressureResult p = pressure(u, r.sys);
    std::vector<PressureSample> samples;
    for (int i = 0; i < 20; ++i) {
      const Potential v = normalize(Potential(testing::uniform_vector(rng, n, -3, 3)), r.sys);
      samples.push_back({v, invariant_from_seed(v, Measure(testing::random_probability(rng, n)), r.sys)});
    }
    CHECK(pressure_variational_estimate(u, r.sys, samples) <= p.value + 1e-12);
    const Equilibrium eq = equilibrium_for(u, r.sys);
    samples.push_back({eq.lambda.modulus(), eq.lambda.base()});
    CHECK(std::abs(pressure_variational_estimate(u, r.sys, samples) - p.value) <= 1e-12);
    // Oracle: max over classes of log sum e^U nu.
    double best = -INFINITY;
    for (double s : testing::oracle_u_tilde(r, u.values)) best = std::max(best, std::log(s));
    CHECK(p.value == doctest::Approx(best).epsilon(1e-14));
  }
}

TEST_CASE("Legendre involution") {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [r, lambda] = random_lambda(rng);
    std::vector<TransverseFunction> candidates;
    for (int i = 0; i < 20; ++i) {
      candidates.push_back(density(testing::uniform_vector(rng, r.nu.size(), -3, 3), r.sys.nu_hat()));
    }
    // Random candidates alone only bound h from above.
    CHECK(involution_check(lambda, candidates).residual >= -1e-12);
    candidates.push_back(density(lambda.modulus().values, r.sys.nu_hat()));
    const InvolutionResult res = involution_check(lambda, candidates);
    CHECK(std::abs(res.residual) <= 1e-10);
    CHECK(res.best_candidate == candidates.size() - 1);
  }
  const auto f = testing::g4();
  const Potential v = normalize(f.u, f.sys);
  const TransverseMeasure lambda(f.sys, v, invariant_from_seed(v, Measure::uniform(4), f.sys));
  CHECK_THROWS_AS(involution_check(lambda, {}), InputError);
}

TEST_CASE("extremal closed forms") {
  std::mt19937_64 rng(304);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7;
    auto pg = build_partition_groupoid(PointSpace(testing::point_labels(n)),
                                       std::vector<std::vector<std::size_t>>{[&] {
                                         std::vector<std::size_t> all(n);
                                         for (std::size_t i = 0; i < n; ++i) all[i] = i;
                                         return all;
                                       }()});
    const HaarSystem pair(pg, TransverseFunction(pg, testing::random_probability(rng, n)));
    const Potential u(testing::uniform_vector(rng, n, -2, 2));
    const ExtremalReport rp = extremal_closed_forms(ExtremalCase::Pair, u, pair);
    CHECK(rp.max_discrepancy() <= 1e-12);
    double z = 0.0;
    for (std::size_t x = 0; x < n; ++x) z += std::exp(u[x]) * pair.nu_hat().weight(x);
    CHECK(rp.pressure_closed_form == doctest::Approx(std::log(z)).epsilon(1e-15));

    std::vector<std::vector<std::size_t>> singletons(n);
    for (std::size_t i = 0; i < n; ++i) singletons[i] = {i};
    auto tg = build_partition_groupoid(PointSpace(testing::point_labels(n)), singletons);
    const HaarSystem trivial(tg, TransverseFunction::uniform(tg));
    const ExtremalReport rt = extremal_closed_forms(ExtremalCase::Trivial, u, trivial);
    CHECK(rt.max_discrepancy() <= 1e-12);
    CHECK(std::abs(rt.entropy_generic) <= 1e-15);
    CHECK_THROWS_AS(extremal_closed_forms(ExtremalCase::Pair, u, trivial), InputError);
    CHECK_THROWS_AS(extremal_closed_forms(ExtremalCase::Trivial, u, pair), InputError);
  }
}
