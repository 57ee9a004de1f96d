#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "haar/error.hpp"
#include "haar/groupoid.hpp"
#include "support.hpp"

using namespace haar;

namespace {

FiniteGroupoid two_by_two() {
  return build_partition_groupoid(PointSpace({"p1", "p2", "p3", "p4"}),
                                  std::vector<std::vector<std::string>>{{"p1", "p2"}, {"p3", "p4"}});
}

template <class F>
std::string error_text(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("point spaces index labels and reject duplicates") {
  PointSpace s({"a", "b", "c"});
  CHECK(s.size() == 3);
  CHECK(s.index_of("b") == 1);
  CHECK_FALSE(s.find("z").has_value());
  CHECK_THROWS_AS(s.index_of("z"), InputError);
  CHECK(error_text([&] { s.index_of("zz"); }).find("zz") != std::string::npos);
  CHECK_THROWS_AS(PointSpace({"a", "a"}), InputError);
  CHECK_THROWS_AS(PointSpace({"a", ""}), InputError);
}

TEST_CASE("partition groupoids") {
  const FiniteGroupoid g = two_by_two();
  CHECK(g.size() == 4);
  CHECK(g.num_classes() == 2);
  CHECK(g.related(0, 1));
  CHECK_FALSE(g.related(1, 2));
  CHECK(g.class_label(1) == "C2");
  CHECK(g.class_index("C2") == 1);
  CHECK_THROWS_AS(g.class_index("C3"), InputError);
  CHECK(g.same_as(two_by_two()));

  const std::string overlap = error_text([] {
    build_partition_groupoid(PointSpace({"p1", "p2"}),
                             std::vector<std::vector<std::string>>{{"p1", "p2"}, {"p2"}});
  });
  CHECK(overlap.find("'p2'") != std::string::npos);
  const std::string uncovered = error_text([] {
    build_partition_groupoid(PointSpace({"p1", "p2", "p3"}),
                             std::vector<std::vector<std::string>>{{"p1", "p2"}});
  });
  CHECK(uncovered.find("'p3'") != std::string::npos);
}

TEST_CASE("fiber groupoids of a map") {
  // T(a) = b, T(b) = a, T(c) = a: fibers {b, c} and {a}.
  const FiniteGroupoid g =
      build_fiber_groupoid(PointSpace({"a", "b", "c"}), {{"a", "b"}, {"b", "a"}, {"c", "a"}});
  CHECK(g.num_classes() == 2);
  CHECK(g.related(1, 2));
  CHECK_FALSE(g.related(0, 1));
  // Classes come in order of their smallest member.
  CHECK(g.members(0)[0] == 0);
  CHECK_THROWS_AS(build_fiber_groupoid(PointSpace({"a", "b"}), {{"a", "b"}}), InputError);
  CHECK_THROWS_AS(build_fiber_groupoid(PointSpace({"a"}), {{"a", "z"}}), InputError);
}

TEST_CASE("potentials and measures validate their values") {
  CHECK_THROWS_AS(Potential({0.0, INFINITY}), InputError);
  CHECK_THROWS_AS(Potential({NAN}), InputError);
  CHECK_THROWS_AS(Measure({0.5, -0.1}), InputError);
  CHECK(Measure::uniform(4).is_probability());
  CHECK(Measure::point_mass(3, 2)[2] == 1.0);
}

TEST_CASE("transverse functions") {
  const FiniteGroupoid g = two_by_two();
  const TransverseFunction u = TransverseFunction::uniform(g);
  CHECK(u.is_probability());
  CHECK(u.weight(0) == 0.5);
  CHECK(validate_transverse(u.as_kernel()).ok);
  CHECK(TransverseFunction::from_kernel(u.as_kernel()).weight(3) == 0.5);

  const TransverseFunction f(g, {1.0, 3.0, 2.0, 2.0});
  const TransverseFunction n = f.normalized();
  CHECK(n.weight(0) == doctest::Approx(0.25));
  CHECK(n.weight(1) == doctest::Approx(0.75));
  CHECK_THROWS_AS(TransverseFunction(g, {0.0, 0.0, 1.0, 1.0}).normalized(), ValidationError);

  const TransverseFunction s(g, {1.0, -2.0, 0.5, 0.0});
  CHECK_FALSE(s.is_nonnegative());
  CHECK(s.positive_part().weight(1) == 0.0);
  CHECK(s.negative_part().weight(1) == 2.0);
  CHECK_FALSE(validate_transverse(s.as_kernel()).ok);

  const TransverseFunction d = density(std::vector<double>{2.0, 4.0, 1.0, 1.0}, u);
  CHECK(d.weight(1) == 2.0);
}

TEST_CASE("kernel validation reports the first violation") {
  const FiniteGroupoid g = two_by_two();
  // Row p1 puts mass on p3, outside its class.
  std::vector<double> rows(16, 0.0);
  rows[0 * 4 + 0] = 1.0;
  rows[0 * 4 + 2] = 0.5;
  rows[1 * 4 + 1] = 1.0;
  rows[2 * 4 + 2] = 1.0;
  rows[3 * 4 + 3] = 1.0;
  const ValidationReport support = validate_support(Kernel(g, rows));
  CHECK_FALSE(support.ok);
  REQUIRE(support.witness.has_value());
  CHECK(support.witness->first == 0);
  CHECK(support.witness->second == 2);

  // Identity kernel: supported, but nu^p1 != nu^p2.
  const ValidationReport ident = validate_transverse(Kernel::identity(g));
  CHECK_FALSE(ident.ok);
  CHECK(ident.failure.find("differs") != std::string::npos);
  CHECK_THROWS_AS(TransverseFunction::from_kernel(Kernel::identity(g)), ValidationError);
}

TEST_CASE("kernel convolution matches the triple loop") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto r = testing::random_system(rng, 12, 4);
    const auto& g = r.sys.groupoid();
    const std::size_t n = g.size();
    auto random_kernel = [&] {
      std::vector<double> rows(n * n, 0.0);
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x : r.classes[r.class_of[y]]) rows[y * n + x] = testing::uniform_vector(rng, 1, -1, 1)[0];
      }
      return rows;
    };
    const auto a = random_kernel();
    const auto b = random_kernel();
    const Kernel c = kernel_convolve(Kernel(g, a), Kernel(g, b));
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t s = 0; s < n; ++s) {
        double expect = 0.0;
        for (std::size_t x = 0; x < n; ++x) expect += a[y * n + x] * b[x * n + s];
        CHECK(c(y, s) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
    // The identity kernel is a unit for convolution.
    const Kernel id = kernel_convolve(Kernel::identity(g), Kernel(g, a));
    for (std::size_t i = 0; i < n * n; ++i) CHECK(id.data()[i] == doctest::Approx(a[i]));
  }
  const FiniteGroupoid g = two_by_two();
  std::vector<double> bad(16, 0.0);
  bad[1 * 4 + 3] = 1.0;
  CHECK_THROWS_AS(kernel_convolve(Kernel(g, bad), Kernel::identity(g)), ValidationError);
}

TEST_CASE("modular functions and the cocycle identity") {
  const FiniteGroupoid g = two_by_two();
  const ModularFunction e = ModularFunction::exponential(Potential({0.3, -1.0, 2.0, 0.0}));
  CHECK(e(0, 1) == doctest::Approx(std::exp(-1.3)));
  CHECK(validate_modular(e, g, 1e-12).ok);

  ModularFunction::Table t{{{0, 1}, 2.0}, {{1, 0}, 0.5}, {{2, 3}, 3.0}, {{3, 2}, 1.0 / 3.0}};
  const ModularFunction good = ModularFunction::table(t);
  CHECK(good(2, 2) == 1.0);  // diagonal defaults to 1
  CHECK(validate_modular(good, g, 1e-12).ok);

  t[{3, 2}] = 0.5;  // delta(p3,p4) delta(p4,p3) != 1
  const ValidationReport broken = validate_modular(ModularFunction::table(t), g, 1e-12);
  CHECK_FALSE(broken.ok);
  CHECK(broken.failure.find("cocycle") != std::string::npos);

  ModularFunction::Table missing{{{0, 1}, 2.0}};
  CHECK_THROWS_AS(validate_modular(ModularFunction::table(missing), g, 1e-12), InputError);

  ModularFunction::Table negative{{{0, 1}, -1.0}, {{1, 0}, -1.0}, {{2, 3}, 1.0}, {{3, 2}, 1.0}};
  CHECK_FALSE(validate_modular(ModularFunction::table(negative), g, 1e-12).ok);
}

TEST_CASE("saturation") {
  const FiniteGroupoid g = two_by_two();
  CHECK(saturation_check(Measure({1.0 / 3.0, 2.0 / 3.0, 0.0, 0.0}), g).ok);
  CHECK(saturation_check(Measure::uniform(4), g).ok);
  const SaturationResult point = saturation_check(Measure::point_mass(4, 0), g);
  CHECK_FALSE(point.ok);
  REQUIRE(point.witness_class.has_value());
  CHECK(*point.witness_class == 0);
  CHECK(saturation_check(Measure::point_mass(4, 3), g).witness_class == std::optional<std::size_t>(1));
}

TEST_CASE("Haar systems need a probability nu_hat") {
  const FiniteGroupoid g = two_by_two();
  CHECK_NOTHROW(HaarSystem(g, TransverseFunction::uniform(g)));
  CHECK_THROWS_AS(HaarSystem(g, TransverseFunction(g, {1.0, 1.0, 0.5, 0.5})), ValidationError);
  CHECK_THROWS_AS(HaarSystem(g, TransverseFunction(g, {1.5, -0.5, 0.5, 0.5})), ValidationError);
  const HaarSystem sys(g, TransverseFunction(g, {0.25, 0.75, 1.0, 0.0}));
  CHECK(sys.class_weights(0)[1] == 0.75);
}
