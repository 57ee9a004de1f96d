#include "haar/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "haar/error.hpp"
#include "haar/simd/kernels.hpp"

namespace haar {
namespace {

void require_size(std::size_t got, const HaarSystem& sys, const char* what) {
  if (got != sys.size()) {
    std::ostringstream msg;
    msg << what << " has " << got << " entries but the groupoid has " << sys.size() << " points";
    throw InputError(msg.str());
  }
}

void require_normalized(const Potential& v, const HaarSystem& sys, const char* op) {
  const double r = normalization_residual(v, sys);
  if (!(r <= kCheckTol)) {
    std::ostringstream msg;
    msg << op << ": potential is not Haar-normalized (max |U~ - 1| = " << r
        << "); call normalize() first";
    throw ValidationError(msg.str());
  }
}

// Per-class sums of e^U * f * nu_hat.
std::vector<double> weighted_class_sums(std::span<const double> exp_u, std::span<const double> f,
                                        const HaarSystem& sys) {
  std::vector<double> out(sys.num_classes());
  std::vector<double> eu;
  std::vector<double> fv;
  for (std::size_t c = 0; c < sys.num_classes(); ++c) {
    sys.gather(c, exp_u, eu);
    sys.gather(c, f, fv);
    out[c] = simd::dot3(eu, fv, sys.class_weights(c));
  }
  return out;
}

std::vector<double> class_masses(const Measure& m, const FiniteGroupoid& g) {
  std::vector<double> out(g.num_classes(), 0.0);
  for (std::size_t x = 0; x < g.size(); ++x) out[g.class_of(x)] += m[x];
  return out;
}

void check_tests(std::span<const PairFunction> tests, std::size_t n) {
  for (const auto& f : tests) {
    if (f.n != n || f.values.size() != n * n) {
      throw InputError("test function size does not match the groupoid");
    }
  }
}

}  // namespace

std::vector<double> ClassFunction::lift() const {
  std::vector<double> out(groupoid.size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = at_point(x);
  return out;
}

ClassFunction restrict_to_classes(const FiniteGroupoid& groupoid, std::span<const double> f) {
  if (f.size() != groupoid.size()) throw InputError("function size does not match the groupoid");
  ClassFunction g{groupoid, std::vector<double>(groupoid.num_classes())};
  for (std::size_t c = 0; c < groupoid.num_classes(); ++c) g.per_class[c] = f[groupoid.members(c)[0]];
  return g;
}

std::vector<double> exp_values(const Potential& u) {
  std::vector<double> out(u.size());
  std::transform(u.values.begin(), u.values.end(), out.begin(), [](double v) { return std::exp(v); });
  return out;
}

ClassFunction u_tilde(const Potential& u, const HaarSystem& sys) {
  require_size(u.size(), sys, "potential");
  const std::vector<double> eu = exp_values(u);
  ClassFunction out{sys.groupoid(), std::vector<double>(sys.num_classes())};
  std::vector<double> buf;
  for (std::size_t c = 0; c < sys.num_classes(); ++c) {
    sys.gather(c, eu, buf);
    out.per_class[c] = simd::dot(buf, sys.class_weights(c));
  }
  return out;
}

Potential normalize(const Potential& u, const HaarSystem& sys) {
  const ClassFunction ut = u_tilde(u, sys);
  std::vector<double> v(u.size());
  for (std::size_t x = 0; x < v.size(); ++x) v[x] = u[x] - std::log(ut.at_point(x));
  return Potential(std::move(v));
}

double normalization_residual(const Potential& v, const HaarSystem& sys) {
  const ClassFunction vt = u_tilde(v, sys);
  double r = 0.0;
  for (double t : vt.per_class) r = std::max(r, std::abs(t - 1.0));
  return r;
}

bool is_haar_normalized(const Potential& v, const HaarSystem& sys, double tol) {
  return normalization_residual(v, sys) <= tol;
}

ClassFunction apply_h(const Potential& u, std::span<const double> f, const HaarSystem& sys) {
  require_size(u.size(), sys, "potential");
  require_size(f.size(), sys, "function");
  const std::vector<double> eu = exp_values(u);
  return ClassFunction{sys.groupoid(), weighted_class_sums(eu, f, sys)};
}

double eigen_residual(const Potential& u, const ClassFunction& g, double lambda,
                      const HaarSystem& sys) {
  const std::vector<double> gp = g.lift();
  const ClassFunction hg = apply_h(u, gp, sys);
  double r = 0.0;
  for (std::size_t c = 0; c < sys.num_classes(); ++c) {
    r = std::max(r, std::abs(hg.per_class[c] - lambda * g.per_class[c]));
  }
  return r;
}

Measure dual_apply(const Potential& v, const Measure& m, const HaarSystem& sys) {
  require_size(v.size(), sys, "potential");
  require_size(m.size(), sys, "measure");
  require_normalized(v, sys, "dual_apply");
  const auto& g = sys.groupoid();
  const std::vector<double> totals = class_masses(m, g);
  const std::vector<double> ev = exp_values(v);
  std::vector<double> out(sys.size());
  for (std::size_t x = 0; x < out.size(); ++x) {
    out[x] = ev[x] * sys.nu_hat().weight(x) * totals[g.class_of(x)];
  }
  return Measure(std::move(out));
}

Measure invariant_from_seed(const Potential& v, const Measure& mu, const HaarSystem& sys) {
  require_size(mu.size(), sys, "seed measure");
  if (!mu.is_probability()) throw ValidationError("invariant_from_seed: seed is not a probability");
  return dual_apply(v, mu, sys);
}

PairFunction PairFunction::indicator(std::size_t n, std::size_t x, std::size_t y) {
  PairFunction f{n, std::vector<double>(n * n, 0.0)};
  f.values[x * n + y] = 1.0;
  return f;
}

InvarianceResidual verify_haar_invariance(const Measure& m, const Potential& v,
                                          const HaarSystem& sys) {
  require_size(m.size(), sys, "measure");
  require_size(v.size(), sys, "potential");
  require_normalized(v, sys, "verify_haar_invariance");
  const auto& g = sys.groupoid();
  const std::vector<double> ev = exp_values(v);
  const auto& nu = sys.nu_hat();
  InvarianceResidual out;
  // Indicator of (p, q): LHS = M(p) e^{V(q)} nu(q), RHS = M(q) e^{V(p)} nu(p).
  for (std::size_t c = 0; c < g.num_classes(); ++c) {
    for (std::size_t p : g.members(c)) {
      for (std::size_t q : g.members(c)) {
        const double lhs = m[p] * ev[q] * nu.weight(q);
        const double rhs = m[q] * ev[p] * nu.weight(p);
        const double r = std::abs(lhs - rhs);
        if (r > out.max_residual) out = {r, {p, q}};
      }
    }
  }
  return out;
}

InvarianceResidual verify_haar_invariance(const Measure& m, const Potential& v,
                                          const HaarSystem& sys,
                                          std::span<const PairFunction> tests) {
  require_size(m.size(), sys, "measure");
  require_size(v.size(), sys, "potential");
  require_normalized(v, sys, "verify_haar_invariance");
  check_tests(tests, sys.size());
  const auto& g = sys.groupoid();
  const std::vector<double> ev = exp_values(v);
  const auto& nu = sys.nu_hat();
  InvarianceResidual out;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const PairFunction& f = tests[t];
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t y = 0; y < g.size(); ++y) {
      if (m[y] == 0.0) continue;
      double inner_l = 0.0;
      double inner_r = 0.0;
      for (std::size_t x : g.members(g.class_of(y))) {
        const double w = ev[x] * nu.weight(x);
        inner_l += f(y, x) * w;
        inner_r += f(x, y) * w;
      }
      lhs += m[y] * inner_l;
      rhs += m[y] * inner_r;
    }
    const double r = std::abs(lhs - rhs);
    if (r > out.max_residual) out = {r, {t, 0}};
  }
  return out;
}

InvarianceResidual verify_quasi_invariance(const Measure& m, const ModularFunction& delta,
                                           const HaarSystem& sys) {
  require_size(m.size(), sys, "measure");
  const auto& g = sys.groupoid();
  const auto& nu = sys.nu_hat();
  InvarianceResidual out;
  // Indicator of (p, q): LHS = M(p) nu(q), RHS = M(q) delta(p,q)^{-1} nu(p).
  for (std::size_t c = 0; c < g.num_classes(); ++c) {
    for (std::size_t p : g.members(c)) {
      for (std::size_t q : g.members(c)) {
        const double lhs = m[p] * nu.weight(q);
        const double rhs = m[q] * nu.weight(p) / delta(p, q);
        const double r = std::abs(lhs - rhs);
        if (r > out.max_residual) out = {r, {p, q}};
      }
    }
  }
  return out;
}

InvarianceResidual verify_quasi_invariance(const Measure& m, const ModularFunction& delta,
                                           const HaarSystem& sys,
                                           std::span<const PairFunction> tests) {
  require_size(m.size(), sys, "measure");
  check_tests(tests, sys.size());
  const auto& g = sys.groupoid();
  const auto& nu = sys.nu_hat();
  InvarianceResidual out;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const PairFunction& f = tests[t];
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t y = 0; y < g.size(); ++y) {
      if (m[y] == 0.0) continue;
      double inner_l = 0.0;
      double inner_r = 0.0;
      for (std::size_t x : g.members(g.class_of(y))) {
        inner_l += f(y, x) * nu.weight(x);
        inner_r += f(x, y) * nu.weight(x) / delta(x, y);
      }
      lhs += m[y] * inner_l;
      rhs += m[y] * inner_r;
    }
    const double r = std::abs(lhs - rhs);
    if (r > out.max_residual) out = {r, {t, 0}};
  }
  return out;
}

}  // namespace haar
