#pragma once
// The transfer operator H_U(f)(y) = sum_{x ~ y} e^{U(x)} f(x) nu_hat(x) of a
// Haar system, Haar normalization of potentials, and Haar-invariant
// probabilities (fixed points of the dual operator).

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "haar/groupoid.hpp"

namespace haar {

/// Residual bound for the invariance identities.
inline constexpr double kInvarianceTol = 1e-10;

/// A function on points that is constant on classes, stored per class.
struct ClassFunction {
  FiniteGroupoid groupoid;
  std::vector<double> per_class;

  double at_point(std::size_t x) const { return per_class[groupoid.class_of(x)]; }
  std::vector<double> lift() const;
};

/// Lift a point function known to be class-constant; the value at the first
/// member of each class is used.
ClassFunction restrict_to_classes(const FiniteGroupoid& groupoid, std::span<const double> f);

/// U~(C) = sum_{x in C} e^{U(x)} nu_hat(x).
ClassFunction u_tilde(const Potential& u, const HaarSystem& sys);

/// V = U - log U~, which satisfies sum_{x in C} e^{V(x)} nu_hat(x) = 1.
Potential normalize(const Potential& u, const HaarSystem& sys);

/// max over classes of |U~(C) - 1|.
double normalization_residual(const Potential& v, const HaarSystem& sys);
bool is_haar_normalized(const Potential& v, const HaarSystem& sys, double tol = kCheckTol);

/// H_U(f), constant on classes.
ClassFunction apply_h(const Potential& u, std::span<const double> f, const HaarSystem& sys);

/// sup_x |H_U(g)(x) - lambda g(x)| for a class function g.
double eigen_residual(const Potential& u, const ClassFunction& g, double lambda,
                      const HaarSystem& sys);

/// H_V^*(M): mass e^{V(x)} nu_hat(x) M([x]) at x. Throws ValidationError
/// when V is not Haar-normalized within kCheckTol.
Measure dual_apply(const Potential& v, const Measure& m, const HaarSystem& sys);

/// The unique Haar-invariant probability with Jacobian e^V that agrees with
/// mu on class-constant functions. mu must be a probability.
Measure invariant_from_seed(const Potential& v, const Measure& mu, const HaarSystem& sys);

/// A test function on G: value f(x, y) at entry x * n + y. Entries for
/// unrelated pairs are ignored.
struct PairFunction {
  std::size_t n = 0;
  std::vector<double> values;

  static PairFunction indicator(std::size_t n, std::size_t x, std::size_t y);
  double operator()(std::size_t x, std::size_t y) const { return values[x * n + y]; }
};

struct InvarianceResidual {
  double max_residual = 0.0;
  /// Pair (x, y) of the worst indicator, or the index of the worst test
  /// function in .first when an explicit family was given.
  std::pair<std::size_t, std::size_t> worst{0, 0};
  bool passes(double tol = kInvarianceTol) const { return max_residual <= tol; }
};

/// Haar invariance with Jacobian e^V, checked on all in-class pair indicators:
/// sum f(y,x) e^{V(x)} nu_hat^y(dx) dM(y) = sum f(x,y) e^{V(x)} nu_hat^y(dx) dM(y).
InvarianceResidual verify_haar_invariance(const Measure& m, const Potential& v,
                                          const HaarSystem& sys);
InvarianceResidual verify_haar_invariance(const Measure& m, const Potential& v,
                                          const HaarSystem& sys,
                                          std::span<const PairFunction> tests);

/// Quasi-invariance for the modular function delta:
/// sum f(y,x) nu_hat^y(dx) dM(y) = sum f(x,y) delta(x,y)^{-1} nu_hat^y(dx) dM(y).
InvarianceResidual verify_quasi_invariance(const Measure& m, const ModularFunction& delta,
                                           const HaarSystem& sys);
InvarianceResidual verify_quasi_invariance(const Measure& m, const ModularFunction& delta,
                                           const HaarSystem& sys,
                                           std::span<const PairFunction> tests);

/// e^{U(x)} for every point.
std::vector<double> exp_values(const Potential& u);

}  // namespace haar
