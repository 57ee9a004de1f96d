#pragma once
// Haar-invariant transverse probabilities, held canonically as the pair
// (modulus V, base measure M) and evaluated as
//   Lambda(nu) = sum_y M(y) sum_{x ~ y} e^{V(x)} nu(x).

#include <functional>
#include <vector>

#include "haar/groupoid.hpp"
#include "haar/transfer.hpp"

namespace haar {

class TransverseMeasure {
 public:
  /// Throws ValidationError unless V is Haar-normalized, M is a probability
  /// and M is Haar-invariant with Jacobian e^V.
  TransverseMeasure(HaarSystem sys, Potential modulus, Measure base);

  const HaarSystem& system() const { return sys_; }
  const Potential& modulus() const { return modulus_; }
  const Measure& base() const { return base_; }
  /// e^{V(x)}, cached.
  const std::vector<double>& exp_modulus() const { return exp_modulus_; }

 private:
  HaarSystem sys_;
  Potential modulus_;
  Measure base_;
  std::vector<double> exp_modulus_;
};

/// Lambda(nu) via sum M(y) sum e^{V(x)} nu(x). Signed nu is split per class
/// into positive and negative parts. Throws InputError on a groupoid mismatch.
double lambda_eval(const TransverseMeasure& lambda, const TransverseFunction& nu);

/// The other form, sum M(y) sum e^{V(x) - V(y)} nu(x); agrees with
/// lambda_eval for Haar-invariant M.
double lambda_eval_relative(const TransverseMeasure& lambda, const TransverseFunction& nu);

/// |Lambda(F nu_hat) - sum_x F(x) M(x)|.
double density_identity_check(const TransverseMeasure& lambda, std::span<const double> f);

using TransverseEvaluator = std::function<double(const TransverseFunction&)>;

/// Recovers M(x) = Lambda(1_x nu_hat) from an evaluator. Throws
/// ValidationError if Lambda(nu_hat) != 1 within kStructuralTol, or if the
/// recovered M is not Haar-invariant with Jacobian e^{modulus}.
Measure measure_from_transverse(const HaarSystem& sys, const TransverseEvaluator& lambda,
                                const Potential& modulus);

struct CocoResult {
  double residual = 0.0;      ///< |Lambda(nu1) - Lambda(nu2)|
  TransverseFunction nu2;     ///< nu1 * (delta lambda)
  ValidationReport transverse;  ///< nu2 checked as a transverse function
};

/// Invariance axiom: with (delta lambda)^x(ds) = e^{V(x) - V(s)} lambda^x(ds)
/// and nu2 = nu1 * (delta lambda), Lambda(nu1) = Lambda(nu2). lambda must be
/// nonnegative with unit rows (ValidationError otherwise).
CocoResult coco_invariance_check(const TransverseMeasure& lambda, const TransverseFunction& nu1,
                                 const Kernel& kernel);

/// The unit-row kernel lambda^y(dx) = e^{V(x)} nu_hat^y(dx).
Kernel jacobian_kernel(const HaarSystem& sys, const Potential& v);

}  // namespace haar
