#include "haar/transverse.hpp"

#include <cmath>
#include <sstream>

#include "haar/error.hpp"
#include "haar/simd/kernels.hpp"

namespace haar {
namespace {

void require_same(const TransverseMeasure& lambda, const TransverseFunction& nu) {
  if (!nu.groupoid().same_as(lambda.system().groupoid())) {
    throw InputError("transverse function lives on a different groupoid");
  }
}

// sum_y M(y) * sum_{x in [y]} e^{V(x)} nu(x) for nonnegative nu.
double eval_nonnegative(const TransverseMeasure& lambda, const TransverseFunction& nu) {
  const auto& sys = lambda.system();
  const auto& g = sys.groupoid();
  std::vector<double> ev;
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t c = 0; c < g.num_classes(); ++c) {
    sys.gather(c, lambda.exp_modulus(), ev);
    sys.gather(c, nu.weights(), w);
    const double inner = simd::dot(ev, w);
    double mass = 0.0;
    for (std::size_t y : g.members(c)) mass += lambda.base()[y];
    total += mass * inner;
  }
  return total;
}

double eval_relative_nonnegative(const TransverseMeasure& lambda, const TransverseFunction& nu) {
  const auto& sys = lambda.system();
  const auto& g = sys.groupoid();
  const auto& ev = lambda.exp_modulus();
  std::vector<double> evc;
  std::vector<double> w;
  double total = 0.0;
  for (std::size_t c = 0; c < g.num_classes(); ++c) {
    sys.gather(c, ev, evc);
    sys.gather(c, nu.weights(), w);
    const double inner = simd::dot(evc, w);
    double weight = 0.0;
    for (std::size_t y : g.members(c)) weight += lambda.base()[y] / ev[y];
    total += weight * inner;
  }
  return total;
}

}  // namespace

TransverseMeasure::TransverseMeasure(HaarSystem sys, Potential modulus, Measure base)
    : sys_(std::move(sys)), modulus_(std::move(modulus)), base_(std::move(base)) {
  if (modulus_.size() != sys_.size() || base_.size() != sys_.size()) {
    throw InputError("transverse measure: modulus/base size does not match the groupoid");
  }
  if (!is_haar_normalized(modulus_, sys_)) {
    throw ValidationError("transverse measure: modulus is not Haar-normalized");
  }
  if (!base_.is_probability()) throw ValidationError("transverse measure: base is not a probability");
  const InvarianceResidual r = verify_haar_invariance(base_, modulus_, sys_);
  if (!r.passes()) {
    std::ostringstream msg;
    msg << "transverse measure: base is not Haar-invariant with Jacobian e^V (residual "
        << r.max_residual << " at pair (" << sys_.groupoid().space().label(r.worst.first) << ", "
        << sys_.groupoid().space().label(r.worst.second) << "))";
    throw ValidationError(msg.str());
  }
  exp_modulus_ = exp_values(modulus_);
}

double lambda_eval(const TransverseMeasure& lambda, const TransverseFunction& nu) {
  require_same(lambda, nu);
  if (nu.is_nonnegative()) return eval_nonnegative(lambda, nu);
  return eval_nonnegative(lambda, nu.positive_part()) - eval_nonnegative(lambda, nu.negative_part());
}

double lambda_eval_relative(const TransverseMeasure& lambda, const TransverseFunction& nu) {
  require_same(lambda, nu);
  if (nu.is_nonnegative()) return eval_relative_nonnegative(lambda, nu);
  return eval_relative_nonnegative(lambda, nu.positive_part()) -
         eval_relative_nonnegative(lambda, nu.negative_part());
}

double density_identity_check(const TransverseMeasure& lambda, std::span<const double> f) {
  const double lhs = lambda_eval(lambda, density(f, lambda.system().nu_hat()));
  const double rhs = simd::dot(f, lambda.base().mass);
  return std::abs(lhs - rhs);
}

Measure measure_from_transverse(const HaarSystem& sys, const TransverseEvaluator& lambda,
                                const Potential& modulus) {
  const double norm = lambda(sys.nu_hat());
  if (std::abs(norm - 1.0) > kStructuralTol) {
    std::ostringstream msg;
    msg << "measure_from_transverse: Lambda(nu_hat) = " << norm << ", expected 1";
    throw ValidationError(msg.str());
  }
  const std::size_t n = sys.size();
  std::vector<double> mass(n);
  std::vector<double> indicator(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    indicator[x] = 1.0;
    mass[x] = lambda(density(indicator, sys.nu_hat()));
    indicator[x] = 0.0;
    // Linear evaluators can return -0.0 or tiny negative rounding noise.
    if (mass[x] < 0.0 && mass[x] > -kStructuralTol) mass[x] = 0.0;
  }
  Measure m(std::move(mass));
  const InvarianceResidual r = verify_haar_invariance(m, modulus, sys);
  if (!r.passes()) {
    std::ostringstream msg;
    msg << "measure_from_transverse: recovered measure is not Haar-invariant (residual "
        << r.max_residual << ")";
    throw ValidationError(msg.str());
  }
  return m;
}

Kernel jacobian_kernel(const HaarSystem& sys, const Potential& v) {
  return density(exp_values(v), sys.nu_hat()).as_kernel();
}

CocoResult coco_invariance_check(const TransverseMeasure& lambda, const TransverseFunction& nu1,
                                 const Kernel& kernel) {
  require_same(lambda, nu1);
  const auto& g = lambda.system().groupoid();
  if (!kernel.groupoid().same_as(g)) throw InputError("kernel lives on a different groupoid");
  const std::size_t n = g.size();
  for (std::size_t y = 0; y < n; ++y) {
    double row_total = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      if (kernel(y, x) < 0.0) {
        throw ValidationError("coco_invariance_check: kernel has a negative entry in row '" +
                              g.space().label(y) + "'");
      }
      row_total += kernel(y, x);
    }
    if (std::abs(row_total - 1.0) > kStructuralTol) {
      std::ostringstream msg;
      msg << "coco_invariance_check: kernel row '" << g.space().label(y) << "' has mass "
          << row_total << ", expected 1";
      throw ValidationError(msg.str());
    }
  }
  const auto& v = lambda.modulus();
  // (delta lambda)^x(ds) = delta(s, x) lambda^x(ds), delta(s, x) = e^{V(x) - V(s)}.
  std::vector<double> weighted(n * n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t s = 0; s < n; ++s) {
      const double k = kernel(x, s);
      if (k != 0.0) weighted[x * n + s] = std::exp(v[x] - v[s]) * k;
    }
  }
  const Kernel product = kernel_convolve(nu1.as_kernel(), Kernel(g, std::move(weighted)));
  CocoResult out;
  out.transverse = validate_transverse(product);
  if (!out.transverse.ok && nu1.is_nonnegative()) {
    throw ValidationError("coco_invariance_check: nu1 * (delta lambda) is not transverse: " +
                          out.transverse.failure);
  }
  std::vector<double> w(n);
  for (std::size_t x = 0; x < n; ++x) w[x] = product(x, x);
  out.nu2 = TransverseFunction(g, std::move(w));
  out.residual = std::abs(lambda_eval(lambda, nu1) - lambda_eval(lambda, out.nu2));
  return out;
}

}  // namespace haar
