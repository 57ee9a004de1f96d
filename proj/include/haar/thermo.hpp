#pragma once
// Entropy of Haar-invariant transverse probabilities and pressure of
// transverse functions nu = U nu_hat.
//
// Closed forms carry the results: h(Lambda) = -int V dM and
// P(U nu_hat) = max_C log U~(C). The variational definitions (a sup over all
// normalized F, a sup over all Lambda) are evaluated over finite families
// only, to test one-sided bounds and attainment.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "haar/groupoid.hpp"
#include "haar/transverse.hpp"

namespace haar {

/// Haar-normalized potentials: closed-form candidates followed by seeded
/// random draws (each draw is uniform per point, then normalized).
struct NormalizedFamily {
  std::vector<Potential> members;
  std::size_t closed_form_count = 0;
  std::uint64_t seed = 0;
};

/// Throws ValidationError if a closed-form candidate is not normalized
/// within kCheckTol.
NormalizedFamily make_normalized_family(const HaarSystem& sys, std::vector<Potential> closed_form,
                                        std::size_t random_draws, std::uint64_t seed,
                                        double spread = 3.0);

/// h(Lambda) = -sum_x V(x) M(x).
double entropy(const TransverseMeasure& lambda);

/// -max_{F in family} Lambda(F nu_hat). Never below entropy(lambda).
double entropy_sup_estimate(const TransverseMeasure& lambda, const NormalizedFamily& family);
/// Same for an arbitrary linear evaluator (e.g. a mixture of transverse measures).
double sampled_entropy(const TransverseEvaluator& lambda, const HaarSystem& sys,
                       const NormalizedFamily& family);

struct PressureResult {
  double value = 0.0;
  /// Classes whose log U~ is within kStructuralTol of the max, ascending.
  std::vector<std::size_t> argmax_classes;
  ClassFunction u_tilde;
};

/// P(U nu_hat) = max_C log U~(C).
PressureResult pressure(const Potential& u, const HaarSystem& sys);

/// Pressure of a transverse function via its density U = nu / nu_hat.
/// Throws InputError when nu charges a point where nu_hat vanishes.
PressureResult pressure(const TransverseFunction& nu, const HaarSystem& sys);

/// A candidate (V, M_V) for the variational pressure.
struct PressureSample {
  Potential modulus;
  Measure base;
};

/// max over samples of Lambda_{V,M}(U nu_hat) + h(Lambda_{V,M}). Each sample
/// must be a valid transverse measure (ValidationError otherwise).
double pressure_variational_estimate(const Potential& u, const HaarSystem& sys,
                                     const std::vector<PressureSample>& samples);

struct Equilibrium {
  TransverseMeasure lambda;
  PressureResult pressure;
  std::size_t seed_point = 0;  ///< first member of the lowest argmax class
};

/// Lambda = (U - log U~, invariant_from_seed(., delta_{y*})), which attains
/// the pressure.
Equilibrium equilibrium_for(const Potential& u, const HaarSystem& sys);

struct InvolutionResult {
  double residual = 0.0;        ///< min_nu [-Lambda(nu) + P(nu)] - h(Lambda)
  std::size_t best_candidate = 0;
  double entropy = 0.0;
};

/// Legendre involution at the sampled level.
InvolutionResult involution_check(const TransverseMeasure& lambda,
                                  const std::vector<TransverseFunction>& candidates);

enum class ExtremalCase { Pair, Trivial };

struct ExtremalReport {
  ExtremalCase kind = ExtremalCase::Pair;
  double pressure_closed_form = 0.0;
  double pressure_generic = 0.0;
  double entropy_closed_form = 0.0;
  double entropy_generic = 0.0;
  /// Pair case: Gibbs density P = e^U / int e^U dm. Trivial case: empty.
  std::vector<double> gibbs_density;
  double max_discrepancy() const;
};

/// Pair case: single-class groupoid, u is the potential, nu_hat plays m.
/// Trivial case: singleton classes, u holds the transverse function values.
/// Throws InputError when the groupoid does not have the requested shape.
ExtremalReport extremal_closed_forms(ExtremalCase kind, const Potential& u, const HaarSystem& sys);

const char* to_string(ExtremalCase kind);

}  // namespace haar
