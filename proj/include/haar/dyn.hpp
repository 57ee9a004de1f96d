#pragma once
// Groupoids defined by a map T: the classes are the fibers T^{-1}(y).
// Rokhlin disintegration at finite scale is the family of conditional
// measures M(. | fiber), and the Haar-Jacobian is J(z) = M(z) / M(fiber of z).
//
// Invariance of M is stated against a target marginal: T_*M must equal the
// given measure on the target set. For a self-map the target is M itself;
// for the shift on depth-n cylinder words the target is the marginal of M on
// the first n-1 symbols.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "haar/groupoid.hpp"

namespace haar::dyn {

/// Residual bound for T-invariance of the input measure.
inline constexpr double kMapInvarianceTol = 1e-10;

struct FactorMap {
  PointSpace source;
  PointSpace target;
  std::vector<std::size_t> image;  ///< T(x) as an index into target

  /// Throws InputError on size mismatches or out-of-range images.
  void validate() const;
  /// Classes are the nonempty fibers, ordered by smallest member.
  FiniteGroupoid fibers() const;
  /// T_*M on the target.
  std::vector<double> push_forward(const Measure& m) const;

  /// Self-map x -> map[x]; every point needs an image inside the space.
  static FactorMap self_map(PointSpace space, const std::map<std::string, std::string>& map);
};

/// Words of length n >= 2 over the alphabet; T drops the first symbol.
FactorMap shift_factor(const std::vector<std::string>& alphabet, std::size_t n);
/// Marginal of a measure on depth-n words onto the first n-1 symbols.
Measure prefix_marginal(std::size_t symbols, std::size_t n, const Measure& m);

struct Disintegration {
  FiniteGroupoid fibers;
  /// mu^{[x]}({x}) for every point x.
  std::vector<double> conditional;
  /// Classes of zero M-mass that received the uniform conditional.
  std::vector<std::size_t> uniform_classes;
  /// max over points x of |M(x) - sum_{y ~ x} M(y) mu^{[y]}({x})|.
  double identity_residual = 0.0;
  /// max over target atoms A of |M(T^{-1}A) - target(A)|; 0 when unchecked.
  double invariance_residual = 0.0;
};

/// Conditional measures M(. | C) on the classes of any groupoid, with no
/// invariance requirement.
Disintegration conditional_measures(const FiniteGroupoid& fibers, const Measure& m);

/// Rokhlin disintegration along the fibers of T. Throws ValidationError
/// naming the worst target atom when T_*M differs from target by more than
/// kMapInvarianceTol. For self-maps pass target = m.
Disintegration disintegrate(const FactorMap& t, const Measure& m, const Measure& target);

/// J(z) = mu^{[z]}({z}); sums to 1 on every fiber.
std::vector<double> haar_jacobian(const FactorMap& t, const Measure& m, const Measure& target);

/// max over points x of |M(x) - sum_{y ~ x} J(x) M(y)|, i.e. the identity
/// int f dM = int sum_{z ~ y} J(z) f(z) dM(y) on point indicators.
double jacobian_identity_residual(const FiniteGroupoid& fibers, const Measure& m,
                                  const std::vector<double>& j);

/// max over fibers of |sum J - 1|.
double jacobian_fiber_sum_residual(const FiniteGroupoid& fibers, const std::vector<double>& j);

struct MarkovSpec {
  std::size_t states = 0;
  std::vector<double> transition;  ///< states x states, row-major, row-stochastic
  std::vector<double> stationary;

  double p(std::size_t i, std::size_t j) const { return transition[i * states + j]; }
};

struct StationaryOptions {
  std::size_t max_iterations = 1000000;
  double tol = 1e-15;
};

/// Validates P (nonnegative, rows sum to 1 within kStructuralTol). When
/// stationary is absent it is computed by fixed-point iteration of the lazy
/// chain (pi + pi P) / 2; either way pi P = pi must hold within
/// kStructuralTol (ValidationError otherwise).
MarkovSpec make_markov_spec(const std::vector<std::vector<double>>& transition,
                            std::optional<std::vector<double>> stationary = std::nullopt,
                            const StationaryOptions& options = {});

/// J(x0, x1) = pi(x0) P(x0, x1) / pi(x1) at index x0 * d + x1. Throws
/// ValidationError when some state has stationary mass <= kStructuralTol.
std::vector<double> markov_jacobian(const MarkovSpec& spec);

struct CylinderJacobian {
  std::vector<double> table;  ///< J_n(x0, x1) from the first continuation of positive mass
  double max_spread = 0.0;    ///< largest deviation across continuations x2..xn
};

/// Literal ratio M([x0..xn]) / M([x1..xn]) with cylinder masses computed by
/// brute-force products.
CylinderJacobian jacobian_from_cylinders(const MarkovSpec& spec, std::size_t n);

/// -sum pi(x0) P(x0, x1) log J(x0, x1), with 0 log 0 = 0.
double ks_entropy_via_jacobian(const MarkovSpec& spec);
/// -sum pi_i P_ij log P_ij, with 0 log 0 = 0.
double markov_entropy_rate(const MarkovSpec& spec);

/// Markov measure of every depth-n word (first symbol most significant).
std::vector<double> markov_cylinder_masses(const MarkovSpec& spec, std::size_t n);

/// max over depth-n cylinders [z] of |M([z]) - sum_{sigma y = sigma z} J(z) M([y])|.
double markov_haar_identity_residual(const MarkovSpec& spec, std::size_t n);

struct MarkovCylinders {
  HaarSystem system;  ///< depth-n words, classes by tail, nu_hat uniform on fibers
  Measure measure;    ///< Markov measure on the words
  Potential modulus;  ///< V = log(d J(z0, z1)), so e^V nu_hat = J
};

/// The shift fiber groupoid on depth-n words carrying the Markov measure.
/// Requires n >= 2 and a strictly positive Jacobian (InputError otherwise).
MarkovCylinders markov_cylinders(const MarkovSpec& spec, std::size_t n);

}  // namespace haar::dyn
