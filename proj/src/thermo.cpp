#include "haar/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "haar/error.hpp"
#include "haar/simd/kernels.hpp"

namespace haar {

NormalizedFamily make_normalized_family(const HaarSystem& sys, std::vector<Potential> closed_form,
                                        std::size_t random_draws, std::uint64_t seed,
                                        double spread) {
  NormalizedFamily family;
  family.seed = seed;
  family.closed_form_count = closed_form.size();
  for (auto& f : closed_form) {
    if (!is_haar_normalized(f, sys)) {
      throw ValidationError("normalized family: closed-form candidate is not Haar-normalized");
    }
    family.members.push_back(std::move(f));
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(-spread, spread);
  for (std::size_t i = 0; i < random_draws; ++i) {
    std::vector<double> u(sys.size());
    for (double& v : u) v = draw(rng);
    family.members.push_back(normalize(Potential(std::move(u)), sys));
  }
  return family;
}

double entropy(const TransverseMeasure& lambda) {
  return -simd::dot(lambda.modulus().values, lambda.base().mass);
}

double sampled_entropy(const TransverseEvaluator& lambda, const HaarSystem& sys,
                       const NormalizedFamily& family) {
  if (family.members.empty()) throw InputError("entropy estimate needs a nonempty family");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& f : family.members) {
    best = std::max(best, lambda(density(f.values, sys.nu_hat())));
  }
  return -best;
}

double entropy_sup_estimate(const TransverseMeasure& lambda, const NormalizedFamily& family) {
  return sampled_entropy([&](const TransverseFunction& nu) { return lambda_eval(lambda, nu); },
                         lambda.system(), family);
}

PressureResult pressure(const Potential& u, const HaarSystem& sys) {
  PressureResult out{0.0, {}, u_tilde(u, sys)};
  std::vector<double> logs(sys.num_classes());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < logs.size(); ++c) {
    logs[c] = std::log(out.u_tilde.per_class[c]);
    best = std::max(best, logs[c]);
  }
  out.value = best;
  for (std::size_t c = 0; c < logs.size(); ++c) {
    if (best - logs[c] <= kStructuralTol) out.argmax_classes.push_back(c);
  }
  return out;
}

PressureResult pressure(const TransverseFunction& nu, const HaarSystem& sys) {
  if (!nu.groupoid().same_as(sys.groupoid())) {
    throw InputError("transverse function lives on a different groupoid");
  }
  std::vector<double> u(sys.size(), 0.0);
  for (std::size_t x = 0; x < u.size(); ++x) {
    const double base = sys.nu_hat().weight(x);
    if (base > 0.0) {
      u[x] = nu.weight(x) / base;
    } else if (nu.weight(x) != 0.0) {
      throw InputError("transverse function charges '" + sys.groupoid().space().label(x) +
                       "' where nu_hat vanishes; it has no density");
    }
  }
  return pressure(Potential(std::move(u)), sys);
}

double pressure_variational_estimate(const Potential& u, const HaarSystem& sys,
                                     const std::vector<PressureSample>& samples) {
  if (samples.empty()) throw InputError("variational pressure needs at least one sample");
  const TransverseFunction nu = density(u.values, sys.nu_hat());
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    const TransverseMeasure lambda(sys, s.modulus, s.base);
    best = std::max(best, lambda_eval(lambda, nu) + entropy(lambda));
  }
  return best;
}

Equilibrium equilibrium_for(const Potential& u, const HaarSystem& sys) {
  PressureResult p = pressure(u, sys);
  const std::size_t seed_point = sys.groupoid().members(p.argmax_classes.front())[0];
  const Potential v = normalize(u, sys);
  Measure m = invariant_from_seed(v, Measure::point_mass(sys.size(), seed_point), sys);
  return Equilibrium{TransverseMeasure(sys, v, std::move(m)), std::move(p), seed_point};
}

InvolutionResult involution_check(const TransverseMeasure& lambda,
                                  const std::vector<TransverseFunction>& candidates) {
  if (candidates.empty()) throw InputError("involution check needs at least one candidate");
  InvolutionResult out;
  out.entropy = entropy(lambda);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double value =
        -lambda_eval(lambda, candidates[i]) + pressure(candidates[i], lambda.system()).value;
    if (value < best) {
      best = value;
      out.best_candidate = i;
    }
  }
  out.residual = best - out.entropy;
  return out;
}

const char* to_string(ExtremalCase kind) { return kind == ExtremalCase::Pair ? "pair" : "trivial"; }

double ExtremalReport::max_discrepancy() const {
  return std::max(std::abs(pressure_closed_form - pressure_generic),
                  std::abs(entropy_closed_form - entropy_generic));
}

ExtremalReport extremal_closed_forms(ExtremalCase kind, const Potential& u, const HaarSystem& sys) {
  const auto& g = sys.groupoid();
  if (u.size() != sys.size()) throw InputError("potential size does not match the groupoid");
  ExtremalReport out;
  out.kind = kind;
  if (kind == ExtremalCase::Pair) {
    if (g.num_classes() != 1) {
      throw InputError("pair case needs a single-class groupoid, got " +
                       std::to_string(g.num_classes()) + " classes");
    }
    // P_m(U m) = log int e^U dm; the equilibrium has dM = P dm with P = e^U / int e^U dm.
    const auto& m = sys.nu_hat().weights();
    double z = 0.0;
    for (std::size_t x = 0; x < u.size(); ++x) z += std::exp(u[x]) * m[x];
    out.pressure_closed_form = std::log(z);
    out.gibbs_density.resize(u.size());
    double h = 0.0;
    for (std::size_t x = 0; x < u.size(); ++x) {
      const double p = std::exp(u[x]) / z;
      out.gibbs_density[x] = p;
      if (p > 0.0 && m[x] > 0.0) h -= p * std::log(p) * m[x];
    }
    out.entropy_closed_form = h;
  } else {
    for (std::size_t c = 0; c < g.num_classes(); ++c) {
      if (g.members(c).size() != 1) {
        throw InputError("trivial case needs singleton classes; class " + g.class_label(c) +
                         " has " + std::to_string(g.members(c).size()) + " points");
      }
    }
    out.pressure_closed_form = *std::max_element(u.values.begin(), u.values.end());
    out.entropy_closed_form = 0.0;
  }
  const Equilibrium eq = equilibrium_for(u, sys);
  out.pressure_generic = eq.pressure.value;
  out.entropy_generic = entropy(eq.lambda);
  return out;
}

}  // namespace haar
