#include "haar/dyn.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "haar/error.hpp"
#include "haar/simd/kernels.hpp"

namespace haar::dyn {
namespace {

std::size_t ipow(std::size_t d, std::size_t n) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < n; ++i) out *= d;
  return out;
}

std::string join_word(const std::vector<std::string>& alphabet, std::size_t index, std::size_t n) {
  const std::size_t d = alphabet.size();
  std::vector<std::size_t> digits(n);
  for (std::size_t i = n; i-- > 0;) {
    digits[i] = index % d;
    index /= d;
  }
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += '.';
    out += alphabet[digits[i]];
  }
  return out;
}

std::vector<std::string> state_labels(std::size_t d) {
  std::vector<std::string> out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = std::to_string(i);
  return out;
}

double xlogx_weighted(double weight, double x) { return weight > 0.0 ? weight * std::log(x) : 0.0; }

}  // namespace

void FactorMap::validate() const {
  if (image.size() != source.size()) {
    throw InputError("factor map: image has " + std::to_string(image.size()) + " entries for " +
                     std::to_string(source.size()) + " points");
  }
  for (std::size_t x = 0; x < image.size(); ++x) {
    if (image[x] >= target.size()) {
      throw InputError("factor map: image of '" + source.label(x) + "' is outside the target");
    }
  }
}

FiniteGroupoid FactorMap::fibers() const {
  validate();
  return build_fiber_groupoid(source, image, target.size());
}

std::vector<double> FactorMap::push_forward(const Measure& m) const {
  validate();
  if (m.size() != source.size()) throw InputError("measure size does not match the map source");
  std::vector<double> out(target.size(), 0.0);
  for (std::size_t x = 0; x < image.size(); ++x) out[image[x]] += m[x];
  return out;
}

FactorMap FactorMap::self_map(PointSpace space, const std::map<std::string, std::string>& map) {
  FactorMap t{space, space, std::vector<std::size_t>(space.size())};
  for (std::size_t x = 0; x < space.size(); ++x) {
    const auto it = map.find(space.label(x));
    if (it == map.end()) throw InputError("map has no image for point '" + space.label(x) + "'");
    t.image[x] = space.index_of(it->second);
  }
  for (const auto& [from, to] : map) space.index_of(from);
  return t;
}

FactorMap shift_factor(const std::vector<std::string>& alphabet, std::size_t n) {
  if (n < 2) throw InputError("shift factor needs words of length >= 2");
  if (alphabet.empty()) throw InputError("shift factor needs a nonempty alphabet");
  const std::size_t d = alphabet.size();
  const std::size_t words = ipow(d, n);
  const std::size_t tails = ipow(d, n - 1);
  std::vector<std::string> src(words);
  std::vector<std::size_t> image(words);
  for (std::size_t i = 0; i < words; ++i) {
    src[i] = join_word(alphabet, i, n);
    image[i] = i % tails;
  }
  std::vector<std::string> dst(tails);
  for (std::size_t i = 0; i < tails; ++i) dst[i] = join_word(alphabet, i, n - 1);
  return FactorMap{PointSpace(std::move(src)), PointSpace(std::move(dst)), std::move(image)};
}

Measure prefix_marginal(std::size_t symbols, std::size_t n, const Measure& m) {
  if (n < 1 || m.size() != ipow(symbols, n)) {
    throw InputError("measure size does not match depth-n words");
  }
  std::vector<double> out(ipow(symbols, n - 1), 0.0);
  for (std::size_t w = 0; w < out.size(); ++w) {
    out[w] = simd::sum(std::span<const double>(m.mass).subspan(w * symbols, symbols));
  }
  return Measure(std::move(out));
}

Disintegration conditional_measures(const FiniteGroupoid& fibers, const Measure& m) {
  if (m.size() != fibers.size()) throw InputError("measure size does not match the groupoid");
  Disintegration out;
  out.fibers = fibers;
  out.conditional.assign(m.size(), 0.0);
  for (std::size_t c = 0; c < fibers.num_classes(); ++c) {
    const auto members = fibers.members(c);
    double total = 0.0;
    for (std::size_t x : members) total += m[x];
    if (total > 0.0) {
      for (std::size_t x : members) out.conditional[x] = m[x] / total;
    } else {
      out.uniform_classes.push_back(c);
      for (std::size_t x : members) out.conditional[x] = 1.0 / static_cast<double>(members.size());
    }
  }
  out.identity_residual = jacobian_identity_residual(fibers, m, out.conditional);
  return out;
}

Disintegration disintegrate(const FactorMap& t, const Measure& m, const Measure& target) {
  const std::vector<double> pushed = t.push_forward(m);
  if (target.size() != t.target.size()) {
    throw InputError("target measure size does not match the map target");
  }
  double worst = 0.0;
  std::size_t atom = 0;
  for (std::size_t a = 0; a < pushed.size(); ++a) {
    const double r = std::abs(pushed[a] - target[a]);
    if (r > worst) {
      worst = r;
      atom = a;
    }
  }
  if (worst > kMapInvarianceTol) {
    std::ostringstream msg;
    msg << "measure is not T-invariant: M(T^-1 A) - M(A) = " << pushed[atom] - target[atom]
        << " at atom '" << t.target.label(atom) << "'";
    throw ValidationError(msg.str());
  }
  Disintegration out = conditional_measures(t.fibers(), m);
  out.invariance_residual = worst;
  return out;
}

std::vector<double> haar_jacobian(const FactorMap& t, const Measure& m, const Measure& target) {
  return disintegrate(t, m, target).conditional;
}

double jacobian_identity_residual(const FiniteGroupoid& fibers, const Measure& m,
                                  const std::vector<double>& j) {
  if (j.size() != fibers.size() || m.size() != fibers.size()) {
    throw InputError("jacobian size does not match the groupoid");
  }
  double worst = 0.0;
  for (std::size_t x = 0; x < fibers.size(); ++x) {
    double rhs = 0.0;
    for (std::size_t y : fibers.members(fibers.class_of(x))) rhs += j[x] * m[y];
    worst = std::max(worst, std::abs(m[x] - rhs));
  }
  return worst;
}

double jacobian_fiber_sum_residual(const FiniteGroupoid& fibers, const std::vector<double>& j) {
  double worst = 0.0;
  for (std::size_t c = 0; c < fibers.num_classes(); ++c) {
    double total = 0.0;
    for (std::size_t x : fibers.members(c)) total += j[x];
    worst = std::max(worst, std::abs(total - 1.0));
  }
  return worst;
}

MarkovSpec make_markov_spec(const std::vector<std::vector<double>>& transition,
                            std::optional<std::vector<double>> stationary,
                            const StationaryOptions& options) {
  const std::size_t d = transition.size();
  if (d == 0) throw InputError("transition matrix is empty");
  MarkovSpec spec;
  spec.states = d;
  spec.transition.reserve(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    if (transition[i].size() != d) {
      throw InputError("transition row " + std::to_string(i) + " has " +
                       std::to_string(transition[i].size()) + " entries, expected " +
                       std::to_string(d));
    }
    double total = 0.0;
    for (double p : transition[i]) {
      if (!std::isfinite(p)) throw InputError("transition matrix has a non-finite entry");
      if (p < 0.0) throw ValidationError("transition row " + std::to_string(i) + " has a negative entry");
      total += p;
      spec.transition.push_back(p);
    }
    if (std::abs(total - 1.0) > kStructuralTol) {
      std::ostringstream msg;
      msg << "transition row " << i << " sums to " << total << ", expected 1";
      throw ValidationError(msg.str());
    }
  }

  std::vector<double> pt(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) pt[j * d + i] = spec.p(i, j);
  }
  std::vector<double> next(d);
  if (stationary) {
    if (stationary->size() != d) throw InputError("stationary vector has the wrong size");
    for (double v : *stationary) {
      if (!std::isfinite(v)) throw InputError("stationary vector has a non-finite entry");
      if (v < 0.0) throw ValidationError("stationary vector has a negative entry");
    }
    spec.stationary = std::move(*stationary);
    if (std::abs(simd::sum(spec.stationary) - 1.0) > kStructuralTol) {
      throw ValidationError("stationary vector does not sum to 1");
    }
  } else {
    std::vector<double> pi(d, 1.0 / static_cast<double>(d));
    double diff = 1.0;
    std::size_t it = 0;
    for (; it < options.max_iterations && diff >= options.tol; ++it) {
      simd::matvec(pt, d, d, pi, next);
      for (std::size_t i = 0; i < d; ++i) next[i] = 0.5 * (next[i] + pi[i]);
      simd::scale(next, 1.0 / simd::sum(next));
      diff = simd::max_abs_diff(next, pi);
      pi.swap(next);
    }
    if (diff >= options.tol && diff > kStructuralTol) {
      throw ConvergenceError("stationary distribution iteration did not converge", diff);
    }
    spec.stationary = std::move(pi);
  }
  simd::matvec(pt, d, d, spec.stationary, next);
  const double r = simd::max_abs_diff(next, spec.stationary);
  if (r > kStructuralTol) {
    std::ostringstream msg;
    msg << "stationary vector is not invariant: |pi P - pi| = " << r;
    throw ValidationError(msg.str());
  }
  return spec;
}

std::vector<double> markov_jacobian(const MarkovSpec& spec) {
  const std::size_t d = spec.states;
  for (std::size_t i = 0; i < d; ++i) {
    // Iteration leaves round-off mass on transient states.
    if (!(spec.stationary[i] > kStructuralTol)) {
      throw ValidationError("state " + std::to_string(i) + " has zero stationary mass");
    }
  }
  std::vector<double> j(d * d);
  for (std::size_t x0 = 0; x0 < d; ++x0) {
    for (std::size_t x1 = 0; x1 < d; ++x1) {
      j[x0 * d + x1] = spec.stationary[x0] * spec.p(x0, x1) / spec.stationary[x1];
    }
  }
  return j;
}

std::vector<double> markov_cylinder_masses(const MarkovSpec& spec, std::size_t n) {
  if (n == 0) throw InputError("cylinder depth must be at least 1");
  const std::size_t d = spec.states;
  std::vector<double> out(ipow(d, n));
  std::vector<std::size_t> digits(n);
  for (std::size_t w = 0; w < out.size(); ++w) {
    std::size_t rest = w;
    for (std::size_t i = n; i-- > 0;) {
      digits[i] = rest % d;
      rest /= d;
    }
    double mass = spec.stationary[digits[0]];
    for (std::size_t i = 1; i < n; ++i) mass *= spec.p(digits[i - 1], digits[i]);
    out[w] = mass;
  }
  return out;
}

CylinderJacobian jacobian_from_cylinders(const MarkovSpec& spec, std::size_t n) {
  if (n == 0) throw InputError("cylinder ratio needs n >= 1");
  const std::size_t d = spec.states;
  const std::vector<double> full = markov_cylinder_masses(spec, n + 1);
  const std::vector<double> tail = markov_cylinder_masses(spec, n);
  const std::size_t cont = ipow(d, n - 1);
  CylinderJacobian out;
  out.table.assign(d * d, 0.0);
  std::vector<bool> seen(d * d, false);
  for (std::size_t x0 = 0; x0 < d; ++x0) {
    for (std::size_t x1 = 0; x1 < d; ++x1) {
      const std::size_t cell = x0 * d + x1;
      for (std::size_t c = 0; c < cont; ++c) {
        const std::size_t t = x1 * cont + c;
        if (!(tail[t] > 0.0)) continue;
        const double ratio = full[x0 * tail.size() + t] / tail[t];
        if (!seen[cell]) {
          out.table[cell] = ratio;
          seen[cell] = true;
        } else {
          out.max_spread = std::max(out.max_spread, std::abs(ratio - out.table[cell]));
        }
      }
    }
  }
  return out;
}

double ks_entropy_via_jacobian(const MarkovSpec& spec) {
  const std::vector<double> j = markov_jacobian(spec);
  const std::size_t d = spec.states;
  double h = 0.0;
  for (std::size_t x0 = 0; x0 < d; ++x0) {
    for (std::size_t x1 = 0; x1 < d; ++x1) {
      h -= xlogx_weighted(spec.stationary[x0] * spec.p(x0, x1), j[x0 * d + x1]);
    }
  }
  return h;
}

double markov_entropy_rate(const MarkovSpec& spec) {
  const std::size_t d = spec.states;
  double h = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      h -= xlogx_weighted(spec.stationary[i] * spec.p(i, j), spec.p(i, j));
    }
  }
  return h;
}

double markov_haar_identity_residual(const MarkovSpec& spec, std::size_t n) {
  if (n < 2) throw InputError("cylinder depth must be at least 2");
  const std::size_t d = spec.states;
  const std::vector<double> m = markov_cylinder_masses(spec, n);
  const std::vector<double> j = markov_jacobian(spec);
  const std::size_t tails = ipow(d, n - 1);
  const std::size_t second = ipow(d, n - 2);
  double worst = 0.0;
  for (std::size_t z = 0; z < m.size(); ++z) {
    const std::size_t t = z % tails;
    const double jz = j[(z / tails) * d + t / second];
    double rhs = 0.0;
    for (std::size_t a = 0; a < d; ++a) rhs += jz * m[a * tails + t];
    worst = std::max(worst, std::abs(m[z] - rhs));
  }
  return worst;
}

MarkovCylinders markov_cylinders(const MarkovSpec& spec, std::size_t n) {
  if (n < 2) throw InputError("cylinder depth must be at least 2");
  const std::size_t d = spec.states;
  const std::vector<double> j = markov_jacobian(spec);
  for (double v : j) {
    if (!(v > 0.0)) throw InputError("Markov cylinder system needs a strictly positive Jacobian");
  }
  const FactorMap t = shift_factor(state_labels(d), n);
  const FiniteGroupoid g = t.fibers();
  const std::size_t tails = ipow(d, n - 1);
  const std::size_t second = ipow(d, n - 2);
  std::vector<double> v(g.size());
  for (std::size_t z = 0; z < v.size(); ++z) {
    v[z] = std::log(static_cast<double>(d) * j[(z / tails) * d + (z % tails) / second]);
  }
  HaarSystem sys(g, TransverseFunction::uniform(g));
  return MarkovCylinders{std::move(sys), Measure(markov_cylinder_masses(spec, n)),
                         Potential(std::move(v))};
}

}  // namespace haar::dyn
