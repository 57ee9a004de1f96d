#include "haar/xy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "haar/error.hpp"
#include "haar/simd/kernels.hpp"
#include "haar/transfer.hpp"

namespace haar::xy {
namespace {

std::size_t ipow(std::size_t d, std::size_t n) { return word_count(d, n); }

// m(a) e^{V(a, s)} for a in K and s a word of length k-1, at a * d^{k-1} + s.
std::vector<double> weighted_exp(const XYSpec& spec) {
  const std::size_t d = spec.symbols();
  const std::size_t tail = ipow(d, spec.depth - 1);
  std::vector<double> out(spec.potential.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = spec.a_priori[i / tail] * std::exp(spec.potential[i]);
  }
  return out;
}

void check_table(const XYSpec& spec, const CylinderFunction& f) {
  if (f.table.size() != ipow(spec.symbols(), f.depth)) {
    std::ostringstream msg;
    msg << "cylinder function of depth " << f.depth << " needs " << ipow(spec.symbols(), f.depth)
        << " entries, got " << f.table.size();
    throw InputError(msg.str());
  }
  for (double v : f.table) {
    if (!std::isfinite(v)) throw InputError("cylinder function has a non-finite entry");
  }
}

std::size_t constant_word(std::size_t d, std::size_t symbol, std::size_t length) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < length; ++i) index = index * d + symbol;
  return index;
}

}  // namespace

std::size_t word_count(std::size_t d, std::size_t n) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (d != 0 && out > std::numeric_limits<std::size_t>::max() / d / 8) {
      throw InputError("word table too large: " + std::to_string(d) + "^" + std::to_string(n));
    }
    out *= d;
  }
  return out;
}

void XYSpec::validate() const {
  const std::size_t d = symbols();
  if (d == 0) throw InputError("XY model needs a nonempty alphabet");
  if (depth == 0) throw InputError("XY potential depth must be at least 1");
  if (a_priori.size() != d) {
    throw InputError("a priori weights: expected " + std::to_string(d) + " entries, got " +
                     std::to_string(a_priori.size()));
  }
  if (potential.size() != word_count(d, depth)) {
    throw InputError("XY potential of depth " + std::to_string(depth) + " needs " +
                     std::to_string(word_count(d, depth)) + " entries, got " +
                     std::to_string(potential.size()));
  }
  if (base_symbol >= d) throw InputError("base symbol is outside the alphabet");
  for (double v : potential) {
    if (!std::isfinite(v)) throw InputError("XY potential has a non-finite entry");
  }
  double total = 0.0;
  for (double m : a_priori) {
    if (!(m >= 0.0) || !std::isfinite(m)) {
      throw ValidationError("a priori weights must be nonnegative and finite");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > kStructuralTol) {
    std::ostringstream msg;
    msg << "a priori weights sum to " << total << ", expected 1";
    throw ValidationError(msg.str());
  }
}

std::string word_label(const XYSpec& spec, std::size_t index, std::size_t length) {
  const std::size_t d = spec.symbols();
  std::vector<std::size_t> digits(length);
  for (std::size_t i = length; i-- > 0;) {
    digits[i] = index % d;
    index /= d;
  }
  std::string out;
  for (std::size_t i = 0; i < length; ++i) {
    if (i) out += '.';
    out += spec.alphabet[digits[i]];
  }
  return out;
}

double CylinderFunction::at_prefix(std::size_t d, std::size_t index, std::size_t length) const {
  if (length < depth) throw InputError("word is shorter than the cylinder function depth");
  return table[index / word_count(d, length - depth)];
}

CylinderFunction ruelle_apply(const XYSpec& spec, const CylinderFunction& f) {
  spec.validate();
  check_table(spec, f);
  const std::size_t d = spec.symbols();
  const std::size_t k = spec.depth;
  const std::size_t j = f.depth;
  const std::size_t out_depth = std::max(k - 1, j == 0 ? std::size_t{0} : j - 1);
  const std::size_t vtail = ipow(d, k - 1);
  const std::size_t ftail = j == 0 ? 1 : ipow(d, j - 1);
  const std::size_t vshift = ipow(d, out_depth - (k - 1));
  const std::size_t fshift = j == 0 ? 1 : ipow(d, out_depth - (j - 1));
  const std::vector<double> w = weighted_exp(spec);

  CylinderFunction out{out_depth, std::vector<double>(ipow(d, out_depth))};
  std::vector<double> weights(d);
  std::vector<double> values(d);
  for (std::size_t x = 0; x < out.table.size(); ++x) {
    const std::size_t vpre = x / vshift;
    const std::size_t fpre = j == 0 ? 0 : x / fshift;
    for (std::size_t a = 0; a < d; ++a) {
      weights[a] = w[a * vtail + vpre];
      values[a] = j == 0 ? f.table[0] : f.table[a * ftail + fpre];
    }
    out.table[x] = simd::dot(weights, values);
  }
  return out;
}

std::vector<double> transfer_matrix(const XYSpec& spec) {
  spec.validate();
  const std::size_t d = spec.symbols();
  const std::size_t k = spec.depth;
  const std::size_t n = ipow(d, k - 1);
  const std::vector<double> w = weighted_exp(spec);
  std::vector<double> a(n * n, 0.0);
  if (k == 1) {
    for (std::size_t s = 0; s < d; ++s) a[0] += w[s];
    return a;
  }
  // Row x = (x_1..x_{k-1}); column (s, x_1..x_{k-2}).
  const std::size_t shift = ipow(d, k - 2);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t s = 0; s < d; ++s) {
      a[x * n + s * shift + x / d] += w[s * n + x];
    }
  }
  return a;
}

EigenData leading_eigen(const XYSpec& spec, const PowerOptions& options) {
  const std::vector<double> a = transfer_matrix(spec);
  const std::size_t n = ipow(spec.symbols(), spec.depth - 1);
  std::vector<double> at(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) at[c * n + r] = a[r * n + c];
  }

  EigenData out;
  // Right vector, scaled to max 1.
  std::vector<double> v(n, 1.0);
  std::vector<double> next(n);
  double diff = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    simd::matvec(a, n, n, v, next);
    const double top = *std::max_element(next.begin(), next.end());
    if (!(top > 0.0)) throw ValidationError("transfer matrix annihilates the positive cone");
    simd::scale(next, 1.0 / top);
    diff = simd::max_abs_diff(next, v);
    v.swap(next);
    if (diff < options.tol) break;
  }
  if (!(diff < options.tol)) {
    throw ConvergenceError("power iteration (right) did not converge", diff);
  }
  out.iterations = it + 1;

  // Left vector, scaled to total 1.
  std::vector<double> u(n, 1.0 / static_cast<double>(n));
  diff = std::numeric_limits<double>::infinity();
  for (it = 0; it < options.max_iterations; ++it) {
    simd::matvec(at, n, n, u, next);
    const double total = simd::sum(next);
    simd::scale(next, 1.0 / total);
    diff = simd::max_abs_diff(next, u);
    u.swap(next);
    if (diff < options.tol) break;
  }
  if (!(diff < options.tol)) {
    throw ConvergenceError("power iteration (left) did not converge", diff);
  }
  out.iterations = std::max(out.iterations, it + 1);

  simd::matvec(at, n, n, u, next);
  out.eigenvalue = simd::sum(next);

  // int phi d rho = 1.
  simd::scale(v, 1.0 / simd::dot(v, u));

  simd::matvec(a, n, n, v, next);
  double right = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    right = std::max(right, std::abs(next[i] - out.eigenvalue * v[i]));
  }
  simd::matvec(at, n, n, u, next);
  double left = 0.0;
  for (std::size_t i = 0; i < n; ++i) left += std::abs(next[i] - out.eigenvalue * u[i]);
  out.right_residual = right;
  out.left_residual = left;
  out.eigenfunction = CylinderFunction{spec.depth - 1, std::move(v)};
  out.left = std::move(u);
  return out;
}

CylinderMeasure CylinderMeasure::marginal(std::size_t n) const {
  if (n > depth) throw InputError("marginal depth exceeds the measure depth");
  const std::size_t ext = word_count(symbols, depth - n);
  CylinderMeasure out{symbols, n, std::vector<double>(word_count(symbols, n), 0.0)};
  for (std::size_t w = 0; w < out.mass.size(); ++w) {
    out.mass[w] = simd::sum(std::span<const double>(mass).subspan(w * ext, ext));
  }
  return out;
}

double CylinderMeasure::total() const { return simd::sum(mass); }

CylinderMeasure eigenprob(const XYSpec& spec, const EigenData& eigen, std::size_t depth) {
  spec.validate();
  const std::size_t d = spec.symbols();
  const std::size_t k = spec.depth;
  CylinderMeasure rho{d, k - 1, eigen.left};
  if (rho.mass.size() != ipow(d, k - 1)) throw InputError("eigen data does not match the model");
  if (depth <= k - 1) return rho.marginal(depth);
  const std::vector<double> w = weighted_exp(spec);
  // rho[a_1..a_n] = c^{-1} m(a_1) e^{V(a_1..a_k)} rho[a_2..a_n].
  for (std::size_t n = k; n <= depth; ++n) {
    const std::size_t tail = ipow(d, n - 1);
    const std::size_t vshift = ipow(d, n - k);
    CylinderMeasure next{d, n, std::vector<double>(ipow(d, n))};
    for (std::size_t i = 0; i < next.mass.size(); ++i) {
      next.mass[i] = w[i / vshift] * rho.mass[i % tail] / eigen.eigenvalue;
    }
    rho = std::move(next);
  }
  return rho;
}

CylinderMeasure eigenprob(const XYSpec& spec, std::size_t depth) {
  return eigenprob(spec, leading_eigen(spec), depth);
}

double integrate(const CylinderMeasure& rho, const CylinderFunction& h) {
  if (rho.depth < h.depth) throw InputError("measure depth is below the function depth");
  if (h.table.size() != word_count(rho.symbols, h.depth)) {
    throw InputError("cylinder function table has the wrong size");
  }
  const CylinderMeasure m = rho.marginal(h.depth);
  return simd::dot(m.mass, h.table);
}

double limit_quotient(const XYSpec& spec, const CylinderFunction& h, std::size_t n) {
  spec.validate();
  check_table(spec, h);
  if (n < h.depth) {
    throw InputError("limit quotient needs n >= depth of h (" + std::to_string(h.depth) + ")");
  }
  CylinderFunction num = h;
  CylinderFunction den = CylinderFunction::constant(1.0);
  for (std::size_t t = 0; t < n; ++t) {
    num = ruelle_apply(spec, num);
    den = ruelle_apply(spec, den);
    // The same rescaling on both sides leaves the quotient unchanged.
    const double s = *std::max_element(den.table.begin(), den.table.end());
    simd::scale(num.table, 1.0 / s);
    simd::scale(den.table, 1.0 / s);
  }
  const std::size_t d = spec.symbols();
  const double top = num.table[constant_word(d, spec.base_symbol, num.depth)];
  const double bottom = den.table[constant_word(d, spec.base_symbol, den.depth)];
  return top / bottom;
}

XYSpec ruelle_normalize(const XYSpec& spec, double eigenvalue, const CylinderFunction& phi) {
  spec.validate();
  check_table(spec, phi);
  if (phi.depth != spec.depth - 1) throw InputError("eigenfunction depth must be k-1");
  if (!(eigenvalue > 0.0)) throw ValidationError("eigenvalue must be positive");
  for (double v : phi.table) {
    if (!(v > 0.0)) throw ValidationError("eigenfunction must be strictly positive");
  }
  const std::size_t d = spec.symbols();
  const std::size_t tail = ipow(d, spec.depth - 1);
  XYSpec out = spec;
  const double log_c = std::log(eigenvalue);
  for (std::size_t i = 0; i < out.potential.size(); ++i) {
    out.potential[i] = spec.potential[i] + std::log(phi.table[i / d]) -
                       std::log(phi.table[i % tail]) - log_c;
  }
  return out;
}

XYQuasiResult xy_quasi_invariance_check(const XYSpec& spec, const CylinderMeasure& rho,
                                        std::size_t depth, XYModular modular) {
  spec.validate();
  const std::size_t d = spec.symbols();
  const std::size_t k = spec.depth;
  if (depth == 0) throw InputError("cylinder depth must be at least 1");
  const std::size_t e = std::max(depth, k);
  if (rho.symbols != d || rho.depth < e) {
    throw InputError("measure must live on cylinders of depth >= " + std::to_string(e));
  }
  const CylinderMeasure rd = rho.marginal(depth);
  const CylinderMeasure re = rho.marginal(e);
  const std::size_t tails = ipow(d, depth - 1);
  const std::size_t ext = ipow(d, e - depth);
  const std::size_t vshift = ipow(d, e - k);

  XYQuasiResult out;
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t q = 0; q < d; ++q) {
      for (std::size_t w = 0; w < tails; ++w) {
        const double lhs = rd.mass[p * tails + w] * spec.a_priori[q];
        double rhs = 0.0;
        if (modular == XYModular::Unit) {
          rhs = spec.a_priori[p] * rd.mass[q * tails + w];
        } else {
          for (std::size_t x = 0; x < ext; ++x) {
            const std::size_t pw = (p * tails + w) * ext + x;
            const std::size_t qw = (q * tails + w) * ext + x;
            rhs += re.mass[qw] *
                   std::exp(spec.potential[pw / vshift] - spec.potential[qw / vshift]);
          }
          rhs *= spec.a_priori[p];
        }
        const double r = std::abs(lhs - rhs);
        if (r > out.max_residual) out = XYQuasiResult{r, p, q, w};
      }
    }
  }
  return out;
}

HaarSystem cylinder_haar_system(const XYSpec& spec, std::size_t depth) {
  spec.validate();
  if (depth == 0) throw InputError("cylinder depth must be at least 1");
  const std::size_t d = spec.symbols();
  const std::size_t n = ipow(d, depth);
  const std::size_t tails = ipow(d, depth - 1);
  std::vector<std::string> labels(n);
  std::vector<std::size_t> image(n);
  std::vector<double> nu(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = word_label(spec, i, depth);
    image[i] = i % tails;
    nu[i] = spec.a_priori[i / tails];
  }
  FiniteGroupoid g = build_fiber_groupoid(PointSpace(std::move(labels)), image, tails);
  return HaarSystem(g, TransverseFunction(g, std::move(nu)));
}

Potential cylinder_potential(const XYSpec& spec, std::size_t depth) {
  spec.validate();
  if (depth < spec.depth) throw InputError("cylinder depth is below the potential depth");
  const std::size_t d = spec.symbols();
  const std::size_t shift = ipow(d, depth - spec.depth);
  std::vector<double> v(ipow(d, depth));
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = spec.potential[i / shift];
  return Potential(std::move(v));
}

double h_vs_ruelle_check(const XYSpec& spec, const CylinderFunction& f, std::size_t depth) {
  check_table(spec, f);
  if (depth < std::max<std::size_t>({spec.depth, f.depth, 1})) {
    throw InputError("cylinder depth must be at least max(k, depth of f, 1)");
  }
  const std::size_t d = spec.symbols();
  const HaarSystem sys = cylinder_haar_system(spec, depth);
  const Potential v = cylinder_potential(spec, depth);
  std::vector<double> fx(sys.size());
  for (std::size_t i = 0; i < fx.size(); ++i) fx[i] = f.at_prefix(d, i, depth);
  const ClassFunction h = apply_h(v, fx, sys);
  const CylinderFunction lf = ruelle_apply(spec, f);
  const std::size_t tails = ipow(d, depth - 1);
  double worst = 0.0;
  for (std::size_t y = 0; y < sys.size(); ++y) {
    const double rhs = lf.at_prefix(d, y % tails, depth - 1);
    worst = std::max(worst, std::abs(h.at_point(y) - rhs));
  }
  return worst;
}

}  // namespace haar::xy
