#pragma once
// Generalized XY model on K^N with a finite alphabet K (or quadrature nodes
// of a compact K) and a priori weights m. Potentials and test functions
// depend on finitely many leading coordinates and are stored as tables over
// words; word (a_1, ..., a_j) has index sum a_i d^{j-i} (a_1 most significant).
//
// Ruelle operator:  (L_V f)(x) = sum_a m(a) e^{V(a, x_1, ...)} f(a, x_1, ...).

#include <cstddef>
#include <string>
#include <vector>

#include "haar/groupoid.hpp"

namespace haar::xy {

struct XYSpec {
  std::vector<std::string> alphabet;
  std::vector<double> a_priori;
  std::size_t depth = 1;           ///< V depends on coordinates 1..depth
  std::vector<double> potential;   ///< d^depth entries
  std::size_t base_symbol = 0;     ///< z0 = (base_symbol)^infinity

  std::size_t symbols() const { return alphabet.size(); }
  /// Throws InputError on shape errors, ValidationError when m is not a
  /// probability.
  void validate() const;
};

/// d^n; throws InputError on overflow.
std::size_t word_count(std::size_t d, std::size_t n);

/// Alphabet labels joined with '.', e.g. "a.b.a".
std::string word_label(const XYSpec& spec, std::size_t index, std::size_t length);

struct CylinderFunction {
  std::size_t depth = 0;
  std::vector<double> table;  ///< d^depth entries; depth 0 is a constant

  static CylinderFunction constant(double value) { return {0, {value}}; }
  /// Value on the word whose first `depth` coordinates are the prefix of
  /// `index` (a word of length `length` >= depth).
  double at_prefix(std::size_t d, std::size_t index, std::size_t length) const;
};

CylinderFunction ruelle_apply(const XYSpec& spec, const CylinderFunction& f);

/// Matrix A of L_V on depth-(k-1) tables: (L_V phi)(x) = sum_w A[x][w] phi(w).
std::vector<double> transfer_matrix(const XYSpec& spec);

struct PowerOptions {
  std::size_t max_iterations = 200000;
  double tol = 1e-12;
};

struct EigenData {
  double eigenvalue = 0.0;
  CylinderFunction eigenfunction;  ///< depth k-1, normalized so int phi d rho = 1
  std::vector<double> left;        ///< rho on depth-(k-1) cylinders, sums to 1
  std::size_t iterations = 0;
  double right_residual = 0.0;     ///< sup |A phi - c phi|
  double left_residual = 0.0;      ///< sum |A^T rho - c rho|
};

/// Power iteration for the Perron data of L_V (right) and L_V^* (left).
/// Throws ConvergenceError after max_iterations.
EigenData leading_eigen(const XYSpec& spec, const PowerOptions& options = {});

struct CylinderMeasure {
  std::size_t symbols = 0;
  std::size_t depth = 0;
  std::vector<double> mass;  ///< d^depth entries

  CylinderMeasure marginal(std::size_t n) const;
  double total() const;
};

/// Eigenprobability rho of L_V^* on depth-n cylinders.
CylinderMeasure eigenprob(const XYSpec& spec, const EigenData& eigen, std::size_t depth);
CylinderMeasure eigenprob(const XYSpec& spec, std::size_t depth);

/// int h d rho; rho.depth must be at least h.depth.
double integrate(const CylinderMeasure& rho, const CylinderFunction& h);

/// L^n h(z0) / L^n 1(z0). Throws InputError when n < h.depth.
double limit_quotient(const XYSpec& spec, const CylinderFunction& h, std::size_t n);

/// U = V + log phi - log(phi o sigma) - log c, so that L_U 1 = 1.
XYSpec ruelle_normalize(const XYSpec& spec, double eigenvalue, const CylinderFunction& phi);

enum class XYModular {
  Exponential,  ///< delta(x, y) = e^{V(y) - V(x)}
  Unit,         ///< delta = 1 (negative control)
};

struct XYQuasiResult {
  double max_residual = 0.0;
  std::size_t first = 0;   ///< symbol of the first argument's cylinder
  std::size_t second = 0;  ///< symbol of the second argument's cylinder
  std::size_t tail = 0;    ///< shared tail word (length depth-1)
};

/// Both sides of the quasi-invariance identity for rho on every indicator
/// of a pair of depth-D cylinders [p w] x [q w]. rho.depth must be at least
/// max(D, k); InputError otherwise.
XYQuasiResult xy_quasi_invariance_check(const XYSpec& spec, const CylinderMeasure& rho,
                                        std::size_t depth,
                                        XYModular modular = XYModular::Exponential);

/// Haar system on depth-D words: classes share coordinates 2..D, nu_hat
/// puts weight m(a) on (a, w).
HaarSystem cylinder_haar_system(const XYSpec& spec, std::size_t depth);
/// V as a point function on depth-D words (D >= k).
Potential cylinder_potential(const XYSpec& spec, std::size_t depth);

/// max over depth-D words y of |H_V(f)(y) - (L_V f)(sigma y)|, H_V computed
/// on cylinder_haar_system. D must be at least max(k, f.depth, 1).
double h_vs_ruelle_check(const XYSpec& spec, const CylinderFunction& f, std::size_t depth);

}  // namespace haar::xy
