#pragma once
// Finite equivalence-relation groupoids and the objects that live on them:
// kernels, transverse functions, potentials, modular functions and measures.
//
// Points are addressed by dense indices 0..n-1 (insertion order of their
// labels). Every point function, measure and kernel row is a dense vector
// over those indices; a zero entry is "no mass". Reductions always run in
// increasing index order.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace haar {

/// Tolerance for exact algebraic identities.
inline constexpr double kStructuralTol = 1e-12;
/// Tolerance for checked hypotheses (normalization, stationarity of inputs).
inline constexpr double kCheckTol = 1e-9;

class PointSpace {
 public:
  PointSpace() = default;
  /// Throws InputError on duplicate or empty labels.
  explicit PointSpace(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t index) const { return labels_.at(index); }
  std::span<const std::string> labels() const { return labels_; }
  std::optional<std::size_t> find(std::string_view label) const;
  /// Throws InputError naming the label when it is unknown.
  std::size_t index_of(std::string_view label) const;

  bool operator==(const PointSpace& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A partition of a point space into equivalence classes. Immutable; copies
/// share storage.
class FiniteGroupoid {
 public:
  FiniteGroupoid();

  const PointSpace& space() const { return data_->space; }
  std::size_t size() const { return data_->class_of.size(); }
  std::size_t num_classes() const { return data_->classes.size(); }
  std::size_t class_of(std::size_t x) const { return data_->class_of[x]; }
  std::span<const std::size_t> members(std::size_t c) const { return data_->classes[c]; }
  bool related(std::size_t x, std::size_t y) const { return class_of(x) == class_of(y); }

  /// Class ids are rendered "C1", "C2", ... in class order.
  std::string class_label(std::size_t c) const;
  /// Inverse of class_label; throws InputError.
  std::size_t class_index(std::string_view label) const;

  /// True when both describe the same points and the same partition.
  bool same_as(const FiniteGroupoid& other) const;

 private:
  struct Data {
    PointSpace space;
    std::vector<std::size_t> class_of;
    std::vector<std::vector<std::size_t>> classes;
  };
  explicit FiniteGroupoid(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;

  friend FiniteGroupoid build_partition_groupoid(PointSpace space,
                                                 const std::vector<std::vector<std::size_t>>& classes);
};

/// Classes given as index lists. They must be disjoint, nonempty and cover
/// the space; otherwise InputError naming the offending point.
FiniteGroupoid build_partition_groupoid(PointSpace space,
                                        const std::vector<std::vector<std::size_t>>& classes);
FiniteGroupoid build_partition_groupoid(PointSpace space,
                                        const std::vector<std::vector<std::string>>& classes);

/// Classes are the nonempty fibers of T, where image[x] < target_size is the
/// index of T(x) in some target set. Classes are ordered by their smallest
/// member.
FiniteGroupoid build_fiber_groupoid(PointSpace space, std::span<const std::size_t> image,
                                    std::size_t target_size);
/// Self-map given by labels; T must map into the space.
FiniteGroupoid build_fiber_groupoid(PointSpace space,
                                    const std::map<std::string, std::string>& map);

/// Bounded real function on points (natural-log scale when used as a potential).
struct Potential {
  std::vector<double> values;

  Potential() = default;
  /// Throws InputError on non-finite values.
  explicit Potential(std::vector<double> v);
  static Potential constant(std::size_t n, double value) {
    return Potential(std::vector<double>(n, value));
  }
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t x) const { return values[x]; }
};

/// Nonnegative finite masses on points.
struct Measure {
  std::vector<double> mass;

  Measure() = default;
  /// Throws InputError on negative or non-finite masses.
  explicit Measure(std::vector<double> m);
  static Measure point_mass(std::size_t n, std::size_t at);
  static Measure uniform(std::size_t n);

  std::size_t size() const { return mass.size(); }
  double operator[](std::size_t x) const { return mass[x]; }
  double total() const;
  bool is_probability(double tol = kStructuralTol) const;
};

/// y -> lambda^y, stored as an n x n row-major table (row y is lambda^y).
/// Construction does not enforce the support condition so that invalid
/// kernels can be reported; see validate_support().
class Kernel {
 public:
  Kernel(FiniteGroupoid groupoid, std::vector<double> rows);
  static Kernel identity(const FiniteGroupoid& groupoid);

  const FiniteGroupoid& groupoid() const { return groupoid_; }
  std::size_t size() const { return groupoid_.size(); }
  std::span<const double> row(std::size_t y) const {
    return std::span<const double>(rows_).subspan(y * size(), size());
  }
  double operator()(std::size_t y, std::size_t x) const { return rows_[y * size() + x]; }
  std::span<const double> data() const { return rows_; }

 private:
  FiniteGroupoid groupoid_;
  std::vector<double> rows_;
};

/// A kernel constant on classes: nu^y(x) = weight(x) for x ~ y, zero off
/// the class. Weights may be signed; validate_transverse() rejects those.
class TransverseFunction {
 public:
  TransverseFunction() = default;
  /// Throws InputError on size mismatch or non-finite weights.
  TransverseFunction(FiniteGroupoid groupoid, std::vector<double> weights);
  /// Uniform probability on every class.
  static TransverseFunction uniform(const FiniteGroupoid& groupoid);
  /// Throws ValidationError with the report's message if the kernel is not transverse.
  static TransverseFunction from_kernel(const Kernel& kernel);

  const FiniteGroupoid& groupoid() const { return groupoid_; }
  std::size_t size() const { return weights_.size(); }
  double weight(std::size_t x) const { return weights_[x]; }
  std::span<const double> weights() const { return weights_; }
  double class_total(std::size_t c) const;

  bool is_nonnegative() const;
  bool is_probability(double tol = kStructuralTol) const;
  /// Divides each class by its total; throws ValidationError on a class with
  /// nonpositive total.
  TransverseFunction normalized() const;
  TransverseFunction positive_part() const;
  TransverseFunction negative_part() const;
  Kernel as_kernel() const;

 private:
  FiniteGroupoid groupoid_;
  std::vector<double> weights_;
};

/// The transverse function f(x) * base^y(dx).
TransverseFunction density(std::span<const double> f, const TransverseFunction& base);

struct ValidationReport {
  bool ok = true;
  std::string failure;
  /// First violating pair (y, x) in index order, when the check is pairwise.
  std::optional<std::pair<std::size_t, std::size_t>> witness;
  double max_discrepancy = 0.0;
};

/// Kernel support: lambda^y vanishes outside [y].
ValidationReport validate_support(const Kernel& kernel);
/// Support, nonnegativity and nu^x = nu^y for x ~ y.
ValidationReport validate_transverse(const Kernel& kernel);

/// Positive cocycle on in-class pairs, either e^{V(y)-V(x)} or an explicit table.
class ModularFunction {
 public:
  using Table = std::map<std::pair<std::size_t, std::size_t>, double>;

  static ModularFunction exponential(Potential v);
  /// Diagonal entries default to 1 when absent. Entries must be finite.
  static ModularFunction table(Table entries);

  /// delta(x, y); throws InputError for a missing table entry.
  double operator()(std::size_t x, std::size_t y) const;
  const Potential* exponent() const { return std::get_if<Potential>(&repr_); }

 private:
  explicit ModularFunction(std::variant<Potential, Table> repr) : repr_(std::move(repr)) {}
  std::variant<Potential, Table> repr_;
};

/// Cocycle identity over all in-class triples, relative tolerance tol, plus
/// positivity and delta(x, x) = 1. Throws InputError on missing pairs.
ValidationReport validate_modular(const ModularFunction& delta, const FiniteGroupoid& groupoid,
                                  double tol);

struct SaturationResult {
  bool ok = true;
  std::optional<std::size_t> witness_class;
};

/// M(B) = 0 implies M(S[B]) = 0 for atomic M: each class is all-positive or all-zero.
SaturationResult saturation_check(const Measure& m, const FiniteGroupoid& groupoid);

/// A groupoid with a fixed probability transverse function nu_hat.
class HaarSystem {
 public:
  /// Throws ValidationError unless nu_hat is a nonnegative probability
  /// transverse function on the groupoid.
  HaarSystem(FiniteGroupoid groupoid, TransverseFunction nu_hat);

  const FiniteGroupoid& groupoid() const { return groupoid_; }
  const TransverseFunction& nu_hat() const { return nu_hat_; }
  std::size_t size() const { return groupoid_.size(); }
  std::size_t num_classes() const { return groupoid_.num_classes(); }
  /// nu_hat weights of class c, in member order.
  std::span<const double> class_weights(std::size_t c) const { return class_weights_[c]; }

  /// Values of f on the members of class c, in member order.
  void gather(std::size_t c, std::span<const double> f, std::vector<double>& out) const;

 private:
  FiniteGroupoid groupoid_;
  TransverseFunction nu_hat_;
  std::vector<std::vector<double>> class_weights_;
};

/// (lambda1 * lambda2)^y(s) = sum_x lambda1^y(x) lambda2^x(s). Throws
/// ValidationError when either input violates the support condition.
Kernel kernel_convolve(const Kernel& lambda1, const Kernel& lambda2);

}  // namespace haar
