#include "haar/groupoid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "haar/error.hpp"
#include "haar/simd/kernels.hpp"

namespace haar {

// ---------------------------------------------------------------- PointSpace

PointSpace::PointSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  index_.reserve(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw InputError("empty point label at position " + std::to_string(i));
    if (!index_.emplace(labels_[i], i).second) {
      throw InputError("duplicate point label '" + labels_[i] + "'");
    }
  }
}

std::optional<std::size_t> PointSpace::find(std::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t PointSpace::index_of(std::string_view label) const {
  if (auto i = find(label)) return *i;
  throw InputError("unknown point '" + std::string(label) + "'");
}

// ------------------------------------------------------------ FiniteGroupoid

FiniteGroupoid::FiniteGroupoid() : data_(std::make_shared<const Data>()) {}

std::string FiniteGroupoid::class_label(std::size_t c) const { return "C" + std::to_string(c + 1); }

std::size_t FiniteGroupoid::class_index(std::string_view label) const {
  if (label.size() >= 2 && label.front() == 'C') {
    std::size_t k = 0;
    bool digits = true;
    for (char ch : label.substr(1)) {
      if (ch < '0' || ch > '9') {
        digits = false;
        break;
      }
      k = k * 10 + static_cast<std::size_t>(ch - '0');
    }
    if (digits && k >= 1 && k <= num_classes()) return k - 1;
  }
  throw InputError("unknown class id '" + std::string(label) + "'");
}

bool FiniteGroupoid::same_as(const FiniteGroupoid& other) const {
  if (data_ == other.data_) return true;
  return data_->space == other.data_->space && data_->class_of == other.data_->class_of;
}

FiniteGroupoid build_partition_groupoid(PointSpace space,
                                        const std::vector<std::vector<std::size_t>>& classes) {
  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  const std::size_t n = space.size();
  std::vector<std::size_t> class_of(n, kUnassigned);
  std::vector<std::vector<std::size_t>> members;
  members.reserve(classes.size());
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (classes[c].empty()) throw InputError("class " + std::to_string(c + 1) + " is empty");
    for (std::size_t x : classes[c]) {
      if (x >= n) throw InputError("class member index " + std::to_string(x) + " out of range");
      if (class_of[x] != kUnassigned) {
        throw InputError("point '" + space.label(x) + "' appears in more than one class");
      }
      class_of[x] = c;
    }
    members.push_back(classes[c]);
  }
  for (std::size_t x = 0; x < n; ++x) {
    if (class_of[x] == kUnassigned) {
      throw InputError("point '" + space.label(x) + "' is not covered by any class");
    }
  }
  auto data = std::make_shared<FiniteGroupoid::Data>();
  data->space = std::move(space);
  data->class_of = std::move(class_of);
  data->classes = std::move(members);
  return FiniteGroupoid(std::move(data));
}

FiniteGroupoid build_partition_groupoid(PointSpace space,
                                        const std::vector<std::vector<std::string>>& classes) {
  std::vector<std::vector<std::size_t>> indices;
  indices.reserve(classes.size());
  for (const auto& cls : classes) {
    std::vector<std::size_t> idx;
    idx.reserve(cls.size());
    for (const auto& label : cls) idx.push_back(space.index_of(label));
    indices.push_back(std::move(idx));
  }
  return build_partition_groupoid(std::move(space), indices);
}

FiniteGroupoid build_fiber_groupoid(PointSpace space, std::span<const std::size_t> image,
                                    std::size_t target_size) {
  if (image.size() != space.size()) {
    throw InputError("map must be defined on every point (" + std::to_string(image.size()) +
                     " images for " + std::to_string(space.size()) + " points)");
  }
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> fiber_of_target(target_size, kNone);
  std::vector<std::vector<std::size_t>> classes;
  for (std::size_t x = 0; x < image.size(); ++x) {
    if (image[x] >= target_size) {
      throw InputError("map sends '" + space.label(x) + "' outside the target set");
    }
    std::size_t& slot = fiber_of_target[image[x]];
    if (slot == kNone) {
      slot = classes.size();
      classes.emplace_back();
    }
    classes[slot].push_back(x);
  }
  return build_partition_groupoid(std::move(space), classes);
}

FiniteGroupoid build_fiber_groupoid(PointSpace space,
                                    const std::map<std::string, std::string>& map) {
  std::vector<std::size_t> image(space.size());
  std::vector<bool> seen(space.size(), false);
  for (const auto& [from, to] : map) {
    const std::size_t x = space.index_of(from);
    auto y = space.find(to);
    if (!y) throw InputError("map sends '" + from + "' to '" + to + "', which is outside the space");
    image[x] = *y;
    seen[x] = true;
  }
  for (std::size_t x = 0; x < space.size(); ++x) {
    if (!seen[x]) throw InputError("map is not defined at '" + space.label(x) + "'");
  }
  const std::size_t n = space.size();
  return build_fiber_groupoid(std::move(space), image, n);
}

// ------------------------------------------------------- Potential / Measure

Potential::Potential(std::vector<double> v) : values(std::move(v)) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw InputError("potential value at index " + std::to_string(i) + " is not finite");
    }
  }
}

Measure::Measure(std::vector<double> m) : mass(std::move(m)) {
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (!std::isfinite(mass[i]) || mass[i] < 0.0) {
      throw InputError("measure mass at index " + std::to_string(i) +
                       " must be finite and nonnegative");
    }
  }
}

Measure Measure::point_mass(std::size_t n, std::size_t at) {
  if (at >= n) throw InputError("point mass index out of range");
  std::vector<double> m(n, 0.0);
  m[at] = 1.0;
  return Measure(std::move(m));
}

Measure Measure::uniform(std::size_t n) {
  if (n == 0) throw InputError("uniform measure on an empty space");
  return Measure(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double Measure::total() const { return simd::sum(mass); }

bool Measure::is_probability(double tol) const { return std::abs(total() - 1.0) <= tol; }

// -------------------------------------------------------------------- Kernel

Kernel::Kernel(FiniteGroupoid groupoid, std::vector<double> rows)
    : groupoid_(std::move(groupoid)), rows_(std::move(rows)) {
  const std::size_t n = groupoid_.size();
  if (rows_.size() != n * n) {
    throw InputError("kernel table must have " + std::to_string(n * n) + " entries");
  }
  for (double v : rows_) {
    if (!std::isfinite(v)) throw InputError("kernel entries must be finite");
  }
}

Kernel Kernel::identity(const FiniteGroupoid& groupoid) {
  const std::size_t n = groupoid.size();
  std::vector<double> rows(n * n, 0.0);
  for (std::size_t y = 0; y < n; ++y) rows[y * n + y] = 1.0;
  return Kernel(groupoid, std::move(rows));
}

ValidationReport validate_support(const Kernel& kernel) {
  ValidationReport report;
  const auto& g = kernel.groupoid();
  for (std::size_t y = 0; y < kernel.size(); ++y) {
    for (std::size_t x = 0; x < kernel.size(); ++x) {
      const double v = kernel(y, x);
      if (v != 0.0 && !g.related(x, y)) {
        if (report.ok) {
          report.ok = false;
          report.witness = {y, x};
          std::ostringstream msg;
          msg << "support: lambda^" << g.space().label(y) << " has mass " << v << " at '"
              << g.space().label(x) << "' outside its class";
          report.failure = msg.str();
        }
        report.max_discrepancy = std::max(report.max_discrepancy, std::abs(v));
      }
    }
  }
  return report;
}

ValidationReport validate_transverse(const Kernel& kernel) {
  ValidationReport report = validate_support(kernel);
  if (!report.ok) return report;
  const auto& g = kernel.groupoid();
  for (std::size_t y = 0; y < kernel.size(); ++y) {
    for (std::size_t x : g.members(g.class_of(y))) {
      if (kernel(y, x) < 0.0) {
        report.ok = false;
        report.witness = {y, x};
        report.failure = "negative weight in nu^" + g.space().label(y) + " at '" +
                         g.space().label(x) + "'";
        report.max_discrepancy = std::max(report.max_discrepancy, -kernel(y, x));
        return report;
      }
    }
  }
  for (std::size_t c = 0; c < g.num_classes(); ++c) {
    auto members = g.members(c);
    const std::size_t first = members.front();
    for (std::size_t y : members.subspan(1)) {
      const double diff = simd::max_abs_diff(kernel.row(first), kernel.row(y));
      if (diff > 0.0) {
        if (report.ok) {
          report.ok = false;
          report.witness = {first, y};
          report.failure = "nu^" + g.space().label(first) + " differs from nu^" +
                           g.space().label(y) + " within class " + g.class_label(c);
        }
        report.max_discrepancy = std::max(report.max_discrepancy, diff);
      }
    }
  }
  return report;
}

Kernel kernel_convolve(const Kernel& lambda1, const Kernel& lambda2) {
  if (!lambda1.groupoid().same_as(lambda2.groupoid())) {
    throw InputError("kernel_convolve: kernels live on different groupoids");
  }
  for (const Kernel* k : {&lambda1, &lambda2}) {
    ValidationReport r = validate_support(*k);
    if (!r.ok) throw ValidationError("kernel_convolve: " + r.failure);
  }
  const auto& g = lambda1.groupoid();
  const std::size_t n = g.size();
  std::vector<double> out(n * n, 0.0);
  std::vector<double> coeff;
  std::vector<double> column;
  for (std::size_t y = 0; y < n; ++y) {
    auto members = g.members(g.class_of(y));
    coeff.resize(members.size());
    column.resize(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) coeff[i] = lambda1(y, members[i]);
    for (std::size_t s : members) {
      for (std::size_t i = 0; i < members.size(); ++i) column[i] = lambda2(members[i], s);
      out[y * n + s] = simd::dot(coeff, column);
    }
  }
  return Kernel(g, std::move(out));
}

// -------------------------------------------------------- TransverseFunction

TransverseFunction::TransverseFunction(FiniteGroupoid groupoid, std::vector<double> weights)
    : groupoid_(std::move(groupoid)), weights_(std::move(weights)) {
  if (weights_.size() != groupoid_.size()) {
    throw InputError("transverse function needs one weight per point");
  }
  for (double w : weights_) {
    if (!std::isfinite(w)) throw InputError("transverse function weights must be finite");
  }
}

TransverseFunction TransverseFunction::uniform(const FiniteGroupoid& groupoid) {
  std::vector<double> w(groupoid.size());
  for (std::size_t c = 0; c < groupoid.num_classes(); ++c) {
    auto members = groupoid.members(c);
    for (std::size_t x : members) w[x] = 1.0 / static_cast<double>(members.size());
  }
  return TransverseFunction(groupoid, std::move(w));
}

TransverseFunction TransverseFunction::from_kernel(const Kernel& kernel) {
  ValidationReport r = validate_support(kernel);
  if (r.ok) {
    // Signed rows are allowed here; only support and class-constancy matter.
    const auto& g = kernel.groupoid();
    for (std::size_t c = 0; c < g.num_classes() && r.ok; ++c) {
      auto members = g.members(c);
      for (std::size_t y : members.subspan(1)) {
        if (simd::max_abs_diff(kernel.row(members.front()), kernel.row(y)) > 0.0) {
          r.ok = false;
          r.failure = "rows differ within class " + g.class_label(c);
          break;
        }
      }
    }
  }
  if (!r.ok) throw ValidationError("not a transverse function: " + r.failure);
  const auto& g = kernel.groupoid();
  std::vector<double> w(g.size());
  for (std::size_t x = 0; x < g.size(); ++x) w[x] = kernel(x, x);
  return TransverseFunction(g, std::move(w));
}

double TransverseFunction::class_total(std::size_t c) const {
  double s = 0.0;
  for (std::size_t x : groupoid_.members(c)) s += weights_[x];
  return s;
}

bool TransverseFunction::is_nonnegative() const {
  return std::all_of(weights_.begin(), weights_.end(), [](double w) { return w >= 0.0; });
}

bool TransverseFunction::is_probability(double tol) const {
  if (!is_nonnegative()) return false;
  for (std::size_t c = 0; c < groupoid_.num_classes(); ++c) {
    if (std::abs(class_total(c) - 1.0) > tol) return false;
  }
  return true;
}

TransverseFunction TransverseFunction::normalized() const {
  std::vector<double> w = weights_;
  for (std::size_t c = 0; c < groupoid_.num_classes(); ++c) {
    const double total = class_total(c);
    if (!(total > 0.0)) {
      throw ValidationError("class " + groupoid_.class_label(c) +
                            " has nonpositive total weight and cannot be normalized");
    }
    for (std::size_t x : groupoid_.members(c)) w[x] /= total;
  }
  return TransverseFunction(groupoid_, std::move(w));
}

TransverseFunction TransverseFunction::positive_part() const {
  std::vector<double> w(weights_.size());
  std::transform(weights_.begin(), weights_.end(), w.begin(),
                 [](double v) { return v > 0.0 ? v : 0.0; });
  return TransverseFunction(groupoid_, std::move(w));
}

TransverseFunction TransverseFunction::negative_part() const {
  std::vector<double> w(weights_.size());
  std::transform(weights_.begin(), weights_.end(), w.begin(),
                 [](double v) { return v < 0.0 ? -v : 0.0; });
  return TransverseFunction(groupoid_, std::move(w));
}

Kernel TransverseFunction::as_kernel() const {
  const std::size_t n = size();
  std::vector<double> rows(n * n, 0.0);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x : groupoid_.members(groupoid_.class_of(y))) rows[y * n + x] = weights_[x];
  }
  return Kernel(groupoid_, std::move(rows));
}

TransverseFunction density(std::span<const double> f, const TransverseFunction& base) {
  if (f.size() != base.size()) throw InputError("density: function size does not match");
  std::vector<double> w(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) w[x] = f[x] * base.weight(x);
  return TransverseFunction(base.groupoid(), std::move(w));
}

// ----------------------------------------------------------- ModularFunction

ModularFunction ModularFunction::exponential(Potential v) {
  return ModularFunction(std::variant<Potential, Table>(std::move(v)));
}

ModularFunction ModularFunction::table(Table entries) {
  for (const auto& [pair, value] : entries) {
    if (!std::isfinite(value)) throw InputError("modular function entries must be finite");
  }
  return ModularFunction(std::variant<Potential, Table>(std::move(entries)));
}

double ModularFunction::operator()(std::size_t x, std::size_t y) const {
  if (const auto* v = std::get_if<Potential>(&repr_)) {
    return std::exp(v->values.at(y) - v->values.at(x));
  }
  const auto& t = std::get<Table>(repr_);
  if (auto it = t.find({x, y}); it != t.end()) return it->second;
  if (x == y) return 1.0;
  throw InputError("modular function has no entry for pair (" + std::to_string(x) + ", " +
                   std::to_string(y) + ")");
}

ValidationReport validate_modular(const ModularFunction& delta, const FiniteGroupoid& groupoid,
                                  double tol) {
  ValidationReport report;
  const auto& labels = groupoid.space();
  auto fail = [&](std::size_t a, std::size_t b, double discrepancy, const std::string& why) {
    if (report.ok) {
      report.ok = false;
      report.witness = {a, b};
      report.failure = why;
    }
    report.max_discrepancy = std::max(report.max_discrepancy, discrepancy);
  };
  if (const Potential* v = delta.exponent(); v && v->size() != groupoid.size()) {
    throw InputError("modular exponent size does not match the groupoid");
  }
  for (std::size_t c = 0; c < groupoid.num_classes(); ++c) {
    auto members = groupoid.members(c);
    // Materialize the class block once; missing entries throw here.
    const std::size_t k = members.size();
    std::vector<double> block(k * k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) block[i * k + j] = delta(members[i], members[j]);
    }
    for (std::size_t i = 0; i < k; ++i) {
      const double diag = block[i * k + i];
      if (std::abs(diag - 1.0) > tol) {
        fail(members[i], members[i], std::abs(diag - 1.0),
             "delta(" + labels.label(members[i]) + ", " + labels.label(members[i]) + ") != 1");
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (!(block[i * k + j] > 0.0)) {
          fail(members[i], members[j], std::abs(block[i * k + j]),
               "delta(" + labels.label(members[i]) + ", " + labels.label(members[j]) +
                   ") is not positive");
        }
      }
    }
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t l = 0; l < k; ++l) {
          const double lhs = block[i * k + j] * block[j * k + l];
          const double rhs = block[i * k + l];
          const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-300});
          const double rel = std::abs(lhs - rhs) / scale;
          if (rel > tol) {
            fail(members[i], members[l], rel,
                 "cocycle fails: delta(" + labels.label(members[i]) + ", " +
                     labels.label(members[j]) + ") delta(" + labels.label(members[j]) + ", " +
                     labels.label(members[l]) + ") != delta(" + labels.label(members[i]) + ", " +
                     labels.label(members[l]) + ")");
          }
        }
      }
    }
  }
  return report;
}

SaturationResult saturation_check(const Measure& m, const FiniteGroupoid& groupoid) {
  if (m.size() != groupoid.size()) throw InputError("measure size does not match the groupoid");
  for (std::size_t c = 0; c < groupoid.num_classes(); ++c) {
    bool any_zero = false;
    bool any_positive = false;
    for (std::size_t x : groupoid.members(c)) {
      (m[x] > 0.0 ? any_positive : any_zero) = true;
    }
    if (any_zero && any_positive) return {false, c};
  }
  return {};
}

// ---------------------------------------------------------------- HaarSystem

HaarSystem::HaarSystem(FiniteGroupoid groupoid, TransverseFunction nu_hat)
    : groupoid_(std::move(groupoid)), nu_hat_(std::move(nu_hat)) {
  if (!nu_hat_.groupoid().same_as(groupoid_)) {
    throw InputError("nu_hat is defined on a different groupoid");
  }
  if (!nu_hat_.is_nonnegative()) throw ValidationError("nu_hat has negative weights");
  for (std::size_t c = 0; c < groupoid_.num_classes(); ++c) {
    const double total = nu_hat_.class_total(c);
    if (std::abs(total - 1.0) > kStructuralTol) {
      std::ostringstream msg;
      msg << "nu_hat is not a probability on class " << groupoid_.class_label(c) << " (total "
          << total << ")";
      throw ValidationError(msg.str());
    }
  }
  class_weights_.resize(groupoid_.num_classes());
  for (std::size_t c = 0; c < groupoid_.num_classes(); ++c) {
    gather(c, nu_hat_.weights(), class_weights_[c]);
  }
}

void HaarSystem::gather(std::size_t c, std::span<const double> f, std::vector<double>& out) const {
  auto members = groupoid_.members(c);
  out.resize(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) out[i] = f[members[i]];
}

}  // namespace haar
