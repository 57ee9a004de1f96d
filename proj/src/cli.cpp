#include "haar/cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "haar/dyn.hpp"
#include "haar/error.hpp"
#include "haar/io.hpp"
#include "haar/report.hpp"
#include "haar/thermo.hpp"
#include "haar/transfer.hpp"
#include "haar/transverse.hpp"
#include "haar/xy.hpp"

namespace haar::cli {
namespace {

using json = io::json;
using report::tagged;

struct Options {
  std::string groupoid, potential, measure, modular, xy, markov, nu, function, kernel, map;
  std::string seed_measure;
  std::string extremal_case;
  std::string delta = "exponential";
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::size_t> samples, iters, depth;
};

// Thrown by a verb whose check failed; the report is still emitted.
struct CheckFailed {
  std::string message;
};

class Run {
 public:
  Run(const Options& o, json& doc) : o_(o), doc_(doc) {}

  const Options& opt() const { return o_; }
  json& doc() { return doc_; }
  json& outputs() { return doc_["outputs"]; }
  json& certificates() { return doc_["certificates"]; }
  json& diagnostics() { return doc_["diagnostics"]; }

  json load(const char* flag, const std::string& path) {
    if (path.empty()) throw InputError(std::string("missing required flag ") + flag);
    json doc = io::read_json_file(path);
    json entry;
    entry["flag"] = flag;
    entry["path"] = path;
    entry["sha256"] = report::sha256_file(path);
    doc_["inputs"].push_back(entry);
    return doc;
  }

  const HaarSystem& system() {
    if (!sys_) sys_.emplace(io::load_haar_system(load("--groupoid", o_.groupoid)));
    return *sys_;
  }
  Potential potential() { return io::load_potential(load("--potential", o_.potential), space()); }
  Measure measure() { return io::load_measure(load("--measure", o_.measure), space()); }
  TransverseFunction nu() { return io::load_transverse(load("--nu", o_.nu), system().groupoid()); }

  double tol(double fallback) const { return o_.tol.value_or(fallback); }
  std::size_t samples(std::size_t fallback) const { return o_.samples.value_or(fallback); }

  std::mt19937_64 rng() {
    const std::uint64_t seed = o_.seed.value_or(kDefaultSeed);
    diagnostics()["seed"] = seed;
    diagnostics()["seed_source"] = o_.seed ? "flag" : "default";
    return std::mt19937_64(seed);
  }

  std::string label(std::size_t x) { return system().groupoid().space().label(x); }

 private:
  const PointSpace& space() {
    system();
    return sys_->groupoid().space();
  }

  const Options& o_;
  json& doc_;
  std::optional<HaarSystem> sys_;
};

json class_labels(const FiniteGroupoid& g, const std::vector<std::size_t>& classes) {
  json out = json::array();
  for (std::size_t c : classes) out.push_back(g.class_label(c));
  return out;
}

json per_class(const ClassFunction& f) {
  json out = json::object();
  for (std::size_t c = 0; c < f.per_class.size(); ++c) out[f.groupoid.class_label(c)] = f.per_class[c];
  return out;
}

std::vector<double> random_weights(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> draw(0.0, 1.0);
  std::vector<double> w(n);
  for (double& v : w) v = draw(rng);
  return w;
}

Potential random_potential(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> draw(-3.0, 3.0);
  std::vector<double> w(n);
  for (double& v : w) v = draw(rng);
  return Potential(std::move(w));
}

Measure random_probability(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> w = random_weights(rng, n);
  double total = 0.0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  return Measure(std::move(w));
}

Kernel random_unit_kernel(std::mt19937_64& rng, const FiniteGroupoid& g) {
  const std::size_t n = g.size();
  std::vector<double> rows(n * n, 0.0);
  std::uniform_real_distribution<double> draw(0.05, 1.0);
  for (std::size_t y = 0; y < n; ++y) {
    const auto members = g.members(g.class_of(y));
    double total = 0.0;
    for (std::size_t x : members) total += rows[y * n + x] = draw(rng);
    for (std::size_t x : members) rows[y * n + x] /= total;
  }
  return Kernel(g, std::move(rows));
}

Measure seed_measure(Run& run, const HaarSystem& sys) {
  const std::string& spec = run.opt().seed_measure;
  run.diagnostics()["seed_measure"] = spec.empty() ? "uniform" : spec;
  if (spec.empty() || spec == "uniform") return Measure::uniform(sys.size());
  if (spec.rfind("delta:", 0) == 0) {
    return Measure::point_mass(sys.size(), sys.groupoid().space().index_of(spec.substr(6)));
  }
  throw InputError("--seed-measure must be 'uniform' or 'delta:<point>'");
}

void check(bool ok, const std::string& message) {
  if (!ok) throw CheckFailed{message};
}

void put_residual(Run& run, const InvarianceResidual& r, double tol) {
  const auto& g = run.system().groupoid();
  run.doc()["value"] = r.max_residual;
  run.outputs()["max_residual"] = tagged(r.max_residual, "closed_form", tol);
  run.diagnostics()["worst_pair"] = json::array({g.space().label(r.worst.first),
                                                 g.space().label(r.worst.second)});
}

// ----- groupoid verbs -------------------------------------------------------

void cmd_normalize(Run& run) {
  const HaarSystem sys = run.system();
  const Potential u = run.potential();
  const Potential v = normalize(u, sys);
  const auto& space = sys.groupoid().space();
  run.doc()["values"] = io::potential_json(v, space)["values"];
  run.outputs()["normalization_residual"] =
      tagged(normalization_residual(v, sys), "closed_form", kStructuralTol);
  run.diagnostics()["u_tilde"] = per_class(u_tilde(u, sys));
}

void cmd_invariant(Run& run) {
  const HaarSystem sys = run.system();
  const Potential u = run.potential();
  const double input_residual = normalization_residual(u, sys);
  const Potential v = normalize(u, sys);
  const Measure m = invariant_from_seed(v, seed_measure(run, sys), sys);
  const InvarianceResidual r = verify_haar_invariance(m, v, sys);
  run.doc()["mass"] = io::measure_json(m, sys.groupoid().space())["mass"];
  run.outputs()["invariance_residual"] = tagged(r.max_residual, "closed_form", kInvarianceTol);
  run.diagnostics()["input_normalization_residual"] = input_residual;
  run.diagnostics()["normalized_on_load"] = input_residual > kCheckTol;
}

void cmd_verify_haar(Run& run) {
  const HaarSystem sys = run.system();
  const Measure m = run.measure();
  const Potential v = run.potential();
  const double tol = run.tol(kInvarianceTol);
  const InvarianceResidual r = verify_haar_invariance(m, v, sys);
  put_residual(run, r, tol);
  check(r.passes(tol), "Haar invariance fails at pair (" + run.label(r.worst.first) + ", " +
                           run.label(r.worst.second) + ")");
}

void cmd_verify_quasi(Run& run) {
  const HaarSystem sys = run.system();
  const Measure m = run.measure();
  const ModularFunction delta =
      io::load_modular(run.load("--modular", run.opt().modular), sys.groupoid().space());
  const double tol = run.tol(kInvarianceTol);
  const ValidationReport cocycle = validate_modular(delta, sys.groupoid(), kStructuralTol);
  run.diagnostics()["cocycle_ok"] = cocycle.ok;
  check(cocycle.ok, "modular function is not a cocycle: " + cocycle.failure);
  const InvarianceResidual r = verify_quasi_invariance(m, delta, sys);
  put_residual(run, r, tol);
  check(r.passes(tol), "quasi-invariance fails at pair (" + run.label(r.worst.first) + ", " +
                           run.label(r.worst.second) + ")");
}

void cmd_verify_saturation(Run& run) {
  const HaarSystem sys = run.system();
  const Measure m = run.measure();
  const SaturationResult s = saturation_check(m, sys.groupoid());
  run.doc()["value"] = s.ok;
  if (!s.ok) {
    const std::string cls = sys.groupoid().class_label(*s.witness_class);
    run.diagnostics()["witness_class"] = cls;
    check(false, "saturation fails on class " + cls + ": some points have mass, others none");
  }
}

// ----- transverse measures --------------------------------------------------

TransverseMeasure load_lambda(Run& run) {
  const HaarSystem sys = run.system();
  return TransverseMeasure(sys, run.potential(), run.measure());
}

void cmd_lambda_eval(Run& run) {
  const TransverseMeasure lambda = load_lambda(run);
  const TransverseFunction nu = run.nu();
  const double value = lambda_eval(lambda, nu);
  const double relative = lambda_eval_relative(lambda, nu);
  run.doc()["value"] = value;
  run.outputs()["lambda"] = tagged(value, "closed_form", kStructuralTol);
  run.certificates()["relative_form"] = relative;
  run.certificates()["relative_form_gap"] = std::abs(value - relative);
}

void cmd_lambda_roundtrip(Run& run) {
  const TransverseMeasure lambda = load_lambda(run);
  const HaarSystem& sys = lambda.system();
  const Measure m2 = measure_from_transverse(
      sys, [&](const TransverseFunction& nu) { return lambda_eval(lambda, nu); }, lambda.modulus());
  double back = 0.0;
  for (std::size_t x = 0; x < m2.size(); ++x) back = std::max(back, std::abs(m2[x] - lambda.base()[x]));
  const TransverseMeasure rebuilt(sys, lambda.modulus(), m2);
  auto rng = run.rng();
  const std::size_t count = run.samples(100);
  double agree = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const TransverseFunction nu(sys.groupoid(), random_weights(rng, sys.size()));
    agree = std::max(agree, std::abs(lambda_eval(lambda, nu) - lambda_eval(rebuilt, nu)));
  }
  run.doc()["mass"] = io::measure_json(m2, sys.groupoid().space())["mass"];
  run.doc()["value"] = back;
  run.outputs()["roundtrip_residual"] = tagged(back, "closed_form", run.tol(1e-14));
  run.outputs()["rebuilt_agreement"] = tagged(agree, "sampled_bound", kStructuralTol);
  run.diagnostics()["samples"] = count;
  check(back <= run.tol(1e-14), "M -> Lambda -> M round trip exceeds tolerance");
  check(agree <= kStructuralTol, "rebuilt Lambda disagrees with the original");
}

void cmd_lambda_coco(Run& run) {
  const TransverseMeasure lambda = load_lambda(run);
  const TransverseFunction nu1 = run.nu();
  const auto& g = lambda.system().groupoid();
  const double tol = run.tol(kStructuralTol);
  std::vector<Kernel> kernels;
  if (!run.opt().kernel.empty()) {
    kernels.push_back(io::load_kernel(run.load("--kernel", run.opt().kernel), g));
  } else {
    kernels.push_back(jacobian_kernel(lambda.system(), lambda.modulus()));
  }
  const std::size_t extra = run.samples(0);
  if (extra > 0) {
    auto rng = run.rng();
    for (std::size_t i = 0; i < extra; ++i) kernels.push_back(random_unit_kernel(rng, g));
  }
  double worst = 0.0;
  json nu2;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const CocoResult r = coco_invariance_check(lambda, nu1, kernels[i]);
    worst = std::max(worst, r.residual);
    if (i == 0) nu2 = io::transverse_json(r.nu2);
  }
  run.doc()["value"] = worst;
  run.doc()["per_class"] = nu2["per_class"];
  run.outputs()["max_residual"] = tagged(worst, "closed_form", tol);
  run.diagnostics()["kernels"] = kernels.size();
  check(worst <= tol, "Lambda(nu1) != Lambda(nu1 * (delta lambda)) beyond tolerance");
}

// ----- thermodynamics -------------------------------------------------------

void cmd_entropy(Run& run) {
  const HaarSystem sys = run.system();
  const Potential v = normalize(run.potential(), sys);
  const Measure m = run.opt().measure.empty()
                        ? invariant_from_seed(v, seed_measure(run, sys), sys)
                        : run.measure();
  const TransverseMeasure lambda(sys, v, m);
  const double h = entropy(lambda);
  const std::size_t draws = run.samples(500);
  const std::uint64_t seed = run.opt().seed.value_or(kDefaultSeed);
  run.rng();
  const NormalizedFamily family = make_normalized_family(sys, {v}, draws, seed);
  const double sup = entropy_sup_estimate(lambda, family);
  run.doc()["value"] = h;
  run.outputs()["entropy"] = tagged(h, "closed_form", kStructuralTol);
  run.certificates()["sup_estimate"] = tagged(sup, "sampled_bound", kStructuralTol);
  run.certificates()["sup_gap"] = sup - h;
  run.diagnostics()["samples"] = draws;
  check(sup - h <= kStructuralTol && h - sup <= kStructuralTol,
        "sampled entropy estimate disagrees with the closed form");
}

std::vector<double> density_values(const TransverseFunction& nu, const HaarSystem& sys) {
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
                       "' where nu_hat vanishes");
    }
  }
  return u;
}

void cmd_pressure(Run& run) {
  const HaarSystem sys = run.system();
  const auto& g = sys.groupoid();
  Potential u;
  if (!run.opt().nu.empty()) {
    const TransverseFunction nu = run.nu();
    u = Potential(density_values(nu, sys));
  } else if (!run.opt().potential.empty()) {
    u = run.potential();
  } else {
    throw InputError("pressure needs --potential or --nu");
  }
  const PressureResult p = pressure(u, sys);
  run.doc()["value"] = p.value;
  run.doc()["argmax_classes"] = class_labels(g, p.argmax_classes);
  run.outputs()["pressure"] = tagged(p.value, "closed_form", kStructuralTol);

  const Equilibrium eq = equilibrium_for(u, sys);
  const TransverseFunction nu = density(u.values, sys.nu_hat());
  const double attained = lambda_eval(eq.lambda, nu) + entropy(eq.lambda);
  std::vector<PressureSample> samples{{eq.lambda.modulus(), eq.lambda.base()}};
  auto rng = run.rng();
  const std::size_t count = run.samples(100);
  for (std::size_t i = 0; i < count; ++i) {
    const Potential v = normalize(random_potential(rng, sys.size()), sys);
    samples.push_back({v, invariant_from_seed(v, random_probability(rng, sys.size()), sys)});
  }
  const double estimate = pressure_variational_estimate(u, sys, samples);
  run.certificates()["equilibrium_value"] = tagged(attained, "closed_form", kStructuralTol);
  run.certificates()["equilibrium_gap"] = std::abs(attained - p.value);
  run.certificates()["variational_estimate"] = tagged(estimate, "sampled_bound", kStructuralTol);
  run.diagnostics()["samples"] = count;
  run.diagnostics()["u_tilde"] = per_class(p.u_tilde);
  check(std::abs(attained - p.value) <= kStructuralTol, "equilibrium does not attain the pressure");
  check(estimate <= p.value + kStructuralTol, "a sampled transverse measure exceeds the pressure");
}

void cmd_equilibrium(Run& run) {
  const HaarSystem sys = run.system();
  const Potential u = run.potential();
  const Equilibrium eq = equilibrium_for(u, sys);
  const auto& space = sys.groupoid().space();
  const double h = entropy(eq.lambda);
  const double attained = lambda_eval(eq.lambda, density(u.values, sys.nu_hat())) + h;
  run.doc()["value"] = eq.pressure.value;
  run.doc()["argmax_classes"] = class_labels(sys.groupoid(), eq.pressure.argmax_classes);
  run.doc()["values"] = io::potential_json(eq.lambda.modulus(), space)["values"];
  run.doc()["mass"] = io::measure_json(eq.lambda.base(), space)["mass"];
  run.outputs()["pressure"] = tagged(eq.pressure.value, "closed_form", kStructuralTol);
  run.outputs()["entropy"] = tagged(h, "closed_form", kStructuralTol);
  run.certificates()["attained"] = tagged(attained, "closed_form", kStructuralTol);
  run.certificates()["gap"] = std::abs(attained - eq.pressure.value);
  run.diagnostics()["seed_point"] = space.label(eq.seed_point);
  check(std::abs(attained - eq.pressure.value) <= kStructuralTol,
        "equilibrium does not attain the pressure");
}

void cmd_involution(Run& run) {
  const TransverseMeasure lambda = load_lambda(run);
  const HaarSystem& sys = lambda.system();
  std::vector<TransverseFunction> candidates{density(lambda.modulus().values, sys.nu_hat())};
  auto rng = run.rng();
  const std::size_t count = run.samples(100);
  for (std::size_t i = 0; i < count; ++i) {
    candidates.push_back(density(random_potential(rng, sys.size()).values, sys.nu_hat()));
  }
  const InvolutionResult r = involution_check(lambda, candidates);
  const double tol = run.tol(kInvarianceTol);
  run.doc()["value"] = r.residual;
  run.outputs()["residual"] = tagged(r.residual, "sampled_bound", tol);
  run.outputs()["entropy"] = tagged(r.entropy, "closed_form", kStructuralTol);
  run.diagnostics()["best_candidate"] = r.best_candidate;
  run.diagnostics()["samples"] = count;
  check(std::abs(r.residual) <= tol, "min [-Lambda(nu) + P(nu)] differs from h(Lambda)");
}

void cmd_extremal(Run& run) {
  const HaarSystem sys = run.system();
  const Potential u = run.potential();
  const std::string& kind = run.opt().extremal_case;
  if (kind != "pair" && kind != "trivial") throw InputError("--case must be 'pair' or 'trivial'");
  const ExtremalReport r =
      extremal_closed_forms(kind == "pair" ? ExtremalCase::Pair : ExtremalCase::Trivial, u, sys);
  const double tol = run.tol(kStructuralTol);
  run.doc()["value"] = r.pressure_closed_form;
  run.outputs()["pressure_closed_form"] = tagged(r.pressure_closed_form, "closed_form", tol);
  run.outputs()["pressure_generic"] = tagged(r.pressure_generic, "closed_form", tol);
  run.outputs()["entropy_closed_form"] = tagged(r.entropy_closed_form, "closed_form", tol);
  run.outputs()["entropy_generic"] = tagged(r.entropy_generic, "closed_form", tol);
  if (!r.gibbs_density.empty()) {
    run.doc()["gibbs_density"] = io::potential_json(Potential(r.gibbs_density),
                                                    sys.groupoid().space())["values"];
  }
  run.diagnostics()["case"] = to_string(r.kind);
  run.diagnostics()["max_discrepancy"] = r.max_discrepancy();
  check(r.max_discrepancy() <= tol, "closed form and generic path disagree");
}

// ----- XY model -------------------------------------------------------------

xy::XYSpec load_xy(Run& run) { return io::load_xy(run.load("--xy", run.opt().xy)); }

xy::EigenData eigen(Run& run, const xy::XYSpec& spec) {
  xy::PowerOptions options;
  if (run.opt().iters) options.max_iterations = *run.opt().iters;
  if (run.opt().tol) options.tol = *run.opt().tol;
  const xy::EigenData e = xy::leading_eigen(spec, options);
  run.diagnostics()["iterations"] = e.iterations;
  run.diagnostics()["power_tol"] = options.tol;
  run.diagnostics()["right_residual"] = e.right_residual;
  run.diagnostics()["left_residual"] = e.left_residual;
  return e;
}

void cmd_xy_eigen(Run& run) {
  const xy::XYSpec spec = load_xy(run);
  const xy::EigenData e = eigen(run, spec);
  const std::size_t depth = run.opt().depth.value_or(spec.depth - 1);
  const xy::CylinderMeasure rho = xy::eigenprob(spec, e, depth);
  const std::size_t d = spec.symbols();
  run.doc()["value"] = e.eigenvalue;
  run.doc()["eigenfunction"] = json{{"depth", e.eigenfunction.depth},
                                    {"table", io::nested_table(e.eigenfunction.table, d, spec.depth - 1)}};
  run.doc()["eigenprobability"] = json{{"depth", depth}, {"table", io::nested_table(rho.mass, d, depth)}};
  run.outputs()["eigenvalue"] = tagged(e.eigenvalue, "iterative", 1e-10 * e.eigenvalue);
  run.certificates()["right_residual_relative"] = e.right_residual / e.eigenvalue;
  check(e.right_residual <= 1e-10 * e.eigenvalue, "eigenfunction residual exceeds 1e-10 c");
}

void cmd_xy_limit(Run& run) {
  const xy::XYSpec spec = load_xy(run);
  const xy::CylinderFunction h =
      io::load_cylinder_function(run.load("--function", run.opt().function), spec.symbols());
  const std::size_t n = run.opt().iters.value_or(60);
  const double q = xy::limit_quotient(spec, h, n);
  const xy::CylinderMeasure rho = xy::eigenprob(spec, eigen(run, spec), std::max(h.depth, spec.depth - 1));
  const double integral = xy::integrate(rho, h);
  const double tol = run.tol(1e-10);
  run.doc()["value"] = q;
  run.outputs()["limit_quotient"] = tagged(q, "iterative", tol);
  run.certificates()["integral_against_eigenprobability"] = tagged(integral, "iterative", tol);
  run.certificates()["gap"] = std::abs(q - integral);
  run.diagnostics()["n"] = n;
  run.diagnostics()["base_word"] = spec.alphabet[spec.base_symbol];
  check(std::abs(q - integral) <= tol, "limit quotient disagrees with the eigenprobability");
}

void cmd_xy_normalize(Run& run) {
  const xy::XYSpec spec = load_xy(run);
  const xy::EigenData e = eigen(run, spec);
  const xy::XYSpec u = xy::ruelle_normalize(spec, e.eigenvalue, e.eigenfunction);
  const xy::CylinderFunction one = xy::ruelle_apply(u, xy::CylinderFunction::constant(1.0));
  double r = 0.0;
  for (double v : one.table) r = std::max(r, std::abs(v - 1.0));
  const json spec_json = io::xy_json(u);
  for (const auto& [key, value] : spec_json.items()) run.doc()[key] = value;
  run.outputs()["eigenvalue"] = tagged(e.eigenvalue, "iterative", 1e-10 * e.eigenvalue);
  run.outputs()["normalization_residual"] = tagged(r, "iterative", 1e-10);
  check(r <= 1e-10, "L_U 1 differs from 1");
}

void cmd_xy_verify(Run& run) {
  const xy::XYSpec spec = load_xy(run);
  const std::size_t depth = run.opt().depth.value_or(std::max<std::size_t>(spec.depth, 3));
  xy::XYModular modular;
  if (run.opt().delta == "exponential") {
    modular = xy::XYModular::Exponential;
  } else if (run.opt().delta == "unit") {
    modular = xy::XYModular::Unit;
  } else {
    throw InputError("--delta must be 'exponential' or 'unit'");
  }
  const xy::CylinderMeasure rho =
      xy::eigenprob(spec, eigen(run, spec), std::max(depth, spec.depth));
  const xy::XYQuasiResult r = xy::xy_quasi_invariance_check(spec, rho, depth, modular);
  const double tol = run.tol(1e-9);
  run.doc()["value"] = r.max_residual;
  run.outputs()["max_residual"] = tagged(r.max_residual, "iterative", tol);
  const std::string tail = depth > 1 ? xy::word_label(spec, r.tail, depth - 1) : "";
  run.diagnostics()["worst"] = json{{"p", spec.alphabet[r.first]},
                                    {"q", spec.alphabet[r.second]},
                                    {"tail", tail}};
  run.diagnostics()["depth"] = depth;
  run.diagnostics()["delta"] = run.opt().delta;
  check(r.max_residual <= tol, "quasi-invariance fails on cylinders [" + spec.alphabet[r.first] +
                                   " " + tail + "] x [" + spec.alphabet[r.second] + " " + tail + "]");
}

// ----- dynamically defined groupoids ----------------------------------------

struct MapInputs {
  io::MapFile file;
  Measure m;
  Measure target;
};

MapInputs load_map_inputs(Run& run) {
  io::MapFile file = io::load_map(run.load("--map", run.opt().map));
  Measure m = io::load_measure(run.load("--measure", run.opt().measure), file.map.source);
  Measure target;
  if (file.shift) {
    target = dyn::prefix_marginal(file.shift->first, file.shift->second, m);
  } else if (file.target) {
    target = *file.target;
  } else if (file.map.target == file.map.source) {
    target = m;
  } else {
    throw InputError("map file with explicit targets needs \"target_measure\"");
  }
  return MapInputs{std::move(file), std::move(m), std::move(target)};
}

void cmd_dyn_disintegrate(Run& run) {
  const MapInputs in = load_map_inputs(run);
  const dyn::Disintegration dis = dyn::disintegrate(in.file.map, in.m, in.target);
  const auto& g = dis.fibers;
  json classes = json::object();
  for (std::size_t c = 0; c < g.num_classes(); ++c) {
    json entry;
    json cond = json::object();
    double mass = 0.0;
    for (std::size_t x : g.members(c)) {
      cond[g.space().label(x)] = dis.conditional[x];
      mass += in.m[x];
    }
    entry["fiber_mass"] = mass;
    entry["conditional"] = cond;
    entry["uniform_choice"] =
        std::find(dis.uniform_classes.begin(), dis.uniform_classes.end(), c) != dis.uniform_classes.end();
    classes[g.class_label(c)] = entry;
  }
  run.doc()["classes"] = classes;
  run.outputs()["identity_residual"] = tagged(dis.identity_residual, "closed_form", kStructuralTol);
  run.outputs()["invariance_residual"] =
      tagged(dis.invariance_residual, "closed_form", dyn::kMapInvarianceTol);
  run.diagnostics()["uniform_classes"] = class_labels(g, dis.uniform_classes);
  check(dis.identity_residual <= kStructuralTol, "disintegration identity fails");
}

void cmd_dyn_jacobian(Run& run) {
  if (!run.opt().markov.empty()) {
    const dyn::MarkovSpec spec = io::load_markov(run.load("--markov", run.opt().markov));
    const std::vector<double> j = dyn::markov_jacobian(spec);
    const std::size_t d = spec.states;
    std::vector<double> column(d, 0.0);
    for (std::size_t x0 = 0; x0 < d; ++x0) {
      for (std::size_t x1 = 0; x1 < d; ++x1) column[x1] += j[x0 * d + x1];
    }
    double col = 0.0;
    for (double v : column) col = std::max(col, std::abs(v - 1.0));
    const std::size_t depth = run.opt().depth.value_or(6);
    json oracle = json::array();
    double worst = 0.0;
    for (std::size_t n = 1; n <= depth; ++n) {
      const dyn::CylinderJacobian cj = dyn::jacobian_from_cylinders(spec, n);
      double diff = cj.max_spread;
      for (std::size_t i = 0; i < j.size(); ++i) diff = std::max(diff, std::abs(cj.table[i] - j[i]));
      oracle.push_back(diff);
      worst = std::max(worst, diff);
    }
    run.doc()["jacobian"] = io::nested_table(j, d, 2);
    run.doc()["stationary"] = spec.stationary;
    run.outputs()["column_sum_residual"] = tagged(col, "closed_form", kStructuralTol);
    run.certificates()["cylinder_ratio_max_diff"] = tagged(worst, "closed_form", 1e-14);
    run.diagnostics()["cylinder_ratio_by_n"] = oracle;
    check(col <= kStructuralTol, "Jacobian columns do not sum to 1");
    check(worst <= 1e-14, "cylinder ratios disagree with pi(x0) P(x0,x1) / pi(x1)");
    return;
  }
  const MapInputs in = load_map_inputs(run);
  const dyn::Disintegration dis = dyn::disintegrate(in.file.map, in.m, in.target);
  const double sums = dyn::jacobian_fiber_sum_residual(dis.fibers, dis.conditional);
  run.doc()["jacobian"] = io::potential_json(Potential(dis.conditional), in.file.map.source)["values"];
  run.outputs()["fiber_sum_residual"] = tagged(sums, "closed_form", kStructuralTol);
  run.outputs()["identity_residual"] = tagged(dis.identity_residual, "closed_form", kStructuralTol);
  run.diagnostics()["uniform_classes"] = class_labels(dis.fibers, dis.uniform_classes);
  check(sums <= kStructuralTol, "Jacobian does not sum to 1 on some fiber");
}

void cmd_dyn_ks(Run& run) {
  const dyn::MarkovSpec spec = io::load_markov(run.load("--markov", run.opt().markov));
  const double h = dyn::ks_entropy_via_jacobian(spec);
  const double rate = dyn::markov_entropy_rate(spec);
  const double tol = run.tol(1e-10);
  run.doc()["value"] = h;
  run.outputs()["entropy_via_jacobian"] = tagged(h, "closed_form", tol);
  run.certificates()["entropy_rate"] = tagged(rate, "closed_form", tol);
  run.certificates()["gap"] = std::abs(h - rate);
  run.doc()["stationary"] = spec.stationary;
  check(std::abs(h - rate) <= tol, "entropy via Jacobian differs from the entropy rate");
}

// ----- parsing --------------------------------------------------------------

struct Verb {
  CLI::App* app;
  std::string name;
  std::function<void(Run&)> handler;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}));
  app->add_option("--seed", o.seed, "Seed for sampled families");
  app->add_option("--tol", o.tol, "Tolerance override");
  app->add_option("--samples", o.samples, "Number of random samples");
  app->add_option("--iters", o.iters, "Iteration count or cap");
}

json flags_echo(const CLI::App* app) {
  json out = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->count() == 0 || opt->get_single_name() == "help") continue;
    const auto& res = opt->results();
    out["--" + opt->get_single_name()] = res.size() == 1 ? json(res[0]) : json(res);
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app("Transfer operators, transverse measures and thermodynamic formalism on finite "
               "Haar systems",
               "haar");
  app.require_subcommand(1);
  std::vector<Verb> verbs;

  auto verb = [&](CLI::App* parent, const std::string& name, const std::string& help,
                  std::function<void(Run&)> handler) {
    CLI::App* sub = parent->add_subcommand(name, help);
    add_common(sub, o);
    std::string full = parent == &app ? name : parent->get_name() + " " + name;
    verbs.push_back({sub, full, std::move(handler)});
    return sub;
  };
  auto group = [&](const std::string& name, const std::string& help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->require_subcommand(1);
    return sub;
  };

  CLI::App* s = verb(&app, "normalize", "Haar-normalize a potential", cmd_normalize);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--potential", o.potential)->required();

  s = verb(&app, "invariant", "Haar-invariant probability from a seed", cmd_invariant);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--potential", o.potential)->required();
  s->add_option("--seed-measure", o.seed_measure, "uniform | delta:<point>");

  CLI::App* verify = group("verify", "Invariance checks");
  s = verb(verify, "haar", "Haar invariance of M with Jacobian e^V", cmd_verify_haar);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--measure", o.measure)->required();
  s->add_option("--potential", o.potential)->required();
  s = verb(verify, "quasi", "Quasi-invariance of M for a modular function", cmd_verify_quasi);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--measure", o.measure)->required();
  s->add_option("--modular", o.modular)->required();
  s = verb(verify, "saturation", "Saturation condition for atomic M", cmd_verify_saturation);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--measure", o.measure)->required();

  CLI::App* lambda = group("lambda", "Transverse measures");
  for (auto [name, help, fn] : std::vector<std::tuple<const char*, const char*, void (*)(Run&)>>{
           {"eval", "Evaluate Lambda on a transverse function", cmd_lambda_eval},
           {"roundtrip", "M -> Lambda -> M round trip", cmd_lambda_roundtrip},
           {"coco-check", "Invariance axiom under nu -> nu * (delta lambda)", cmd_lambda_coco}}) {
    s = verb(lambda, name, help, fn);
    s->add_option("--groupoid", o.groupoid)->required();
    s->add_option("--potential", o.potential, "Modulus V")->required();
    s->add_option("--measure", o.measure, "Base measure M")->required();
    if (std::string(name) != "roundtrip") s->add_option("--nu", o.nu)->required();
    if (std::string(name) == "coco-check") s->add_option("--kernel", o.kernel);
  }

  s = verb(&app, "entropy", "Entropy of a Haar-invariant transverse probability", cmd_entropy);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--potential", o.potential)->required();
  s->add_option("--measure", o.measure, "Base measure (default: from --seed-measure)");
  s->add_option("--seed-measure", o.seed_measure, "uniform | delta:<point>");

  s = verb(&app, "pressure", "Pressure of U nu_hat (or of a transverse function)", cmd_pressure);
  s->add_option("--groupoid", o.groupoid)->required();
  auto* pot = s->add_option("--potential", o.potential);
  auto* nu = s->add_option("--nu", o.nu);
  pot->excludes(nu);

  s = verb(&app, "equilibrium", "Equilibrium transverse measure", cmd_equilibrium);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--potential", o.potential)->required();

  s = verb(&app, "involution-check", "Legendre involution at the sampled level", cmd_involution);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--potential", o.potential, "Modulus V")->required();
  s->add_option("--measure", o.measure, "Base measure M")->required();

  s = verb(&app, "extremal", "Pair and trivial groupoid closed forms", cmd_extremal);
  s->add_option("--groupoid", o.groupoid)->required();
  s->add_option("--potential", o.potential)->required();
  s->add_option("--case", o.extremal_case, "pair | trivial")->required();

  CLI::App* xyg = group("xy", "Generalized XY model");
  s = verb(xyg, "eigen", "Perron eigen data of the Ruelle operator", cmd_xy_eigen);
  s->add_option("--xy", o.xy)->required();
  s->add_option("--depth", o.depth, "Cylinder depth of the reported eigenprobability");
  s = verb(xyg, "limit-quotient", "L^n h(z0) / L^n 1(z0)", cmd_xy_limit);
  s->add_option("--xy", o.xy)->required();
  s->add_option("--function", o.function)->required();
  s = verb(xyg, "normalize", "Normalized potential with L 1 = 1", cmd_xy_normalize);
  s->add_option("--xy", o.xy)->required();
  s = verb(xyg, "verify-quasi", "Quasi-invariance of the eigenprobability", cmd_xy_verify);
  s->add_option("--xy", o.xy)->required();
  s->add_option("--depth", o.depth, "Depth of the pair cylinders (default max(k, 3))");
  s->add_option("--delta", o.delta, "exponential | unit");

  CLI::App* dyng = group("dyn", "Dynamically defined groupoids");
  s = verb(dyng, "disintegrate", "Conditional measures on the fibers of a map", cmd_dyn_disintegrate);
  s->add_option("--map", o.map)->required();
  s->add_option("--measure", o.measure)->required();
  s = verb(dyng, "jacobian", "Haar-Jacobian on fibers (map or Markov chain)", cmd_dyn_jacobian);
  auto* mk = s->add_option("--markov", o.markov);
  auto* mp = s->add_option("--map", o.map);
  s->add_option("--measure", o.measure);
  s->add_option("--depth", o.depth, "Largest n for the cylinder-ratio check");
  mk->excludes(mp);
  s = verb(dyng, "ks-entropy", "Entropy of a Markov measure via its Jacobian", cmd_dyn_ks);
  s->add_option("--markov", o.markov)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  const Verb* chosen = nullptr;
  for (const auto& v : verbs) {
    if (v.app->parsed()) chosen = &v;
  }
  if (chosen == nullptr) {
    err << app.help();
    return 1;
  }

  json doc;
  doc["command"] = chosen->name;
  doc["flags"] = flags_echo(chosen->app);
  doc["inputs"] = json::array();
  doc["status"] = "ok";
  doc["value"] = nullptr;
  doc["outputs"] = json::object();
  doc["certificates"] = json::object();
  doc["diagnostics"] = json::object();
  Run ctx(o, doc);
  int code = 0;
  try {
    chosen->handler(ctx);
  } catch (const CheckFailed& e) {
    doc["status"] = "failed";
    doc["failure"] = e.message;
    code = 2;
  } catch (const ConvergenceError& e) {
    doc["status"] = "failed";
    doc["failure"] = e.what();
    doc["diagnostics"]["convergence_residual"] = e.residual();
    code = 2;
  } catch (const ValidationError& e) {
    doc["status"] = "failed";
    doc["failure"] = e.what();
    code = 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return 1;
  }
  out << (o.format == "csv" ? report::dump_csv(doc) : report::dump_json(doc));
  if (code == 2) err << "validation failure: " << doc["failure"].get<std::string>() << "\n";
  return code;
}

}  // namespace haar::cli
