#include "haar/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "haar/error.hpp"

namespace haar::io {
namespace {

const json& require(const json& doc, const char* key, const char* what) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw InputError(std::string(what) + ": missing \"" + key + "\"");
  }
  return doc.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw InputError(where + ": expected a number");
  const double out = v.get<double>();
  if (!std::isfinite(out)) throw InputError(where + ": non-finite number");
  return out;
}

std::string text(const json& v, const std::string& where) {
  if (!v.is_string()) throw InputError(where + ": expected a string");
  return v.get<std::string>();
}

std::vector<std::string> string_list(const json& v, const std::string& where) {
  if (!v.is_array()) throw InputError(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (const auto& item : v) out.push_back(text(item, where));
  return out;
}

// Point function from {label: value} or an array in point order.
std::vector<double> point_values(const json& v, const PointSpace& space, const std::string& where,
                                 bool require_all) {
  std::vector<double> out(space.size(), 0.0);
  if (v.is_array()) {
    if (v.size() != space.size()) {
      throw InputError(where + ": expected " + std::to_string(space.size()) + " values, got " +
                       std::to_string(v.size()));
    }
    for (std::size_t x = 0; x < v.size(); ++x) out[x] = number(v[x], where);
    return out;
  }
  if (!v.is_object()) throw InputError(where + ": expected an object or array");
  std::vector<bool> seen(space.size(), false);
  for (const auto& [label, value] : v.items()) {
    const std::size_t x = space.index_of(label);
    out[x] = number(value, where + "." + label);
    seen[x] = true;
  }
  if (require_all) {
    for (std::size_t x = 0; x < seen.size(); ++x) {
      if (!seen[x]) throw InputError(where + ": no value for point '" + space.label(x) + "'");
    }
  }
  return out;
}

void flatten_nested(const json& v, std::size_t symbols, std::size_t depth, const std::string& where,
                    std::vector<double>& out) {
  if (depth == 0) {
    out.push_back(number(v, where));
    return;
  }
  if (!v.is_array() || v.size() != symbols) {
    throw InputError(where + ": expected nested arrays of length " + std::to_string(symbols));
  }
  for (const auto& item : v) flatten_nested(item, symbols, depth - 1, where, out);
}

std::size_t to_size(const json& v, const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw InputError(where + ": expected a nonnegative integer");
  }
  return v.get<std::size_t>();
}

}  // namespace

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

json parse_json(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

HaarSystem load_haar_system(const json& doc) {
  PointSpace space(string_list(require(doc, "points", "groupoid"), "groupoid.points"));
  const json& cls = require(doc, "classes", "groupoid");
  if (!cls.is_array()) throw InputError("groupoid.classes: expected an array of arrays");
  std::vector<std::vector<std::string>> classes;
  for (const auto& c : cls) classes.push_back(string_list(c, "groupoid.classes"));
  FiniteGroupoid g = build_partition_groupoid(space, classes);
  TransverseFunction nu = TransverseFunction::uniform(g);
  if (doc.contains("nu_hat")) {
    std::vector<double> w = point_values(doc.at("nu_hat"), g.space(), "groupoid.nu_hat", false);
    for (std::size_t x = 0; x < w.size(); ++x) {
      if (w[x] < 0.0) {
        throw ValidationError("groupoid.nu_hat: negative weight at '" + g.space().label(x) + "'");
      }
    }
    nu = TransverseFunction(g, std::move(w)).normalized();
  }
  return HaarSystem(g, nu);
}

Potential load_potential(const json& doc, const PointSpace& space) {
  return Potential(point_values(require(doc, "values", "potential"), space, "potential.values", true));
}

Measure load_measure(const json& doc, const PointSpace& space) {
  std::vector<double> m = point_values(require(doc, "mass", "measure"), space, "measure.mass", false);
  for (std::size_t x = 0; x < m.size(); ++x) {
    if (m[x] < 0.0) throw InputError("measure.mass: negative mass at '" + space.label(x) + "'");
  }
  return Measure(std::move(m));
}

ModularFunction load_modular(const json& doc, const PointSpace& space) {
  if (doc.is_object() && doc.contains("values")) {
    return ModularFunction::exponential(load_potential(doc, space));
  }
  const json& table = require(doc, "table", "modular");
  if (!table.is_array()) throw InputError("modular.table: expected [[x, y, value], ...]");
  ModularFunction::Table entries;
  for (const auto& row : table) {
    if (!row.is_array() || row.size() != 3) {
      throw InputError("modular.table: each entry must be [x, y, value]");
    }
    const std::size_t x = space.index_of(text(row[0], "modular.table"));
    const std::size_t y = space.index_of(text(row[1], "modular.table"));
    entries[{x, y}] = number(row[2], "modular.table");
  }
  return ModularFunction::table(std::move(entries));
}

TransverseFunction load_transverse(const json& doc, const FiniteGroupoid& g) {
  const json& per_class = require(doc, "per_class", "transverse function");
  if (!per_class.is_object()) throw InputError("per_class: expected an object");
  std::vector<double> w(g.size(), 0.0);
  for (const auto& [cid, weights] : per_class.items()) {
    const std::size_t c = g.class_index(cid);
    if (!weights.is_object()) throw InputError("per_class." + cid + ": expected an object");
    for (const auto& [label, value] : weights.items()) {
      const std::size_t x = g.space().index_of(label);
      if (g.class_of(x) != c) {
        throw InputError("per_class." + cid + ": point '" + label + "' belongs to " +
                         g.class_label(g.class_of(x)));
      }
      w[x] = number(value, "per_class." + cid + "." + label);
    }
  }
  return TransverseFunction(g, std::move(w));
}

Kernel load_kernel(const json& doc, const FiniteGroupoid& g) {
  const json& rows = require(doc, "rows", "kernel");
  if (!rows.is_object()) throw InputError("kernel.rows: expected an object");
  const std::size_t n = g.size();
  std::vector<double> table(n * n, 0.0);
  for (const auto& [ylabel, row] : rows.items()) {
    const std::size_t y = g.space().index_of(ylabel);
    if (!row.is_object()) throw InputError("kernel.rows." + ylabel + ": expected an object");
    for (const auto& [xlabel, value] : row.items()) {
      table[y * n + g.space().index_of(xlabel)] = number(value, "kernel.rows." + ylabel);
    }
  }
  return Kernel(g, std::move(table));
}

xy::XYSpec load_xy(const json& doc) {
  xy::XYSpec spec;
  spec.alphabet = string_list(require(doc, "alphabet", "xy"), "xy.alphabet");
  PointSpace symbols(spec.alphabet);
  const std::size_t d = spec.alphabet.size();
  if (doc.contains("a_priori")) {
    const json& m = doc.at("a_priori");
    if (!m.is_array()) throw InputError("xy.a_priori: expected an array");
    for (const auto& v : m) spec.a_priori.push_back(number(v, "xy.a_priori"));
  } else {
    spec.a_priori.assign(d, 1.0 / static_cast<double>(d));
  }
  spec.depth = to_size(require(doc, "depth", "xy"), "xy.depth");
  if (spec.depth == 0) throw InputError("xy.depth must be at least 1");
  flatten_nested(require(doc, "potential", "xy"), d, spec.depth, "xy.potential", spec.potential);
  if (doc.contains("base_symbol")) {
    spec.base_symbol = symbols.index_of(text(doc.at("base_symbol"), "xy.base_symbol"));
  }
  spec.validate();
  return spec;
}

xy::CylinderFunction load_cylinder_function(const json& doc, std::size_t symbols) {
  xy::CylinderFunction f;
  f.depth = to_size(require(doc, "depth", "cylinder function"), "function.depth");
  flatten_nested(require(doc, "table", "cylinder function"), symbols, f.depth, "function.table",
                 f.table);
  return f;
}

dyn::MarkovSpec load_markov(const json& doc) {
  const json& p = require(doc, "transition", "markov");
  if (!p.is_array()) throw InputError("markov.transition: expected an array of rows");
  std::vector<std::vector<double>> rows;
  for (const auto& row : p) {
    if (!row.is_array()) throw InputError("markov.transition: expected an array of rows");
    std::vector<double> r;
    for (const auto& v : row) r.push_back(number(v, "markov.transition"));
    rows.push_back(std::move(r));
  }
  std::optional<std::vector<double>> pi;
  if (doc.contains("stationary")) {
    const json& s = doc.at("stationary");
    if (!s.is_array()) throw InputError("markov.stationary: expected an array");
    pi.emplace();
    for (const auto& v : s) pi->push_back(number(v, "markov.stationary"));
  }
  return dyn::make_markov_spec(rows, std::move(pi));
}

MapFile load_map(const json& doc) {
  if (doc.is_object() && doc.contains("shift")) {
    const json& s = doc.at("shift");
    const std::vector<std::string> alphabet = string_list(require(s, "alphabet", "map.shift"),
                                                          "map.shift.alphabet");
    const std::size_t n = to_size(require(s, "depth", "map.shift"), "map.shift.depth");
    return MapFile{dyn::shift_factor(alphabet, n), std::nullopt,
                   std::make_pair(alphabet.size(), n)};
  }
  PointSpace source(string_list(require(doc, "points", "map"), "map.points"));
  const json& m = require(doc, "map", "map");
  if (!m.is_object()) throw InputError("map.map: expected an object");
  std::map<std::string, std::string> pairs;
  for (const auto& [from, to] : m.items()) pairs[from] = text(to, "map.map." + from);
  if (!doc.contains("targets")) {
    return MapFile{dyn::FactorMap::self_map(std::move(source), pairs), std::nullopt, std::nullopt};
  }
  PointSpace target(string_list(doc.at("targets"), "map.targets"));
  dyn::FactorMap t{source, target, std::vector<std::size_t>(source.size())};
  for (std::size_t x = 0; x < source.size(); ++x) {
    const auto it = pairs.find(source.label(x));
    if (it == pairs.end()) throw InputError("map has no image for point '" + source.label(x) + "'");
    t.image[x] = target.index_of(it->second);
  }
  for (const auto& [from, to] : pairs) source.index_of(from);
  MapFile out{std::move(t), std::nullopt, std::nullopt};
  if (doc.contains("target_measure")) {
    out.target = Measure(point_values(doc.at("target_measure"), out.map.target,
                                      "map.target_measure", false));
  }
  return out;
}

json potential_json(const Potential& v, const PointSpace& space) {
  json values = json::object();
  for (std::size_t x = 0; x < v.size(); ++x) values[space.label(x)] = v[x];
  return json{{"values", values}};
}

json measure_json(const Measure& m, const PointSpace& space) {
  json mass = json::object();
  for (std::size_t x = 0; x < m.size(); ++x) mass[space.label(x)] = m[x];
  return json{{"mass", mass}};
}

json transverse_json(const TransverseFunction& nu) {
  const auto& g = nu.groupoid();
  json per_class = json::object();
  for (std::size_t c = 0; c < g.num_classes(); ++c) {
    json w = json::object();
    for (std::size_t x : g.members(c)) w[g.space().label(x)] = nu.weight(x);
    per_class[g.class_label(c)] = w;
  }
  return json{{"per_class", per_class}};
}

json nested_table(const std::vector<double>& table, std::size_t symbols, std::size_t depth) {
  if (depth == 0) return json(table.at(0));
  const std::size_t block = table.size() / symbols;
  json out = json::array();
  for (std::size_t a = 0; a < symbols; ++a) {
    std::vector<double> part(table.begin() + static_cast<std::ptrdiff_t>(a * block),
                             table.begin() + static_cast<std::ptrdiff_t>((a + 1) * block));
    out.push_back(nested_table(part, symbols, depth - 1));
  }
  return out;
}

json xy_json(const xy::XYSpec& spec) {
  json out;
  out["alphabet"] = spec.alphabet;
  out["a_priori"] = spec.a_priori;
  out["depth"] = spec.depth;
  out["potential"] = nested_table(spec.potential, spec.symbols(), spec.depth);
  out["base_symbol"] = spec.alphabet.at(spec.base_symbol);
  return out;
}

}  // namespace haar::io
