#pragma once
// JSON file formats for groupoids, potentials, measures, modular functions,
// transverse functions, XY specs, cylinder functions, Markov specs and maps.
// Loaders throw InputError on malformed input and ValidationError when a
// well-formed file violates a mathematical requirement.

#include <optional>
#include <string>

#include "haar/dyn.hpp"
#include "haar/groupoid.hpp"
#include "haar/xy.hpp"
#include "json.hpp"

namespace haar::io {

using json = nlohmann::ordered_json;

json read_json_file(const std::string& path);
json parse_json(const std::string& text);

/// {"points":[...], "classes":[[...]], "nu_hat":{point: weight}}. nu_hat is
/// normalized per class on load and defaults to uniform.
HaarSystem load_haar_system(const json& doc);

/// {"values": {point: real}} or {"values": [real, ...]} in point order.
/// Every point needs a value.
Potential load_potential(const json& doc, const PointSpace& space);
/// {"mass": {point: real}} or {"mass": [...]}. Absent points have mass 0.
Measure load_measure(const json& doc, const PointSpace& space);
/// {"values": {...}} gives delta(x, y) = e^{V(y) - V(x)};
/// {"table": [[x, y, value], ...]} gives an explicit table.
ModularFunction load_modular(const json& doc, const PointSpace& space);
/// {"per_class": {class_id: {point: weight}}}; absent points weigh 0.
TransverseFunction load_transverse(const json& doc, const FiniteGroupoid& groupoid);
/// {"rows": {y: {x: weight}}}; absent entries are 0.
Kernel load_kernel(const json& doc, const FiniteGroupoid& groupoid);

/// {"alphabet":[...], "a_priori":[...], "depth":k, "potential":[nested],
/// "base_symbol":label}. a_priori defaults to uniform, base_symbol to the
/// first symbol.
xy::XYSpec load_xy(const json& doc);
/// {"depth": j, "table": nested arrays j deep (a number when j = 0)}.
xy::CylinderFunction load_cylinder_function(const json& doc, std::size_t symbols);

/// {"transition": [[...]], "stationary": [...]} (stationary optional).
dyn::MarkovSpec load_markov(const json& doc);

struct MapFile {
  dyn::FactorMap map;
  /// Target measure from the file, if any.
  std::optional<Measure> target;
  /// Set for the shift form; the target is then the prefix marginal.
  std::optional<std::pair<std::size_t, std::size_t>> shift;  ///< (symbols, depth)
};

/// Self-map: {"points":[...], "map":{x: T(x)}}.
/// Factor map: {"points":[...], "targets":[...], "map":{...},
///              "target_measure":{target: mass}}.
/// Shift on words: {"shift": {"alphabet":[...], "depth": n}}.
MapFile load_map(const json& doc);

json potential_json(const Potential& v, const PointSpace& space);
json measure_json(const Measure& m, const PointSpace& space);
json transverse_json(const TransverseFunction& nu);
json xy_json(const xy::XYSpec& spec);
/// Nested arrays for a table over depth-n words.
json nested_table(const std::vector<double>& table, std::size_t symbols, std::size_t depth);

}  // namespace haar::io
