#pragma once

// Experiment and network documents. The same tree schema is accepted as
// YAML (the editable form) or JSON; YAML is converted to a JSON value first
// and a single reader validates both.
//
//   kind: sweep                      # analyze | simulate | route | sweep
//   intersection:
//     model: I                       # I | II
//     rates: [0.1, 0.1, 0.1]         # or total_rate: 0.3 (split evenly)
//     phases: [0.333.., 0.333.., 0.333..]   # default: uniform
//     p_t: 0.5                       # default: 0
//   network:                         # inline, or {file: other.yaml}
//     speed: 1
//     nodes: [{id: "1"}, {id: "2", intersection: {...}}]
//     edges: [{from: "1", to: "2", length: 0, speed: 2}]
//   route: {from: "1", to: "4"}
//   mode: aware                      # aware | baseline | both
//   sweep: {axis: total_rate, start: 0.1, stop: 0.3, step: 0.05, p_t: [0, 0.5, 1], node: "2"}
//   simulation: {enabled: true, horizon: 100000, warmup: 10000, seeds: [1, 2, 3]}
//   output: {path: out.csv, format: csv}
//
// A document holding only `network` is a network document.

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "hol/routing.hpp"
#include "hol/simulation.hpp"
#include "hol/types.hpp"
#include "json.hpp"

namespace hol {

using Json = nlohmann::json;

enum class ExperimentKind { analyze, simulate, route, sweep };
enum class SweepAxis { total_rate, p_t, node_rate };
enum class OutputFormat { csv, json };
enum class ModeSelection { aware, baseline, both };

inline const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::analyze: return "analyze";
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::route: return "route";
    case ExperimentKind::sweep: return "sweep";
  }
  return "?";
}

inline const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::total_rate: return "total_rate";
    case SweepAxis::p_t: return "p_t";
    case SweepAxis::node_rate: return "node_rate";
  }
  return "?";
}

struct SweepSpec {
  SweepAxis axis = SweepAxis::total_rate;
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
  std::vector<double> p_t_series;  // optional second axis for intersection sweeps
  std::string node;                // swept node for network sweeps

  /// start, start + step, ... up to stop (inclusive, with a small relative slack).
  std::vector<double> values() const {
    std::vector<double> out;
    const double slack = 1e-9 * step;
    for (std::uint64_t k = 0;; ++k) {
      const double v = start + static_cast<double>(k) * step;
      if (v > stop + slack) break;
      out.push_back(v);
    }
    return out;
  }

  bool operator==(const SweepSpec&) const = default;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::analyze;
  std::optional<IntersectionSpec> intersection;
  std::optional<TransportNetwork> network;
  std::string route_from;
  std::string route_to;
  ModeSelection mode = ModeSelection::both;
  std::optional<SweepSpec> sweep;
  bool simulate = false;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::uint64_t horizon = 100000;
  std::optional<std::uint64_t> warmup;
  std::string output_path;  // empty: stdout
  OutputFormat format = OutputFormat::csv;

  bool operator==(const ExperimentSpec&) const = default;
};

using ConfigDocument = std::variant<ExperimentSpec, TransportNetwork>;

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::schema_violation, path + ": " + what);
}

[[noreturn]] inline void semantic_error(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::semantic_violation, path + ": " + what);
}

inline Json yaml_scalar(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text.empty() || text == "~" || text == "null") return nullptr;
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  std::int64_t integer = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), integer);
  if (ec == std::errc() && end == text.data() + text.size()) return integer;
  double real = 0.0;
  std::istringstream in(text);
  in.imbue(std::locale::classic());
  if (in >> real && in.peek() == std::char_traits<char>::eof()) return real;
  if (text == ".inf") return std::numeric_limits<double>::infinity();
  return text;
}

inline Json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Scalar: return yaml_scalar(node);
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& item : node) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : node) out[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return out;
    }
  }
  return nullptr;
}

inline Json parse_tree(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (text[first] == '{' || text[first] == '[')) {
    try {
      return Json::parse(text);
    } catch (const Json::exception& e) {
      schema_error("$", std::string("malformed JSON: ") + e.what());
    }
  }
  try {
    return yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    schema_error("$", std::string("malformed document: ") + e.what());
  }
}

inline const Json* find(const Json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

inline void require_object(const Json& value, const std::string& path) {
  if (!value.is_object()) schema_error(path, "expected a mapping");
}

inline const Json& require(const Json& obj, const char* key, const std::string& path) {
  const Json* value = find(obj, key);
  if (!value) schema_error(path + "." + key, "missing required field");
  return *value;
}

inline double as_number(const Json& value, const std::string& path) {
  if (!value.is_number()) schema_error(path, "expected a number");
  return value.get<double>();
}

inline std::uint64_t as_count(const Json& value, const std::string& path) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return value.get<std::uint64_t>();
  if (value.is_number_float()) {
    const double v = value.get<double>();
    if (v >= 0 && std::floor(v) == v && v < 1.8e19) return static_cast<std::uint64_t>(v);
  }
  schema_error(path, "expected a non-negative integer");
}

inline std::string as_string(const Json& value, const std::string& path) {
  if (!value.is_string()) schema_error(path, "expected a string");
  return value.get<std::string>();
}

/// Node ids may be written as strings or integers.
inline std::string as_id(const Json& value, const std::string& path) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<std::int64_t>());
  schema_error(path, "expected a node id (string or integer)");
}

inline std::vector<double> as_numbers(const Json& value, const std::string& path) {
  if (!value.is_array()) schema_error(path, "expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(as_number(value[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline ModelKind parse_model(const Json& value, const std::string& path) {
  const std::string text = value.is_number_integer() ? std::to_string(value.get<int>()) : as_string(value, path);
  if (text == "I" || text == "1" || text == "single_lane") return ModelKind::single_lane;
  if (text == "II" || text == "2" || text == "dual_lane") return ModelKind::dual_lane;
  schema_error(path, "model must be I or II");
}

inline IntersectionSpec parse_intersection(const Json& obj, const std::string& path) {
  require_object(obj, path);
  IntersectionSpec spec;
  spec.model = parse_model(require(obj, "model", path), path + ".model");
  const std::size_t classes = class_count(spec.model);

  const Json* rates = find(obj, "rates");
  const Json* total = find(obj, "total_rate");
  if (rates && total) schema_error(path, "give either rates or total_rate, not both");
  if (rates) {
    spec.arrivals.rates = as_numbers(*rates, path + ".rates");
  } else if (total) {
    const double t = as_number(*total, path + ".total_rate");
    if (!(t >= 0.0) || !std::isfinite(t)) semantic_error(path + ".total_rate", "arrival rate must be >= 0");
    spec.arrivals.rates.assign(classes, t / static_cast<double>(classes));
  } else {
    schema_error(path + ".rates", "missing required field (or total_rate)");
  }
  if (spec.arrivals.rates.size() != classes) {
    semantic_error(path + ".rates", "model " + std::string(to_string(spec.model)) + " needs " +
                                        std::to_string(classes) + " rates");
  }
  for (std::size_t i = 0; i < classes; ++i) {
    const double r = spec.arrivals.rates[i];
    if (!(r >= 0.0) || !std::isfinite(r)) {
      semantic_error(path + ".rates[" + std::to_string(i) + "]", "arrival rate must be finite and >= 0");
    }
  }

  if (const Json* phases = find(obj, "phases")) {
    spec.phases.probs = as_numbers(*phases, path + ".phases");
  } else {
    spec.phases = PhaseConfig::uniform(classes);
  }
  try {
    validate(spec.phases, spec.arrivals, classes);
  } catch (const Error& e) {
    semantic_error(path + ".phases", e.what());
  }

  if (const Json* p_t = find(obj, "p_t")) spec.comm.p_t = as_number(*p_t, path + ".p_t");
  try {
    validate(spec.comm);
  } catch (const Error& e) {
    semantic_error(path + ".p_t", e.what());
  }
  return spec;
}

inline std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorKind::io_failure, "cannot read " + file.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline TransportNetwork parse_network_tree(const Json& obj, const std::string& path,
                                           const std::filesystem::path& base_dir);

inline TransportNetwork parse_network_body(const Json& obj, const std::string& path) {
  require_object(obj, path);
  double speed = 1.0;
  if (const Json* s = find(obj, "speed")) speed = as_number(*s, path + ".speed");
  if (!(speed > 0.0)) semantic_error(path + ".speed", "speed must be positive");

  const Json& nodes_json = require(obj, "nodes", path);
  if (!nodes_json.is_array()) schema_error(path + ".nodes", "expected a list");
  std::vector<NodeSpec> nodes;
  for (std::size_t i = 0; i < nodes_json.size(); ++i) {
    const std::string at = path + ".nodes[" + std::to_string(i) + "]";
    require_object(nodes_json[i], at);
    NodeSpec node;
    node.id = as_id(require(nodes_json[i], "id", at), at + ".id");
    if (const Json* spec = find(nodes_json[i], "intersection")) {
      node.intersection = parse_intersection(*spec, at + ".intersection");
    }
    nodes.push_back(std::move(node));
  }

  std::vector<EdgeSpec> edges;
  if (const Json* edges_json = find(obj, "edges")) {
    if (!edges_json->is_array()) schema_error(path + ".edges", "expected a list");
    for (std::size_t i = 0; i < edges_json->size(); ++i) {
      const std::string at = path + ".edges[" + std::to_string(i) + "]";
      const Json& e = (*edges_json)[i];
      require_object(e, at);
      EdgeSpec edge;
      edge.from = as_id(require(e, "from", at), at + ".from");
      edge.to = as_id(require(e, "to", at), at + ".to");
      if (const Json* len = find(e, "length")) edge.length = as_number(*len, at + ".length");
      if (const Json* s = find(e, "speed")) edge.speed = as_number(*s, at + ".speed");
      if (!(edge.length >= 0.0)) semantic_error(at + ".length", "length must be >= 0");
      if (edge.speed && !(*edge.speed > 0.0)) semantic_error(at + ".speed", "speed must be positive");
      edges.push_back(std::move(edge));
    }
  }
  try {
    return TransportNetwork(std::move(nodes), std::move(edges), speed);
  } catch (const Error& e) {
    semantic_error(path, e.what());
  }
}

inline TransportNetwork parse_network_tree(const Json& obj, const std::string& path,
                                           const std::filesystem::path& base_dir) {
  require_object(obj, path);
  if (const Json* file = find(obj, "file")) {
    const std::filesystem::path ref = base_dir / as_string(*file, path + ".file");
    std::string text;
    try {
      text = read_file(ref);
    } catch (const Error&) {
      semantic_error(path + ".file", "referenced file does not exist: " + ref.string());
    }
    Json tree = parse_tree(text);
    require_object(tree, "$");
    const Json* inner = find(tree, "network");
    return parse_network_tree(inner ? *inner : tree, ref.filename().string() + ":network", ref.parent_path());
  }
  return parse_network_body(obj, path);
}

template <typename Enum>
Enum parse_choice(const Json& value, const std::string& path,
                  std::initializer_list<std::pair<const char*, Enum>> choices) {
  const std::string text = as_string(value, path);
  std::string allowed;
  for (const auto& [name, e] : choices) {
    if (text == name) return e;
    allowed += allowed.empty() ? name : std::string("|") + name;
  }
  schema_error(path, "expected one of " + allowed + ", got '" + text + "'");
}

inline SweepSpec parse_sweep(const Json& obj, const std::string& path) {
  require_object(obj, path);
  SweepSpec sweep;
  sweep.axis = parse_choice<SweepAxis>(require(obj, "axis", path), path + ".axis",
                                       {{"total_rate", SweepAxis::total_rate},
                                        {"p_t", SweepAxis::p_t},
                                        {"node_rate", SweepAxis::node_rate}});
  sweep.start = as_number(require(obj, "start", path), path + ".start");
  sweep.stop = as_number(require(obj, "stop", path), path + ".stop");
  sweep.step = as_number(require(obj, "step", path), path + ".step");
  if (!(sweep.step > 0.0)) schema_error(path + ".step", "step must be > 0");
  if (!(sweep.stop >= sweep.start)) schema_error(path, "empty sweep range (stop < start)");
  if (const Json* series = find(obj, "p_t")) {
    sweep.p_t_series = as_numbers(*series, path + ".p_t");
    if (sweep.p_t_series.empty()) schema_error(path + ".p_t", "empty p_t series");
    for (double p : sweep.p_t_series) {
      if (!(p >= 0.0 && p <= 1.0)) semantic_error(path + ".p_t", "communication probability outside [0, 1]");
    }
  }
  if (const Json* node = find(obj, "node")) sweep.node = as_id(*node, path + ".node");
  if (sweep.axis == SweepAxis::p_t && (sweep.start < 0.0 || sweep.stop > 1.0 + 1e-12)) {
    semantic_error(path, "p_t sweep must stay within [0, 1]");
  }
  if (sweep.axis != SweepAxis::p_t && sweep.start < 0.0) semantic_error(path, "arrival rates must be >= 0");
  return sweep;
}

inline ExperimentSpec parse_experiment(const Json& root, const std::filesystem::path& base_dir) {
  ExperimentSpec spec;
  spec.kind = parse_choice<ExperimentKind>(require(root, "kind", "$"), "$.kind",
                                           {{"analyze", ExperimentKind::analyze},
                                            {"simulate", ExperimentKind::simulate},
                                            {"route", ExperimentKind::route},
                                            {"sweep", ExperimentKind::sweep}});
  if (const Json* i = find(root, "intersection")) spec.intersection = parse_intersection(*i, "$.intersection");
  if (const Json* n = find(root, "network")) spec.network = parse_network_tree(*n, "$.network", base_dir);
  if (const Json* r = find(root, "route")) {
    require_object(*r, "$.route");
    spec.route_from = as_id(require(*r, "from", "$.route"), "$.route.from");
    spec.route_to = as_id(require(*r, "to", "$.route"), "$.route.to");
  }
  if (const Json* m = find(root, "mode")) {
    spec.mode = parse_choice<ModeSelection>(*m, "$.mode",
                                            {{"aware", ModeSelection::aware},
                                             {"baseline", ModeSelection::baseline},
                                             {"both", ModeSelection::both}});
  }
  if (const Json* s = find(root, "sweep")) spec.sweep = parse_sweep(*s, "$.sweep");
  if (const Json* sim = find(root, "simulation")) {
    require_object(*sim, "$.simulation");
    spec.simulate = true;
    if (const Json* on = find(*sim, "enabled")) {
      if (!on->is_boolean()) schema_error("$.simulation.enabled", "expected true or false");
      spec.simulate = on->get<bool>();
    }
    if (const Json* h = find(*sim, "horizon")) spec.horizon = as_count(*h, "$.simulation.horizon");
    if (const Json* w = find(*sim, "warmup")) spec.warmup = as_count(*w, "$.simulation.warmup");
    if (const Json* seeds = find(*sim, "seeds")) {
      if (!seeds->is_array()) schema_error("$.simulation.seeds", "expected a list of seeds");
      spec.seeds.clear();
      for (std::size_t i = 0; i < seeds->size(); ++i) {
        spec.seeds.push_back(as_count((*seeds)[i], "$.simulation.seeds[" + std::to_string(i) + "]"));
      }
    }
  }
  if (const Json* out = find(root, "output")) {
    require_object(*out, "$.output");
    if (const Json* p = find(*out, "path")) spec.output_path = as_string(*p, "$.output.path");
    if (const Json* f = find(*out, "format")) {
      spec.format = parse_choice<OutputFormat>(*f, "$.output.format",
                                               {{"csv", OutputFormat::csv}, {"json", OutputFormat::json}});
    }
  }
  return spec;
}

}  // namespace detail

/// Cross-field checks for an experiment; applied by parse_config and again
/// by the CLI after flag overrides.
inline void validate(const ExperimentSpec& spec) {
  using detail::schema_error;
  using detail::semantic_error;
  if (spec.seeds.empty()) schema_error("$.simulation.seeds", "at least one seed is required");
  if (spec.horizon < kMinHorizon) semantic_error("$.simulation.horizon", "horizon must be at least 10^4 slots");
  if (spec.warmup && *spec.warmup >= spec.horizon) semantic_error("$.simulation.warmup", "warmup must be < horizon");

  auto need_route = [&] {
    if (!spec.network) schema_error("$.network", "missing required field");
    if (spec.route_from.empty() || spec.route_to.empty()) schema_error("$.route", "missing required field");
    if (!spec.network->contains(spec.route_from)) semantic_error("$.route.from", "unknown node '" + spec.route_from + "'");
    if (!spec.network->contains(spec.route_to)) semantic_error("$.route.to", "unknown node '" + spec.route_to + "'");
  };

  switch (spec.kind) {
    case ExperimentKind::analyze:
    case ExperimentKind::simulate:
      if (!spec.intersection) schema_error("$.intersection", "missing required field");
      break;
    case ExperimentKind::route:
      need_route();
      break;
    case ExperimentKind::sweep: {
      if (!spec.sweep) schema_error("$.sweep", "missing required field");
      const SweepSpec& sweep = *spec.sweep;
      if (spec.network) {
        need_route();
        if (sweep.axis == SweepAxis::total_rate) semantic_error("$.sweep.axis", "network sweeps use p_t or node_rate");
        if (sweep.node.empty()) schema_error("$.sweep.node", "missing required field");
        if (!spec.network->contains(sweep.node)) semantic_error("$.sweep.node", "unknown node '" + sweep.node + "'");
        if (!spec.network->node(sweep.node).intersection) {
          semantic_error("$.sweep.node", "swept node has no intersection");
        }
        if (!sweep.p_t_series.empty()) semantic_error("$.sweep.p_t", "p_t series applies to intersection sweeps");
      } else {
        if (!spec.intersection) schema_error("$.intersection", "missing required field");
        if (sweep.axis == SweepAxis::node_rate) semantic_error("$.sweep.axis", "node_rate needs a network");
        if (sweep.axis == SweepAxis::p_t && !sweep.p_t_series.empty()) {
          semantic_error("$.sweep.p_t", "p_t series conflicts with a p_t axis");
        }
      }
      break;
    }
  }
}

/// Parses an experiment or network document. `base_dir` resolves `network.file` references.
inline ConfigDocument parse_config(const std::string& text, const std::filesystem::path& base_dir = ".") {
  const Json root = detail::parse_tree(text);
  detail::require_object(root, "$");
  if (!detail::find(root, "kind")) {
    const Json* network = detail::find(root, "network");
    if (!network) detail::schema_error("$.kind", "missing required field");
    return detail::parse_network_tree(*network, "$.network", base_dir);
  }
  ExperimentSpec spec = detail::parse_experiment(root, base_dir);
  validate(spec);
  return spec;
}

inline ConfigDocument load_config(const std::filesystem::path& file) {
  return parse_config(detail::read_file(file), file.parent_path());
}

inline Json intersection_to_json(const IntersectionSpec& spec) {
  return Json{{"model", to_string(spec.model)},
              {"rates", spec.arrivals.rates},
              {"phases", spec.phases.probs},
              {"p_t", spec.comm.p_t}};
}

/// Network document that parses back to an identical network.
inline Json network_to_json(const TransportNetwork& net) {
  Json nodes = Json::array();
  for (const NodeSpec& node : net.nodes()) {
    Json n{{"id", node.id}};
    if (node.intersection) n["intersection"] = intersection_to_json(*node.intersection);
    nodes.push_back(std::move(n));
  }
  Json edges = Json::array();
  for (const EdgeSpec& edge : net.edges()) {
    Json e{{"from", edge.from}, {"to", edge.to}, {"length", edge.length}};
    if (edge.speed) e["speed"] = *edge.speed;
    edges.push_back(std::move(e));
  }
  return Json{{"network", {{"speed", net.default_speed()}, {"nodes", nodes}, {"edges", edges}}}};
}

inline std::string emit_network(const TransportNetwork& net) { return network_to_json(net).dump(2) + "\n"; }

}  // namespace hol
