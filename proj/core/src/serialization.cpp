#include "homeostat/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <string>

#include "homeostat/error.hpp"

namespace homeostat {

namespace {

std::string at(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  require_object(j, path);
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      fail(at(path, key), "unknown field");
    }
  }
}

const json& field(const json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(at(path, key), "missing required field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "must be finite");
  return x;
}

double number(const json& j, const std::string& path, const char* key) {
  return number(field(j, path, key), at(path, key));
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

const json& array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  return j;
}

// Optional array field; a missing key behaves as [].
const json& optional_array(const json& j, const std::string& path, const char* key) {
  static const json empty = json::array();
  const auto it = j.find(key);
  if (it == j.end()) return empty;
  return array(*it, at(path, key));
}

std::string string_field(const json& j, const std::string& path, const char* key) {
  const json& v = field(j, path, key);
  if (!v.is_string()) fail(at(path, key), "expected a string");
  return v.get<std::string>();
}

void check_version(const json& j) {
  if (j.contains("spec_version")) {
    const int v = integer(j["spec_version"], "spec_version");
    if (v != kSpecVersion) fail("spec_version", "unsupported version " + std::to_string(v));
  }
}

std::pair<int, int> dimensions(const json& j) {
  const json& d = field(j, "", "dimensions");
  allow_keys(d, "dimensions", {"compartments", "types"});
  return {integer(field(d, "dimensions", "compartments"), "dimensions.compartments"),
          integer(field(d, "dimensions", "types"), "dimensions.types")};
}

std::vector<NodeId> node_list(const json& j) {
  std::vector<NodeId> nodes;
  const json& arr = optional_array(j, "", "nodes");
  for (std::size_t i = 0; i < arr.size(); ++i) nodes.push_back(node_from_json(arr[i], index("nodes", i)));
  return nodes;
}

std::vector<InputBinding> inputs(const json& j) {
  std::vector<InputBinding> out;
  const json& arr = optional_array(j, "", "inputs");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = index("inputs", i);
    allow_keys(arr[i], p, {"node", "signal"});
    out.push_back({node_from_json(field(arr[i], p, "node"), at(p, "node")), string_field(arr[i], p, "signal")});
  }
  return out;
}

json inputs_json(const std::vector<InputBinding>& in) {
  json arr = json::array();
  for (const auto& b : in) arr.push_back({{"node", to_json(b.node)}, {"signal", b.signal}});
  return arr;
}

json nodes_json(const std::vector<NodeId>& nodes) {
  json arr = json::array();
  for (const auto& n : nodes) arr.push_back(to_json(n));
  return arr;
}

json distance_json(int d) { return d == kUnreachable ? json(nullptr) : json(d); }

}  // namespace

NodeId node_from_json(const json& j, const std::string& path) {
  if (j.is_array()) {
    if (j.size() != 2) fail(path, "expected [compartment, type]");
    return {integer(j[0], index(path, 0)), integer(j[1], index(path, 1))};
  }
  if (j.is_object()) {
    allow_keys(j, path, {"compartment", "type"});
    return {integer(field(j, path, "compartment"), at(path, "compartment")),
            integer(field(j, path, "type"), at(path, "type"))};
  }
  fail(path, "expected [compartment, type] or {compartment, type}");
}

DelayDistribution delay_from_json(const json& j, const std::string& path) {
  allow_keys(j, path, {"family", "params"});
  const std::string family = string_field(j, path, "family");
  const std::string pp = at(path, "params");
  const json& params = field(j, path, "params");
  try {
    if (family == "exponential") {
      allow_keys(params, pp, {"rate"});
      return DelayDistribution::exponential(number(params, pp, "rate"));
    }
    if (family == "gamma") {
      allow_keys(params, pp, {"shape", "rate"});
      return DelayDistribution::gamma(number(params, pp, "shape"), number(params, pp, "rate"));
    }
    if (family == "uniform") {
      allow_keys(params, pp, {"upper"});
      return DelayDistribution::uniform(number(params, pp, "upper"));
    }
  } catch (const InvalidArgument& e) {
    fail(pp, e.what());
  }
  if (family == "deterministic" || family == "lattice" || family == "dirac") {
    fail(at(path, "family"), "'" + family +
                                 "' delays have |psi(sigma)| = 1 at some sigma != 0 and are not admissible");
  }
  fail(at(path, "family"), "unknown delay family '" + family + "' (expected exponential, gamma or uniform)");
}

NetworkSpec network_from_json(const json& j) {
  allow_keys(j, "", {"spec_version", "dimensions", "nodes", "edges", "exits", "inputs"});
  check_version(j);
  NetworkSpec spec;
  std::tie(spec.compartments, spec.types) = dimensions(j);
  spec.nodes = node_list(j);
  const json& edges = optional_array(j, "", "edges");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string p = index("edges", i);
    allow_keys(edges[i], p, {"from", "to", "prob", "delay"});
    spec.edges.push_back({node_from_json(field(edges[i], p, "from"), at(p, "from")),
                          node_from_json(field(edges[i], p, "to"), at(p, "to")),
                          number(edges[i], p, "prob"),
                          delay_from_json(field(edges[i], p, "delay"), at(p, "delay"))});
  }
  const json& exits = optional_array(j, "", "exits");
  for (std::size_t i = 0; i < exits.size(); ++i) {
    const std::string p = index("exits", i);
    allow_keys(exits[i], p, {"node", "prob", "delay"});
    spec.exits.push_back({node_from_json(field(exits[i], p, "node"), at(p, "node")),
                          number(exits[i], p, "prob"),
                          delay_from_json(field(exits[i], p, "delay"), at(p, "delay"))});
  }
  spec.inputs = inputs(j);
  return spec;
}

Signal signal_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  const std::string type = string_field(j, path, "type");
  try {
    if (type == "constant") {
      allow_keys(j, path, {"type", "mean"});
      return AlmostPeriodicSignal::constant(number(j, path, "mean"));
    }
    if (type == "almost_periodic") {
      allow_keys(j, path, {"type", "mean", "terms"});
      std::vector<FourierTerm> terms;
      const json& arr = optional_array(j, path, "terms");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = index(at(path, "terms"), i);
        allow_keys(arr[i], p, {"sigma", "re", "im"});
        const double im = arr[i].contains("im") ? number(arr[i], p, "im") : 0.0;
        terms.push_back({number(arr[i], p, "sigma"), {number(arr[i], p, "re"), im}});
      }
      return AlmostPeriodicSignal(number(j, path, "mean"), std::move(terms));
    }
    if (type == "stationary") {
      allow_keys(j, path, {"type", "mean", "harmonics", "seed"});
      std::vector<Harmonic> harmonics;
      const json& arr = optional_array(j, path, "harmonics");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = index(at(path, "harmonics"), i);
        allow_keys(arr[i], p, {"sigma", "amp"});
        harmonics.push_back({number(arr[i], p, "sigma"), number(arr[i], p, "amp")});
      }
      std::uint64_t seed = 0;
      if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail(at(path, "seed"), "expected a non-negative integer");
        seed = j["seed"].get<std::uint64_t>();
      }
      return StationaryEnvironment(number(j, path, "mean"), std::move(harmonics), seed);
    }
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
  fail(at(path, "type"), "unknown signal type '" + type + "' (expected constant, almost_periodic or stationary)");
}

SignalSet signals_from_json(const json& j, const std::string& path) {
  require_object(j, path);
  SignalSet out;
  for (const auto& [id, value] : j.items()) out.emplace(id, signal_from_json(value, at(path, id)));
  return out;
}

KineticsSpec kinetics_from_json(const json& j) {
  allow_keys(j, "", {"spec_version", "dimensions", "nodes", "reactions", "exits", "transport", "initial", "inputs"});
  check_version(j);
  KineticsSpec spec;
  std::tie(spec.reactions.compartments, spec.reactions.types) = dimensions(j);
  spec.reactions.nodes = node_list(j);
  const json& reactions = optional_array(j, "", "reactions");
  for (std::size_t i = 0; i < reactions.size(); ++i) {
    const std::string p = index("reactions", i);
    allow_keys(reactions[i], p, {"from", "to", "rate"});
    spec.reactions.jumps.push_back({node_from_json(field(reactions[i], p, "from"), at(p, "from")),
                                    node_from_json(field(reactions[i], p, "to"), at(p, "to")),
                                    number(reactions[i], p, "rate")});
  }
  const json& exits = optional_array(j, "", "exits");
  for (std::size_t i = 0; i < exits.size(); ++i) {
    const std::string p = index("exits", i);
    allow_keys(exits[i], p, {"node", "rate"});
    spec.reactions.exits.push_back({node_from_json(field(exits[i], p, "node"), at(p, "node")),
                                    number(exits[i], p, "rate")});
  }
  const json& transport = optional_array(j, "", "transport");
  for (std::size_t i = 0; i < transport.size(); ++i) {
    const std::string p = index("transport", i);
    allow_keys(transport[i], p, {"from", "to", "rate", "delay"});
    spec.transport.push_back({node_from_json(field(transport[i], p, "from"), at(p, "from")),
                              node_from_json(field(transport[i], p, "to"), at(p, "to")),
                              number(transport[i], p, "rate"),
                              delay_from_json(field(transport[i], p, "delay"), at(p, "delay"))});
  }
  const json& initial = optional_array(j, "", "initial");
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const std::string p = index("initial", i);
    allow_keys(initial[i], p, {"node", "value"});
    spec.initial.emplace_back(node_from_json(field(initial[i], p, "node"), at(p, "node")),
                              number(initial[i], p, "value"));
  }
  spec.inputs = inputs(j);
  try {
    check_kinetics(spec);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("kinetics: ") + e.what());
  }
  return spec;
}

json to_json(const NodeId& node) { return json::array({node.compartment, node.type}); }

json to_json(const DelayDistribution& delay) {
  json params;
  switch (delay.family()) {
    case DelayDistribution::Family::exponential: params = {{"rate", delay.rate()}}; break;
    case DelayDistribution::Family::gamma: params = {{"shape", delay.shape()}, {"rate", delay.rate()}}; break;
    case DelayDistribution::Family::uniform: params = {{"upper", delay.upper()}}; break;
  }
  return {{"family", delay.name()}, {"params", params}};
}

json to_json(const NetworkSpec& spec) {
  json j;
  j["spec_version"] = kSpecVersion;
  j["dimensions"] = {{"compartments", spec.compartments}, {"types", spec.types}};
  if (!spec.nodes.empty()) j["nodes"] = nodes_json(spec.nodes);
  json edges = json::array();
  for (const auto& e : spec.edges) {
    edges.push_back({{"from", to_json(e.from)}, {"to", to_json(e.to)}, {"prob", e.prob}, {"delay", to_json(e.delay)}});
  }
  j["edges"] = edges;
  json exits = json::array();
  for (const auto& e : spec.exits) {
    exits.push_back({{"node", to_json(e.node)}, {"prob", e.prob}, {"delay", to_json(e.delay)}});
  }
  j["exits"] = exits;
  j["inputs"] = inputs_json(spec.inputs);
  return j;
}

json to_json(const Signal& signal) {
  if (const auto* env = std::get_if<StationaryEnvironment>(&signal)) {
    json harmonics = json::array();
    for (const auto& h : env->harmonics()) harmonics.push_back({{"sigma", h.frequency}, {"amp", h.amplitude}});
    return {{"type", "stationary"}, {"mean", env->mean()}, {"harmonics", harmonics}, {"seed", env->seed()}};
  }
  const auto& ap = std::get<AlmostPeriodicSignal>(signal);
  if (ap.is_constant()) return {{"type", "constant"}, {"mean", ap.mean()}};
  json terms = json::array();
  for (const auto& t : ap.terms()) {
    terms.push_back({{"sigma", t.frequency}, {"re", t.coefficient.real()}, {"im", t.coefficient.imag()}});
  }
  return {{"type", "almost_periodic"}, {"mean", ap.mean()}, {"terms", terms}};
}

json to_json(const SignalSet& signals) {
  json j = json::object();
  for (const auto& [id, s] : signals) j[id] = to_json(s);
  return j;
}

json to_json(const KineticsSpec& spec) {
  json j;
  j["spec_version"] = kSpecVersion;
  j["dimensions"] = {{"compartments", spec.reactions.compartments}, {"types", spec.reactions.types}};
  if (!spec.reactions.nodes.empty()) j["nodes"] = nodes_json(spec.reactions.nodes);
  json reactions = json::array();
  for (const auto& r : spec.reactions.jumps) {
    reactions.push_back({{"from", to_json(r.from)}, {"to", to_json(r.to)}, {"rate", r.rate}});
  }
  j["reactions"] = reactions;
  json exits = json::array();
  for (const auto& e : spec.reactions.exits) exits.push_back({{"node", to_json(e.node)}, {"rate", e.rate}});
  j["exits"] = exits;
  json transport = json::array();
  for (const auto& t : spec.transport) {
    transport.push_back({{"from", to_json(t.from)}, {"to", to_json(t.to)}, {"rate", t.rate}, {"delay", to_json(t.delay)}});
  }
  j["transport"] = transport;
  json initial = json::array();
  for (const auto& [node, value] : spec.initial) initial.push_back({{"node", to_json(node)}, {"value", value}});
  j["initial"] = initial;
  j["inputs"] = inputs_json(spec.inputs);
  return j;
}

json to_json(const ValidationReport& report) {
  json diags = json::array();
  for (const auto& d : report.diagnostics) {
    json e = {{"severity", d.severity == Diagnostic::Severity::error ? "error" : "warning"},
              {"message", d.message}};
    e["node"] = d.node ? to_json(*d.node) : json(nullptr);
    diags.push_back(e);
  }
  json j = {{"ok", report.ok()}, {"diagnostics", diags}};
  j["spectral_radius"] = std::isnan(report.spectral_radius) ? json(nullptr) : json(report.spectral_radius);
  return j;
}

json to_json(const ClassParameters& p) {
  return {{"gap", p.gap},
          {"coefficient_sum", p.coefficient_sum},
          {"coefficient_sum_with_mean", p.coefficient_sum_with_mean},
          {"attenuation", p.attenuation},
          {"bound_constant", p.bound_constant},
          {"variance_sum", p.variance_sum},
          {"variance_bound_constant", p.variance_bound_constant}};
}

json to_json(const HomeostasisReport& report) {
  json nodes = json::array();
  for (const auto& n : report.nodes) {
    nodes.push_back({{"node", to_json(n.node)},
                     {"distance", distance_json(n.distance)},
                     {"steady_level", n.steady_level},
                     {"deviation", n.deviation},
                     {"bound", n.bound},
                     {"pass", n.pass}});
  }
  return {{"ok", report.ok()},
          {"parameters", to_json(report.parameters)},
          {"injection_sojourn", report.injection == InjectionSojourn::included ? "included" : "excluded"},
          {"window", {{"length", report.window.length}, {"step", report.window.step}}},
          {"tolerance", report.tolerance},
          {"max_imaginary", report.max_imaginary},
          {"nodes", nodes}};
}

json to_json(const VarianceReport& report) {
  json nodes = json::array();
  for (const auto& n : report.nodes) {
    nodes.push_back({{"node", to_json(n.node)},
                     {"distance", distance_json(n.distance)},
                     {"mean", n.mean},
                     {"variance", n.variance},
                     {"bound", n.bound},
                     {"pass", n.pass}});
  }
  return {{"ok", report.ok()},
          {"parameters", to_json(report.parameters)},
          {"injection_sojourn", report.injection == InjectionSojourn::included ? "included" : "excluded"},
          {"nodes", nodes}};
}

json to_json(const AgreementStats& s) {
  return {{"cells", s.cells},
          {"within", s.within},
          {"fraction", s.fraction},
          {"max_abs_difference", s.max_abs_difference},
          {"max_relative_difference", s.max_relative_difference}};
}

json to_json(const CorollaryReport& report) {
  json nodes = json::array();
  for (const auto& n : report.nodes) {
    nodes.push_back({{"node", to_json(n.node)},
                     {"distance", distance_json(n.distance)},
                     {"steady_level", n.steady_level},
                     {"limit_deviation", n.limit_deviation},
                     {"late_deviation", n.late_deviation},
                     {"bound", n.bound},
                     {"gap_half", n.gap_half},
                     {"gap_end", n.gap_end},
                     {"pass", n.pass}});
  }
  return {{"ok", report.ok()},
          {"parameters", to_json(report.parameters)},
          {"window", {{"length", report.window.length}, {"step", report.window.step}}},
          {"late_window", report.late_window},
          {"nodes", nodes}};
}

json to_json(const EnsembleEstimate& e) {
  json nodes = json::array();
  for (std::size_t j = 0; j < e.nodes.size(); ++j) {
    nodes.push_back({{"node", to_json(e.nodes[j])},
                     {"mean", e.mean[j]},
                     {"variance", e.variance[j]},
                     {"variance_se", e.variance_se[j]}});
  }
  return {{"times", e.times}, {"realizations", e.realizations}, {"nodes", nodes}};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string canonical_dump(const json& j) { return j.dump(); }

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace homeostat
