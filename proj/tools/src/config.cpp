#include "homeostat/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "homeostat/error.hpp"

namespace homeostat::cli {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; })) {
      fail(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

double positive(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!(x > 0.0) || !std::isfinite(x)) fail(path, "must be positive and finite");
  return x;
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

// Core loaders report paths relative to their own document.
template <typename F>
auto nested(const std::string& prefix, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + "." + e.what());
  }
}

void check_signal_refs(const std::vector<InputBinding>& inputs, const SignalSet& signals,
                       const std::string& prefix) {
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!signals.contains(inputs[i].signal)) {
      fail(prefix + ".inputs[" + std::to_string(i) + "].signal",
           "unknown signal '" + inputs[i].signal + "'");
    }
  }
}

}  // namespace

std::string to_string(Engine e) {
  switch (e) {
    case Engine::analytic: return "analytic";
    case Engine::simulate: return "simulate";
    case Engine::kinetics: return "kinetics";
    case Engine::spectrum: return "spectrum";
  }
  return "?";
}

Engine engine_from_string(const std::string& name) {
  for (Engine e : {Engine::analytic, Engine::simulate, Engine::kinetics, Engine::spectrum}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("engines: unknown engine '" + name +
                    "' (expected analytic, simulate, kinetics or spectrum)");
}

std::vector<Engine> parse_engine_list(const std::string& list) {
  std::vector<Engine> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Engine e = engine_from_string(item);
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  if (out.empty()) throw ConfigError("engines: list must not be empty");
  return out;
}

bool ExperimentConfig::has(Engine e) const {
  return std::find(engines.begin(), engines.end(), e) != engines.end();
}

NetworkSpec ExperimentConfig::network_spec() const {
  if (network) return *network;
  if (kinetics) return kinetics_to_semimarkov(*kinetics);
  throw ConfigError("config has neither a network nor a kinetics section");
}

ExperimentConfig parse_config(const json& doc) {
  allow_keys(doc, "", {"network", "kinetics", "signals", "gap", "grid", "sim", "engines",
                       "injection_sojourn", "output", "seed", "sweep"});
  ExperimentConfig cfg;
  cfg.document = doc;

  if (doc.contains("signals")) cfg.signals = signals_from_json(doc["signals"], "signals");
  if (doc.contains("network") && doc.contains("kinetics")) {
    fail("network", "give either a network or a kinetics section, not both");
  }
  if (doc.contains("network")) {
    cfg.network = nested("network", [&] { return network_from_json(doc["network"]); });
    check_signal_refs(cfg.network->inputs, cfg.signals, "network");
  }
  if (doc.contains("kinetics")) {
    cfg.kinetics = nested("kinetics", [&] { return kinetics_from_json(doc["kinetics"]); });
    check_signal_refs(cfg.kinetics->inputs, cfg.signals, "kinetics");
  }
  if (!cfg.network && !cfg.kinetics && !doc.contains("sweep")) {
    fail("network", "missing required field (or kinetics, or sweep)");
  }
  if (doc.contains("gap")) cfg.gap = positive(doc["gap"], "gap");

  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    allow_keys(g, "grid", {"dt", "horizon"});
    if (g.contains("dt")) cfg.grid.dt = positive(g["dt"], "grid.dt");
    if (g.contains("horizon")) cfg.grid.horizon = positive(g["horizon"], "grid.horizon");
  }

  if (doc.contains("sim")) {
    const json& s = doc["sim"];
    allow_keys(s, "sim", {"replications", "env_replications", "sample_step", "sample_times"});
    if (s.contains("replications")) cfg.sim.replications = count(s["replications"], "sim.replications");
    if (s.contains("env_replications")) {
      cfg.sim.env_replications = count(s["env_replications"], "sim.env_replications");
    }
    if (s.contains("sample_step")) cfg.sim.sample_step = positive(s["sample_step"], "sim.sample_step");
    if (s.contains("sample_times")) {
      const json& arr = s["sample_times"];
      if (!arr.is_array()) fail("sim.sample_times", "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = "sim.sample_times[" + std::to_string(i) + "]";
        if (!arr[i].is_number() || arr[i].get<double>() < 0.0) fail(p, "expected a number >= 0");
        cfg.sim.sample_times.push_back(arr[i].get<double>());
      }
      if (!std::is_sorted(cfg.sim.sample_times.begin(), cfg.sim.sample_times.end())) {
        fail("sim.sample_times", "must be non-decreasing");
      }
    }
    if (cfg.sim.replications == 0) fail("sim.replications", "must be at least 1");
  }

  if (doc.contains("engines")) {
    const json& e = doc["engines"];
    if (!e.is_array()) fail("engines", "expected an array");
    cfg.engines.clear();
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (!e[i].is_string()) fail("engines[" + std::to_string(i) + "]", "expected a string");
      const Engine eng = engine_from_string(e[i].get<std::string>());
      if (!cfg.has(eng)) cfg.engines.push_back(eng);
    }
    if (cfg.engines.empty()) fail("engines", "must not be empty");
  }
  if (cfg.has(Engine::kinetics) && !cfg.kinetics) {
    fail("engines", "the kinetics engine needs a kinetics section");
  }

  if (doc.contains("injection_sojourn")) {
    const json& v = doc["injection_sojourn"];
    if (v == "included") {
      cfg.injection = InjectionSojourn::included;
    } else if (v == "excluded") {
      cfg.injection = InjectionSojourn::excluded;
    } else {
      fail("injection_sojourn", "expected \"included\" or \"excluded\"");
    }
  }
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) fail("output", "expected a string");
    cfg.output = doc["output"].get<std::string>();
  }
  if (doc.contains("seed")) {
    const json& seed = doc["seed"];
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      fail("seed", "expected a non-negative integer");
    }
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }

  if (doc.contains("sweep")) {
    const json& s = doc["sweep"];
    allow_keys(s, "sweep", {"depths", "edge_delay", "exit_delay", "signal"});
    SweepSection sw;
    if (s.contains("depths")) {
      const json& d = s["depths"];
      if (!d.is_array() || d.size() != 2 || !d[0].is_number_integer() || !d[1].is_number_integer()) {
        fail("sweep.depths", "expected [first, last]");
      }
      sw.first_depth = d[0].get<int>();
      sw.last_depth = d[1].get<int>();
      if (sw.first_depth < 1 || sw.last_depth < sw.first_depth) fail("sweep.depths", "need 1 <= first <= last");
    }
    if (s.contains("edge_delay")) sw.edge_delay = delay_from_json(s["edge_delay"], "sweep.edge_delay");
    if (s.contains("exit_delay")) sw.exit_delay = delay_from_json(s["exit_delay"], "sweep.exit_delay");
    if (!s.contains("signal") || !s["signal"].is_string()) fail("sweep.signal", "missing required string field");
    sw.signal = s["signal"].get<std::string>();
    if (!cfg.signals.contains(sw.signal)) fail("sweep.signal", "unknown signal '" + sw.signal + "'");
    cfg.sweep = sw;
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

std::string config_hash(const ExperimentConfig& config, std::optional<std::uint64_t> seed,
                        const std::vector<Engine>& engines) {
  json doc = config.document;
  doc.erase("output");
  if (seed) {
    doc["seed"] = *seed;
  } else {
    doc.erase("seed");
  }
  json names = json::array();
  for (Engine e : engines) names.push_back(to_string(e));
  doc["engines"] = names;
  return hex64(fnv1a64(canonical_dump(doc)));
}

}  // namespace homeostat::cli
