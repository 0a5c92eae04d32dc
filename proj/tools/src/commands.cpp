#include "homeostat/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "homeostat/analytic.hpp"
#include "homeostat/cli/config.hpp"
#include "homeostat/error.hpp"
#include "homeostat/kinetics.hpp"
#include "homeostat/serialization.hpp"
#include "homeostat/simulate.hpp"
#include "homeostat/trace.hpp"

namespace homeostat::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string short_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5g", x);
  return buf;
}

// Files land under their final name only once fully written.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& contents) {
    const auto target = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) throw Error("cannot write " + tmp.string());
      f << contents;
      if (!f) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, target);
    files_[name] = hex64(fnv1a64(contents));
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  void write_trace(const std::string& name, const OccupancyTrace& trace, TraceField field) {
    std::ostringstream os;
    write_csv(os, trace, field);
    write(name, os.str());
  }

  const std::map<std::string, std::string>& files() const { return files_; }
  const std::filesystem::path& path() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

// Largest admissible gap: the lowest input frequency (1 for constant inputs).
double effective_gap(const ExperimentConfig& cfg, std::span<const BoundInput> inputs) {
  if (cfg.gap) return *cfg.gap;
  double lo = 0.0;
  for (const auto& in : inputs) {
    if (in.signal.is_constant()) continue;
    lo = lo == 0.0 ? in.signal.min_frequency() : std::min(lo, in.signal.min_frequency());
  }
  for (const auto& [id, s] : cfg.signals) {
    if (const auto* env = std::get_if<StationaryEnvironment>(&s)) {
      for (const auto& h : env->harmonics()) lo = lo == 0.0 ? h.frequency : std::min(lo, h.frequency);
    }
  }
  return lo > 0.0 ? lo : 1.0;
}

double default_horizon(const Network& net) {
  double mu = 0.0;
  for (std::size_t j = 0; j < net.size(); ++j) mu = std::max(mu, mean_sojourn(net, j));
  return 20.0 * mu / (1.0 - net.spectral_radius());
}

std::vector<double> sample_times(const SimSection& sim, double horizon) {
  if (!sim.sample_times.empty()) return sim.sample_times;
  const double step = sim.sample_step.value_or(horizon / 50.0);
  std::vector<double> t;
  const auto n = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) t.push_back(std::min(horizon, step * static_cast<double>(k)));
  return t;
}

void tag(OccupancyTrace& trace, const std::string& hash, std::optional<std::uint64_t> seed,
         const std::string& engine) {
  std::vector<std::pair<std::string, std::string>> head{
      {"config_hash", hash}, {"seed", seed ? std::to_string(*seed) : "none"}, {"engine", engine}};
  // Engine metadata that repeats a head key is dropped.
  std::erase_if(trace.metadata, [&](const auto& kv) {
    return std::any_of(head.begin(), head.end(), [&](const auto& h) { return h.first == kv.first; });
  });
  trace.metadata.insert(trace.metadata.begin(), head.begin(), head.end());
}

bool has_stationary_input(const ExperimentConfig& cfg, const NetworkSpec& spec) {
  bool stationary = false;
  for (const auto& in : spec.inputs) {
    const auto& s = cfg.signals.at(in.signal);
    if (std::holds_alternative<StationaryEnvironment>(s)) {
      stationary = true;
    } else if (!std::get<AlmostPeriodicSignal>(s).is_constant()) {
      return false;  // variance response needs stationary or constant inputs
    }
  }
  return stationary;
}

std::string spectrum_csv(const Network& net, std::span<const BoundInput> inputs, InjectionSojourn injection,
                         const std::string& hash) {
  std::set<double> freqs{0.0};
  for (const auto& in : inputs) {
    for (const auto& t : in.signal.terms()) freqs.insert(t.frequency);
  }
  std::ostringstream os;
  os << "# config_hash=" << hash << "\n# engine=spectrum\n";
  os << "sigma,source,target,re,im,abs\n";
  for (double s : freqs) {
    const auto g = spectral_response(net, s, injection);
    for (std::size_t i : net.input_nodes()) {
      for (std::size_t j = 0; j < net.size(); ++j) {
        const auto v = g.response(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        os << format_number(s) << ',' << column_name(net.node(i)) << ',' << column_name(net.node(j)) << ','
           << format_number(v.real()) << ',' << format_number(v.imag()) << ',' << format_number(std::abs(v))
           << '\n';
      }
    }
  }
  return os.str();
}

std::pair<int, int> parse_depths(const std::string& s) {
  const auto sep = s.find_first_of(":-");
  try {
    if (sep == std::string::npos) {
      const int n = std::stoi(s);
      return {n, n};
    }
    return {std::stoi(s.substr(0, sep)), std::stoi(s.substr(sep + 1))};
  } catch (const std::logic_error&) {
    throw ConfigError("--depths: expected first:last, got '" + s + "'");
  }
}

NetworkSpec chain(const SweepSection& sw, int depth) {
  NetworkSpec spec;
  spec.compartments = depth + 1;
  spec.types = 1;
  for (int k = 1; k <= depth; ++k) spec.edges.push_back({{k, 1}, {k + 1, 1}, 1.0, sw.edge_delay});
  spec.exits.push_back({{depth + 1, 1}, 1.0, sw.exit_delay});
  spec.inputs.push_back({{1, 1}, sw.signal});
  return spec;
}

// Least-squares slope of log y against x over positive y.
std::optional<double> log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > 0.0) pts.emplace_back(x[i], std::log(y[i]));
  }
  if (pts.size() < 2) return std::nullopt;
  double sx = 0.0, sy = 0.0;
  for (const auto& [a, b] : pts) {
    sx += a;
    sy += b;
  }
  const double n = static_cast<double>(pts.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [a, b] : pts) {
    sxx += (a - mx) * (a - mx);
    sxy += (a - mx) * (b - my);
  }
  return sxy / sxx;
}

template <typename F>
int guarded(std::ostream& err, int code, F&& f) {
  try {
    return f();
  } catch (const ConfigError& e) {
    err << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const InvalidArgument& e) {
    err << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const InvalidNetwork& e) {
    err << "invalid network: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const ClassConditionError& e) {
    err << "class condition violated: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    err << "engine failure: " << e.what() << "\n";
    return code;
  }
}

}  // namespace

int cmd_validate(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, kExitInvalidConfig, [&] {
    const ExperimentConfig cfg = load_config(options.config);
    if (!cfg.network && !cfg.kinetics) {
      out << "sweep template: depths " << cfg.sweep->first_depth << ".." << cfg.sweep->last_depth << "\n";
      return int{kExitOk};
    }
    const NetworkSpec spec = cfg.network_spec();
    const ValidationReport report = validate(spec);
    out << report.summary();
    if (!report.ok()) return int{kExitInvalidConfig};
    const Network net(spec);
    const auto inputs = bind_inputs(net, cfg.signals);
    const double gap = effective_gap(cfg, inputs);
    const ClassParameters p = class_parameters(net, cfg.signals, gap);
    out << "C=" << short_number(p.coefficient_sum) << " a=" << short_number(p.gap)
        << " delta=" << short_number(p.attenuation) << " B=" << short_number(p.bound_constant) << "\n";
    return int{kExitOk};
  });
}

int cmd_run(const Options& options, std::ostream& out, std::ostream& err) {
  // Setup errors are configuration errors; everything after is an engine failure.
  std::optional<ExperimentConfig> cfg_holder;
  std::optional<Network> net_holder;
  std::vector<BoundInput> inputs;
  std::vector<Engine> engines;
  std::optional<std::uint64_t> seed;
  double gap = 0.0;
  TimeGrid grid;
  const int setup = guarded(err, kExitInvalidConfig, [&] {
    cfg_holder = load_config(options.config);
    const auto& cfg = *cfg_holder;
    engines = options.engines ? parse_engine_list(*options.engines) : cfg.engines;
    if (engines.end() != std::find(engines.begin(), engines.end(), Engine::kinetics) && !cfg.kinetics) {
      throw ConfigError("engines: the kinetics engine needs a kinetics section");
    }
    seed = options.seed ? options.seed : cfg.seed;
    if (!seed && engines.end() != std::find(engines.begin(), engines.end(), Engine::simulate)) {
      throw ConfigError("seed: required when the simulate engine runs (config or --seed)");
    }
    const NetworkSpec spec = cfg.network_spec();
    const ValidationReport report = validate(spec);
    if (!report.ok()) throw InvalidNetwork(report.summary());
    net_holder.emplace(spec);
    inputs = bind_inputs(*net_holder, cfg.signals);
    gap = effective_gap(cfg, inputs);
    class_parameters(*net_holder, cfg.signals, gap);
    const double horizon = cfg.grid.horizon.value_or(default_horizon(*net_holder));
    grid = cfg.grid.dt ? TimeGrid::with_horizon(horizon, *cfg.grid.dt) : default_grid(*net_holder, horizon);
    return int{kExitOk};
  });
  if (setup != kExitOk) return setup;

  return guarded(err, kExitEngineFailure, [&] {
    const auto& cfg = *cfg_holder;
    const Network& net = *net_holder;
    auto has = [&](Engine e) { return std::find(engines.begin(), engines.end(), e) != engines.end(); };
    const std::string hash = config_hash(cfg, seed, engines);
    OutputDir dir(options.out.value_or(std::filesystem::path(cfg.output)));
    const NetworkSpec& spec = net.spec();

    std::optional<OccupancyTrace> analytic;
    if (has(Engine::analytic)) {
      KernelOptions kopts;
      kopts.injection = cfg.injection;
      const auto kernel = transition_kernel(net, grid, kopts);
      analytic = transient_mean(net, kernel, inputs);
      tag(*analytic, hash, seed, "analytic");
      dir.write_trace("trace_analytic.csv", *analytic, TraceField::mean);

      const auto report = homeostasis_report(net, cfg.signals, gap, cfg.injection);
      json rj = to_json(report);
      rj["config_hash"] = hash;
      dir.write_json("homeostasis_report.json", rj);
      out << "homeostasis: " << (report.ok() ? "pass" : "FAIL") << " (delta="
          << short_number(report.parameters.attenuation) << ", B=" << short_number(report.parameters.bound_constant)
          << ")\n";

      if (has_stationary_input(cfg, spec)) {
        const auto variance = variance_response(net, cfg.signals, gap, cfg.injection);
        json vj = to_json(variance);
        vj["config_hash"] = hash;
        if (cfg.sim.env_replications >= 2) {
          SimConfig sim;
          sim.horizon = grid.horizon();
          sim.seed = seed.value_or(0);
          sim.environment_replications = cfg.sim.env_replications;
          sim.injection = cfg.injection;
          const auto ensemble = environment_ensemble(net, cfg.signals, sim, kernel);
          vj["ensemble"] = to_json(ensemble);
          vj["ensemble"]["seed"] = sim.seed;
        }
        dir.write_json("variance_report.json", vj);
        out << "variance: " << (variance.ok() ? "pass" : "FAIL") << "\n";
      }
    }

    if (has(Engine::spectrum)) dir.write("spectrum.csv", spectrum_csv(net, inputs, cfg.injection, hash));

    if (has(Engine::simulate)) {
      SimConfig sim;
      sim.horizon = grid.horizon();
      sim.replications = cfg.sim.replications;
      sim.seed = *seed;
      sim.sample_times = sample_times(cfg.sim, grid.horizon());
      sim.injection = cfg.injection;
      sim.threads = options.threads;
      OccupancyTrace mc = simulate(net, inputs, sim);
      tag(mc, hash, seed, "simulate");
      dir.write_trace("trace_simulate.csv", mc, TraceField::mean);
      dir.write_trace("trace_simulate_se.csv", mc, TraceField::standard_error);
      if (analytic) {
        const OccupancyTrace ref = resample(*analytic, mc.times);
        const auto se = to_table(mc, TraceField::standard_error);
        const AgreementStats stats = compare_traces(to_table(ref), to_table(mc), &se, 2.0);
        json cj = to_json(stats);
        cj["reference"] = "trace_analytic.csv";
        cj["candidate"] = "trace_simulate.csv";
        cj["k"] = 2.0;
        cj["required_fraction"] = 0.95;
        cj["pass"] = stats.fraction >= 0.95;
        cj["config_hash"] = hash;
        dir.write_json("compare.json", cj);
        out << "analytic vs simulate: " << stats.within << "/" << stats.cells << " cells within 2 SE\n";
      }
    }

    if (has(Engine::kinetics)) {
      const auto result = delay_kinetics(*cfg.kinetics, cfg.signals, grid);
      OccupancyTrace c = result.trace;
      tag(c, hash, seed, "kinetics");
      dir.write_trace("trace_kinetics.csv", c, TraceField::mean);
      const auto corollary = corollary_check(*cfg.kinetics, cfg.signals, gap, grid);
      json kj = to_json(corollary);
      kj["config_hash"] = hash;
      dir.write_json("corollary_report.json", kj);
      out << "kinetics corollary: " << (corollary.ok() ? "pass" : "FAIL") << "\n";
    }

    json manifest;
    manifest["version"] = kVersion;
    manifest["config_hash"] = hash;
    manifest["seed"] = seed ? json(*seed) : json(nullptr);
    json names = json::array();
    for (Engine e : engines) names.push_back(to_string(e));
    manifest["engines"] = names;
    manifest["injection_sojourn"] = cfg.injection == InjectionSojourn::included ? "included" : "excluded";
    manifest["gap"] = gap;
    manifest["grid"] = {{"dt", grid.dt}, {"horizon", grid.horizon()}};
    manifest["files"] = dir.files();
    dir.write_json("run.json", manifest);
    out << "wrote " << dir.files().size() << " files to " << dir.path().string() << "\n";
    return int{kExitOk};
  });
}

int cmd_sweep(const Options& options, std::ostream& out, std::ostream& err) {
  std::optional<ExperimentConfig> cfg_holder;
  std::pair<int, int> depths;
  const int setup = guarded(err, kExitInvalidConfig, [&] {
    cfg_holder = load_config(options.config);
    if (!cfg_holder->sweep) throw ConfigError("sweep: missing required field");
    depths = options.depths ? parse_depths(*options.depths)
                            : std::pair{cfg_holder->sweep->first_depth, cfg_holder->sweep->last_depth};
    if (depths.first < 1 || depths.second < depths.first) throw ConfigError("--depths: need 1 <= first <= last");
    const Network probe(chain(*cfg_holder->sweep, depths.first));
    const auto inputs = bind_inputs(probe, cfg_holder->signals);
    class_parameters(probe, cfg_holder->signals, effective_gap(*cfg_holder, inputs));
    return int{kExitOk};
  });
  if (setup != kExitOk) return setup;

  return guarded(err, kExitEngineFailure, [&] {
    const auto& cfg = *cfg_holder;
    const auto& sw = *cfg.sweep;
    const std::string hash = config_hash(cfg, cfg.seed, {Engine::analytic});
    OutputDir dir(options.out.value_or(std::filesystem::path(cfg.output)));

    std::ostringstream csv;
    csv << "# config_hash=" << hash << "\n# engine=sweep\n";
    csv << "N,sup_deviation,bound,g_abs\n";
    std::vector<double> xs, ys;
    json points = json::array();
    bool all_pass = true;
    ClassParameters params;
    for (int n = depths.first; n <= depths.second; ++n) {
      const Network net(chain(sw, n));
      const auto inputs = bind_inputs(net, cfg.signals);
      const double gap = effective_gap(cfg, inputs);
      const auto report = homeostasis_report(net, cfg.signals, gap, cfg.injection);
      params = report.parameters;
      const auto& tail = report.nodes.back();
      double g_abs = 0.0;
      const double sigma = inputs.front().signal.is_constant() ? 0.0 : inputs.front().signal.min_frequency();
      if (sigma > 0.0) {
        const auto g = spectral_response(net, sigma, cfg.injection);
        g_abs = std::abs(g.response(0, static_cast<Eigen::Index>(net.size() - 1)));
      }
      csv << n << ',' << format_number(tail.deviation) << ',' << format_number(tail.bound) << ','
          << format_number(g_abs) << '\n';
      xs.push_back(n);
      ys.push_back(tail.deviation);
      all_pass = all_pass && tail.pass;
      points.push_back({{"N", n}, {"sup_deviation", tail.deviation}, {"bound", tail.bound}, {"g_abs", g_abs},
                        {"pass", tail.pass}});
    }
    dir.write("sweep.csv", csv.str());
    const auto slope = log_slope(xs, ys);
    json sj;
    sj["config_hash"] = hash;
    sj["parameters"] = to_json(params);
    sj["log_attenuation"] = params.attenuation > 0.0 ? json(std::log(params.attenuation)) : json(nullptr);
    sj["fitted_log_slope"] = slope ? json(*slope) : json(nullptr);
    sj["points"] = points;
    sj["pass"] = all_pass;
    dir.write_json("sweep.json", sj);
    out << "sweep N=" << depths.first << ".." << depths.second << ": "
        << (all_pass ? "all within bound" : "bound VIOLATED");
    if (slope) out << ", slope " << short_number(*slope) << " vs log delta " << short_number(std::log(params.attenuation));
    out << "\n";
    return int{kExitOk};
  });
}

namespace {

// A dense reference (typically the analytic grid) read at the candidate's
// sample times by linear interpolation.
TraceTable interpolate_onto(const TraceTable& table, const std::vector<double>& times) {
  const auto& t = table.times;
  if (t.size() < 2 || times.empty() || times.front() < t.front() - 1e-9 || times.back() > t.back() + 1e-9) {
    throw ConfigError("reference times do not cover the candidate times");
  }
  TraceTable out{table.metadata, table.columns, times, {}};
  for (const auto& column : table.values) {
    std::vector<double> v(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto it = std::lower_bound(t.begin(), t.end(), times[k]);
      const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - t.begin()), 1, t.size() - 1);
      const double w = std::clamp((times[k] - t[hi - 1]) / (t[hi] - t[hi - 1]), 0.0, 1.0);
      v[k] = (1.0 - w) * column[hi - 1] + w * column[hi];
    }
    out.values.push_back(std::move(v));
  }
  return out;
}

}  // namespace

int cmd_compare(const Options& options, std::ostream& out, std::ostream& err) {
  return guarded(err, kExitEngineFailure, [&] {
    auto read = [](const std::filesystem::path& p) {
      std::ifstream in(p);
      if (!in) throw ConfigError(p.string() + ": cannot open file");
      try {
        return read_csv(in);
      } catch (const ConfigError& e) {
        throw ConfigError(p.string() + ": " + e.what());
      }
    };
    TraceTable ref = read(options.reference);
    const TraceTable cand = read(options.candidate);
    if (ref.times != cand.times) ref = interpolate_onto(ref, cand.times);
    std::optional<TraceTable> se;
    if (options.candidate_se) se = read(*options.candidate_se);
    AgreementStats stats;
    try {
      stats = compare_traces(ref, cand, se ? &*se : nullptr, options.k);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    const bool pass = se ? stats.fraction >= options.fraction
                         : stats.max_relative_difference <= options.relative_tolerance;
    json j = to_json(stats);
    j["mode"] = se ? "standard_error" : "relative";
    if (se) {
      j["k"] = options.k;
      j["required_fraction"] = options.fraction;
    } else {
      j["relative_tolerance"] = options.relative_tolerance;
    }
    j["pass"] = pass;
    if (options.out) {
      OutputDir dir(*options.out);
      dir.write_json("compare.json", j);
    }
    out << j.dump(2) << "\n";
    return pass ? int{kExitOk} : int{kExitGateFailure};
  });
}

}  // namespace homeostat::cli
