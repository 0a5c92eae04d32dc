#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "homeostat/analytic.hpp"
#include "homeostat/kinetics.hpp"
#include "homeostat/network.hpp"
#include "homeostat/serialization.hpp"
#include "homeostat/signals.hpp"

namespace homeostat::cli {

enum class Engine { analytic, simulate, kinetics, spectrum };

std::string to_string(Engine e);
// Throws ConfigError for unknown names.
Engine engine_from_string(const std::string& name);
// Comma-separated list, e.g. "analytic,simulate".
std::vector<Engine> parse_engine_list(const std::string& list);

struct GridSection {
  std::optional<double> dt;
  std::optional<double> horizon;
};

struct SimSection {
  std::size_t replications = 1000;
  std::size_t env_replications = 10000;
  std::optional<double> sample_step;
  std::vector<double> sample_times;
};

// Chain family for `sweep`: node k routes to k + 1 with probability 1, the
// last node exits; the input signal enters at the head.
struct SweepSection {
  int first_depth = 1;
  int last_depth = 6;
  DelayDistribution edge_delay = DelayDistribution::exponential(1.0);
  DelayDistribution exit_delay = DelayDistribution::exponential(1.0);
  std::string signal;
};

struct ExperimentConfig {
  json document;  // as parsed, used for hashing
  std::optional<NetworkSpec> network;
  std::optional<KineticsSpec> kinetics;
  SignalSet signals;
  std::optional<double> gap;
  GridSection grid;
  SimSection sim;
  std::vector<Engine> engines{Engine::analytic, Engine::spectrum};
  InjectionSojourn injection = InjectionSojourn::included;
  std::string output = "out";
  std::optional<std::uint64_t> seed;
  std::optional<SweepSection> sweep;

  bool has(Engine e) const;
  // The network itself, or the semi-Markov embedding of the kinetics.
  NetworkSpec network_spec() const;
};

// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const json& document);
// Parse errors carry line and column.
ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a of the canonical document with `output` removed and the effective
// seed and engine list substituted. Thread counts never enter the hash.
std::string config_hash(const ExperimentConfig& config, std::optional<std::uint64_t> seed,
                        const std::vector<Engine>& engines);

}  // namespace homeostat::cli
