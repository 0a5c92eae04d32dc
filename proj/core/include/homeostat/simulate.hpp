#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "homeostat/analytic.hpp"
#include "homeostat/network.hpp"
#include "homeostat/signals.hpp"
#include "homeostat/trace.hpp"

namespace homeostat {

struct SimConfig {
  double horizon = 10.0;
  std::size_t replications = 1000;
  std::uint64_t seed = 1;
  // Times at which occupancy is recorded; must lie in [0, horizon].
  std::vector<double> sample_times;
  std::size_t environment_replications = 10000;
  InjectionSojourn injection = InjectionSojourn::included;
  // 0 = HOMEOSTAT_THREADS, falling back to the hardware concurrency.
  unsigned threads = 0;
  // (node index, molecule count) present at t = 0, each starting a fresh sojourn.
  std::vector<std::pair<std::size_t, std::size_t>> initial_counts;

  void check() const;
};

unsigned resolve_threads(unsigned requested);

// Arrival epochs on [0, horizon] of a Poisson process with rate signal(t),
// by thinning a homogeneous stream of rate signal.envelope().
std::vector<double> thinned_arrivals(const AlmostPeriodicSignal& signal, double horizon,
                                     std::mt19937_64& rng);

// One residence of a molecule: at `node` during [start, end).
struct Residence {
  std::size_t node = 0;
  double start = 0.0;
  double end = 0.0;
  bool counted = true;
};

// Semi-Markov walk entering `node` at time `start`; stops after exit or once
// the walk passes `horizon`. The first residence is flagged uncounted when
// `count_first` is false.
std::vector<Residence> walk(const Network& network, std::size_t node, double start, double horizon,
                            bool count_first, std::mt19937_64& rng);

// Ensemble of independent replications of the open network started empty
// (plus config.initial_counts). Mean, variance and standard error per node
// and sample time. Replication r uses stream_seed(config.seed, r), so the
// output does not depend on the thread count.
OccupancyTrace simulate(const Network& network, std::span<const BoundInput> inputs,
                        const SimConfig& config);

// Empirical P_sj(t): fraction of config.replications walks injected at
// `source` at t = 0 that occupy j at each sample time.
OccupancyTrace single_walk_kernel(const Network& network, std::size_t source,
                                  const SimConfig& config);

// Conditional means l_j(t) across environment realizations.
struct EnsembleEstimate {
  std::vector<double> times;
  std::vector<NodeId> nodes;
  std::size_t realizations = 0;
  std::vector<std::vector<double>> mean;          // e_j(t), [node][time]
  std::vector<std::vector<double>> variance;      // D_j(t)
  std::vector<std::vector<double>> variance_se;   // standard error of D_j(t)
};

// For r = 1..config.environment_replications, each stationary input is
// realized with stream_seed(stream_seed(seed, r), binding) and l_j(t) is
// computed exactly from the kernel grid. Deterministic signals contribute
// their fixed conditional mean. Sample times default to {0.75 T, T} of the
// kernel horizon and must lie on the kernel grid's range.
EnsembleEstimate environment_ensemble(const Network& network, const SignalSet& signals,
                                      const SimConfig& config, const TransitionKernelGrid& kernel);

}  // namespace homeostat
