#include "homeostat/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "homeostat/error.hpp"
#include "homeostat/rng.hpp"

namespace homeostat {

void SimConfig::check() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw InvalidArgument("simulation horizon must be > 0");
  if (replications < 1) throw InvalidArgument("simulation needs at least one replication");
  if (sample_times.empty()) throw InvalidArgument("simulation needs at least one sample time");
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) {
    throw InvalidArgument("sample times must be sorted");
  }
  if (sample_times.front() < 0.0 || sample_times.back() > horizon * (1.0 + 1e-12)) {
    throw InvalidArgument("sample times must lie within [0, horizon]");
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HOMEOSTAT_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::logic_error&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> thinned_arrivals(const AlmostPeriodicSignal& signal, double horizon,
                                     std::mt19937_64& rng) {
  std::vector<double> arrivals;
  const double level = signal.envelope();
  if (!(level > 0.0)) return arrivals;
  double t = 0.0;
  while (true) {
    t += -std::log1p(-uniform01(rng)) / level;
    if (t > horizon) break;
    if (uniform01(rng) * level <= signal(t)) arrivals.push_back(t);
  }
  return arrivals;
}

namespace {

template <typename Visit>
void walk_into(const Network& network, std::size_t node, double start, double horizon,
               bool count_first, std::mt19937_64& rng, Visit&& visit) {
  double t = start;
  std::size_t j = node;
  bool first = true;
  while (t <= horizon) {
    const auto routes = network.routes(j);
    const double u = uniform01(rng);
    std::size_t pick = routes.size() - 1;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < routes.size(); ++k) {
      acc += routes[k].prob;
      if (u < acc) {
        pick = k;
        break;
      }
    }
    const Route& route = routes[pick];
    const double tau = route.delay.sample(rng);
    visit(Residence{j, t, t + tau, first ? count_first : true});
    first = false;
    if (route.target == Network::exit) break;
    t += tau;
    j = route.target;
  }
}

// Occupancy counts of one replication as a difference array:
// cell [node * (G + 1) + g] marks entries and exits at sample index g.
class OccupancyTally {
 public:
  OccupancyTally(const std::vector<double>& times, std::size_t nodes)
      : times_(times), stride_(times.size() + 1), diff_(nodes * stride_, 0) {}

  void add(const Residence& r) {
    if (!r.counted) return;
    const auto lo = std::lower_bound(times_.begin(), times_.end(), r.start) - times_.begin();
    const auto hi = std::lower_bound(times_.begin(), times_.end(), r.end) - times_.begin();
    if (lo >= hi) return;
    diff_[r.node * stride_ + static_cast<std::size_t>(lo)] += 1;
    diff_[r.node * stride_ + static_cast<std::size_t>(hi)] -= 1;
  }

  // counts[node * G + g]
  void counts(std::vector<std::int32_t>& out) const {
    const std::size_t g_count = times_.size();
    const std::size_t nodes = diff_.size() / stride_;
    out.assign(nodes * g_count, 0);
    for (std::size_t j = 0; j < nodes; ++j) {
      std::int32_t running = 0;
      for (std::size_t g = 0; g < g_count; ++g) {
        running += diff_[j * stride_ + g];
        out[j * g_count + g] = running;
      }
    }
  }

 private:
  const std::vector<double>& times_;
  std::size_t stride_;
  std::vector<std::int32_t> diff_;
};

// Runs replications in fixed-size blocks; each block is filled in parallel and
// reduced in replication order, so sums are identical for any thread count.
template <typename Replicate>
void run_replications(std::size_t replications, std::size_t cells, unsigned threads,
                      Replicate&& replicate, std::vector<double>& sum, std::vector<double>& sum_sq) {
  constexpr std::size_t kBlock = 256;
  sum.assign(cells, 0.0);
  sum_sq.assign(cells, 0.0);
  std::vector<std::vector<std::int32_t>> block(kBlock);
  for (std::size_t begin = 0; begin < replications; begin += kBlock) {
    const std::size_t end = std::min(replications, begin + kBlock);
    const std::size_t count = end - begin;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    auto work = [&](unsigned w) {
      for (std::size_t r = begin + w; r < end; r += workers) replicate(r, block[r - begin]);
    };
    if (workers <= 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (std::size_t r = 0; r < count; ++r) {
      const auto& c = block[r];
      for (std::size_t k = 0; k < cells; ++k) {
        const double x = c[k];
        sum[k] += x;
        sum_sq[k] += x * x;
      }
    }
  }
}

OccupancyTrace summarize(const Network& network, const std::vector<double>& times, std::size_t reps,
                         const std::vector<double>& sum, const std::vector<double>& sum_sq) {
  OccupancyTrace trace;
  trace.provenance = Provenance::simulated;
  trace.times = times;
  trace.nodes.assign(network.nodes().begin(), network.nodes().end());
  trace.replications = reps;
  const std::size_t g_count = times.size();
  const double r = static_cast<double>(reps);
  trace.mean.assign(network.size(), std::vector<double>(g_count));
  trace.variance.assign(network.size(), std::vector<double>(g_count));
  trace.standard_error.assign(network.size(), std::vector<double>(g_count));
  for (std::size_t j = 0; j < network.size(); ++j) {
    for (std::size_t g = 0; g < g_count; ++g) {
      const std::size_t k = j * g_count + g;
      const double mean = sum[k] / r;
      const double var = reps > 1 ? std::max(0.0, (sum_sq[k] - r * mean * mean) / (r - 1.0)) : 0.0;
      trace.mean[j][g] = mean;
      trace.variance[j][g] = var;
      trace.standard_error[j][g] = std::sqrt(var / r);
    }
  }
  return trace;
}

}  // namespace

std::vector<Residence> walk(const Network& network, std::size_t node, double start, double horizon,
                            bool count_first, std::mt19937_64& rng) {
  std::vector<Residence> path;
  walk_into(network, node, start, horizon, count_first, rng,
            [&](const Residence& r) { path.push_back(r); });
  return path;
}

OccupancyTrace simulate(const Network& network, std::span<const BoundInput> inputs,
                        const SimConfig& config) {
  config.check();
  for (const auto& [node, count] : config.initial_counts) {
    if (node >= network.size()) throw InvalidArgument("initial count names an unknown node");
  }
  const std::size_t cells = network.size() * config.sample_times.size();
  const bool count_injection = config.injection == InjectionSojourn::included;

  auto replicate = [&](std::size_t r, std::vector<std::int32_t>& out) {
    std::mt19937_64 rng = make_stream(config.seed, r);
    OccupancyTally tally(config.sample_times, network.size());
    auto record = [&](const Residence& res) { tally.add(res); };
    for (const auto& [node, count] : config.initial_counts) {
      for (std::size_t c = 0; c < count; ++c) {
        walk_into(network, node, 0.0, config.horizon, true, rng, record);
      }
    }
    for (const auto& in : inputs) {
      for (double t : thinned_arrivals(in.signal, config.horizon, rng)) {
        walk_into(network, in.node, t, config.horizon, count_injection, rng, record);
      }
    }
    tally.counts(out);
  };

  std::vector<double> sum;
  std::vector<double> sum_sq;
  run_replications(config.replications, cells, resolve_threads(config.threads), replicate, sum, sum_sq);
  OccupancyTrace trace = summarize(network, config.sample_times, config.replications, sum, sum_sq);
  trace.metadata = {{"replications", std::to_string(config.replications)},
                    {"seed", std::to_string(config.seed)},
                    {"horizon", format_number(config.horizon)},
                    {"injection_sojourn", count_injection ? "included" : "excluded"}};
  return trace;
}

OccupancyTrace single_walk_kernel(const Network& network, std::size_t source,
                                  const SimConfig& config) {
  config.check();
  if (source >= network.size()) throw InvalidArgument("single_walk_kernel: unknown source node");
  const std::size_t cells = network.size() * config.sample_times.size();
  const bool count_injection = config.injection == InjectionSojourn::included;

  auto replicate = [&](std::size_t r, std::vector<std::int32_t>& out) {
    std::mt19937_64 rng = make_stream(config.seed, r);
    OccupancyTally tally(config.sample_times, network.size());
    walk_into(network, source, 0.0, config.horizon, count_injection, rng,
              [&](const Residence& res) { tally.add(res); });
    tally.counts(out);
  };

  std::vector<double> sum;
  std::vector<double> sum_sq;
  run_replications(config.replications, cells, resolve_threads(config.threads), replicate, sum, sum_sq);
  OccupancyTrace trace = summarize(network, config.sample_times, config.replications, sum, sum_sq);
  trace.metadata = {{"walks", std::to_string(config.replications)},
                    {"seed", std::to_string(config.seed)},
                    {"source", network.node(source).to_string()}};
  return trace;
}

EnsembleEstimate environment_ensemble(const Network& network, const SignalSet& signals,
                                      const SimConfig& config, const TransitionKernelGrid& kernel) {
  const TimeGrid& grid = kernel.grid;
  std::vector<double> times = config.sample_times;
  if (times.empty()) times = {0.75 * grid.horizon(), grid.horizon()};
  std::vector<std::size_t> index;
  for (double t : times) {
    if (t < 0.0 || t > grid.horizon() * (1.0 + 1e-12)) {
      throw InvalidArgument("ensemble sample time outside the kernel horizon");
    }
    index.push_back(static_cast<std::size_t>(std::llround(t / grid.dt)));
  }
  const std::size_t reps = config.environment_replications;
  if (reps < 2) throw InvalidArgument("environment ensemble needs at least two realizations");

  const std::size_t n = network.size();
  const std::size_t g_count = times.size();
  // Realization-independent part of l_j(t), and per-harmonic responses
  // int_0^t exp(i sigma (t - s)) P_ij(s) ds for every stationary binding.
  std::vector<double> fixed(n * g_count, 0.0);
  struct Channel {
    std::size_t binding = 0;
    const StationaryEnvironment* env = nullptr;
    std::vector<std::vector<std::complex<double>>> response;  // [harmonic][j * G + g]
  };
  std::vector<Channel> channels;

  const auto& bindings = network.spec().inputs;
  for (std::size_t b = 0; b < bindings.size(); ++b) {
    const auto it = signals.find(bindings[b].signal);
    if (it == signals.end()) {
      throw InvalidArgument("input references unknown signal '" + bindings[b].signal + "'");
    }
    const std::size_t i = network.index_of(bindings[b].node);
    if (const auto* ap = std::get_if<AlmostPeriodicSignal>(&it->second)) {
      for (std::size_t j = 0; j < n; ++j) {
        const auto& p = kernel.occupancy_of(i, j);
        for (std::size_t g = 0; g < g_count; ++g) {
          const std::size_t m = index[g];
          double s = 0.0;
          for (std::size_t l = 0; l <= m; ++l) {
            const double w = (l == 0 || l == m) ? 0.5 : 1.0;
            s += w * (*ap)(grid.at(m - l)) * p[l];
          }
          fixed[j * g_count + g] += m == 0 ? 0.0 : s * grid.dt;
        }
      }
      continue;
    }
    const auto& env = std::get<StationaryEnvironment>(it->second);
    Channel ch;
    ch.binding = b;
    ch.env = &env;
    for (const auto& h : env.harmonics()) {
      std::vector<std::complex<double>> resp(n * g_count, 0.0);
      for (std::size_t j = 0; j < n; ++j) {
        const auto& p = kernel.occupancy_of(i, j);
        for (std::size_t g = 0; g < g_count; ++g) {
          const std::size_t m = index[g];
          if (m == 0) continue;
          std::complex<double> s = 0.0;
          for (std::size_t l = 0; l <= m; ++l) {
            const double w = (l == 0 || l == m) ? 0.5 : 1.0;
            s += w * p[l] * std::polar(1.0, h.frequency * grid.at(m - l));
          }
          resp[j * g_count + g] = s * grid.dt;
        }
      }
      ch.response.push_back(std::move(resp));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const std::vector<double> running = cumulative_integral(kernel.occupancy_of(i, j), grid.dt);
      for (std::size_t g = 0; g < g_count; ++g) fixed[j * g_count + g] += env.mean() * running[index[g]];
    }
    channels.push_back(std::move(ch));
  }

  std::vector<std::vector<double>> samples(n * g_count, std::vector<double>(reps));
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t realization_seed = stream_seed(config.seed, r);
    std::vector<double> value = fixed;
    for (const auto& ch : channels) {
      const AlmostPeriodicSignal sig = realize(*ch.env, stream_seed(realization_seed, ch.binding));
      const auto terms = sig.terms();
      for (std::size_t k = 0; k < terms.size(); ++k) {
        for (std::size_t c = 0; c < value.size(); ++c) {
          value[c] += 2.0 * std::real(terms[k].coefficient * ch.response[k][c]);
        }
      }
    }
    for (std::size_t c = 0; c < value.size(); ++c) samples[c][r] = value[c];
  }

  EnsembleEstimate est;
  est.times = times;
  est.nodes.assign(network.nodes().begin(), network.nodes().end());
  est.realizations = reps;
  est.mean.assign(n, std::vector<double>(g_count));
  est.variance.assign(n, std::vector<double>(g_count));
  est.variance_se.assign(n, std::vector<double>(g_count));
  const double rd = static_cast<double>(reps);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t g = 0; g < g_count; ++g) {
      const auto& x = samples[j * g_count + g];
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= rd;
      double ss = 0.0;
      double ss2 = 0.0;
      for (double v : x) {
        const double d2 = (v - mean) * (v - mean);
        ss += d2;
        ss2 += d2 * d2;
      }
      const double var = ss / (rd - 1.0);
      const double m2 = ss / rd;
      est.mean[j][g] = mean;
      est.variance[j][g] = var;
      est.variance_se[j][g] = std::sqrt(std::max(0.0, ss2 / rd - m2 * m2) / rd);
    }
  }
  return est;
}

}  // namespace homeostat
