#include "homeostat/kinetics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <string>

#include "homeostat/error.hpp"
#include "homeostat/rng.hpp"
#include "product_weights.hpp"

namespace homeostat {

namespace {

using detail::memory_weights;
using detail::MemoryWeights;

std::size_t node_index(const std::vector<NodeId>& nodes, const NodeId& id, const std::string& what) {
  const auto it = std::find(nodes.begin(), nodes.end(), id);
  if (it == nodes.end()) throw InvalidArgument(what + " refers to undeclared node " + id.to_string());
  return static_cast<std::size_t>(it - nodes.begin());
}

void check_rate(double rate, const std::string& what) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw InvalidArgument(what + ": rate must be positive and finite");
  }
}

// Competing-clock routing shared by the Markov and delayed embeddings: every
// branch of node i is held Exponential(Lambda_i).
struct ClockRoute {
  NodeId to;
  double rate;
};

NetworkSpec competing_clocks(int compartments, int types, std::vector<NodeId> nodes,
                             const std::vector<std::vector<ClockRoute>>& out,
                             const std::vector<double>& exit_rates,
                             std::vector<InputBinding> inputs) {
  NetworkSpec spec;
  spec.compartments = compartments;
  spec.types = types;
  spec.inputs = std::move(inputs);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double total = exit_rates[i];
    for (const auto& r : out[i]) total += r.rate;
    if (!(total > 0.0)) {
      throw InvalidArgument("node " + nodes[i].to_string() +
                            " has total rate 0; a molecule there never leaves");
    }
    const auto hold = DelayDistribution::exponential(total);
    for (const auto& r : out[i]) spec.edges.push_back({nodes[i], r.to, r.rate / total, hold});
    if (exit_rates[i] > 0.0) spec.exits.push_back({nodes[i], exit_rates[i] / total, hold});
  }
  spec.nodes = std::move(nodes);
  return spec;
}

Eigen::VectorXd input_rate(std::size_t n, std::span<const BoundInput> inputs, double t) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& in : inputs) u(static_cast<Eigen::Index>(in.node)) += in.signal(t);
  return u;
}

double max_abs(const std::vector<std::vector<double>>& v) {
  double m = 0.0;
  for (const auto& row : v) {
    for (double x : row) m = std::max(m, std::abs(x));
  }
  return m;
}

// NaN-propagating: any NaN yields NaN so that comparisons against a
// tolerance fail.
double max_abs_difference(const std::vector<std::vector<double>>& a,
                          const std::vector<std::vector<double>>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < a[i].size(); ++k) {
      const double d = std::abs(a[i][k] - b[i][k]);
      if (std::isnan(d)) return d;
      m = std::max(m, d);
    }
  }
  return m;
}

std::vector<std::vector<double>> rk4_solve(const Eigen::MatrixXd& generator,
                                           std::span<const BoundInput> inputs,
                                           const Eigen::VectorXd& initial, const TimeGrid& grid,
                                           std::size_t substeps) {
  const auto n = static_cast<std::size_t>(initial.size());
  std::vector<std::vector<double>> out(n, std::vector<double>(grid.size(), 0.0));
  const double h = grid.dt / static_cast<double>(substeps);
  Eigen::VectorXd y = initial;
  auto rhs = [&](double t, const Eigen::VectorXd& m) -> Eigen::VectorXd {
    return input_rate(n, inputs, t) + generator * m;
  };
  for (std::size_t i = 0; i < n; ++i) out[i][0] = y(static_cast<Eigen::Index>(i));
  for (std::size_t m = 0; m < grid.steps; ++m) {
    for (std::size_t s = 0; s < substeps; ++s) {
      const double t = grid.at(m) + h * static_cast<double>(s);
      const Eigen::VectorXd k1 = rhs(t, y);
      const Eigen::VectorXd k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
      const Eigen::VectorXd k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
      const Eigen::VectorXd k4 = rhs(t + h, y + h * k3);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    for (std::size_t i = 0; i < n; ++i) out[i][m + 1] = y(static_cast<Eigen::Index>(i));
  }
  return out;
}

struct DelaySystem {
  std::size_t n = 0;
  Eigen::MatrixXd intra;  // intra(k, i) = lambda_ik, diagonal -Lambda_k
  struct Memory {
    std::size_t from;
    std::size_t to;
    double rate;
    DelayDistribution delay;
  };
  std::vector<Memory> memory;
  std::vector<BoundInput> inputs;
  Eigen::VectorXd initial;
};

DelaySystem delay_system(const KineticsSpec& spec, const SignalSet& signals) {
  check_kinetics(spec);
  DelaySystem sys;
  const auto nodes = spec.reactions.node_list();
  sys.n = nodes.size();
  const auto n = static_cast<Eigen::Index>(sys.n);
  sys.intra = spec.reactions.jump_matrix().transpose();
  Eigen::VectorXd total = spec.reactions.total_rates();
  for (const auto& t : spec.transport) {
    const std::size_t i = node_index(nodes, t.from, "transport");
    const std::size_t k = node_index(nodes, t.to, "transport");
    total(static_cast<Eigen::Index>(i)) += t.rate;
    sys.memory.push_back({i, k, t.rate, t.delay});
  }
  for (Eigen::Index k = 0; k < n; ++k) sys.intra(k, k) -= total(k);
  sys.inputs = bind_kinetics_inputs(spec, signals);
  const auto c0 = initial_vector(spec);
  sys.initial = Eigen::Map<const Eigen::VectorXd>(c0.data(), n);
  return sys;
}

// Trapezoid rule in time on the full system with substeps per grid step;
// the l = 0 memory weight is treated implicitly together with the local terms.
std::vector<std::vector<double>> trapezoid_solve(const DelaySystem& sys, const TimeGrid& grid,
                                                 std::size_t substeps) {
  const std::size_t n = sys.n;
  const auto en = static_cast<Eigen::Index>(n);
  const double h = grid.dt / static_cast<double>(substeps);
  const std::size_t total_steps = grid.steps * substeps;

  std::vector<MemoryWeights> weights;
  weights.reserve(sys.memory.size());
  for (const auto& mem : sys.memory) weights.push_back(memory_weights(mem.delay, h, total_steps));

  Eigen::MatrixXd jac = sys.intra;
  for (std::size_t e = 0; e < sys.memory.size(); ++e) {
    const auto& mem = sys.memory[e];
    jac(static_cast<Eigen::Index>(mem.to), static_cast<Eigen::Index>(mem.from)) += mem.rate * weights[e].point[0];
  }
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(en, en) - 0.5 * h * jac;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(lhs);

  // History of the memory sources only.
  std::vector<std::vector<double>> history(sys.memory.size());
  for (auto& hst : history) hst.reserve(total_steps + 1);

  auto explicit_memory = [&](std::size_t step) {
    // Memory at t_step without its l = 0 term; history holds indices < step.
    Eigen::VectorXd out = Eigen::VectorXd::Zero(en);
    if (step == 0) return out;
    for (std::size_t e = 0; e < sys.memory.size(); ++e) {
      const auto& hst = history[e];
      const auto& w = weights[e];
      double acc = hst[0] * w.up[step - 1];
      for (std::size_t l = 1; l < step; ++l) acc += hst[step - l] * w.point[l];
      out(static_cast<Eigen::Index>(sys.memory[e].to)) += sys.memory[e].rate * acc;
    }
    return out;
  };

  std::vector<std::vector<double>> out(n, std::vector<double>(grid.size(), 0.0));
  Eigen::VectorXd y = sys.initial;
  for (std::size_t i = 0; i < n; ++i) out[i][0] = y(static_cast<Eigen::Index>(i));
  for (std::size_t e = 0; e < sys.memory.size(); ++e) history[e].push_back(y(static_cast<Eigen::Index>(sys.memory[e].from)));

  // At t = 0 the memory integral vanishes.
  Eigen::VectorXd f_prev = input_rate(n, sys.inputs, 0.0) + sys.intra * y;
  for (std::size_t step = 0; step < total_steps; ++step) {
    const double t_next = h * static_cast<double>(step + 1);
    const Eigen::VectorXd u_next = input_rate(n, sys.inputs, t_next);
    const Eigen::VectorXd mem_next = explicit_memory(step + 1);
    const Eigen::VectorXd rhs = y + 0.5 * h * (f_prev + u_next + mem_next);
    y = lu.solve(rhs);
    f_prev = u_next + jac * y + mem_next;
    for (std::size_t e = 0; e < sys.memory.size(); ++e) {
      history[e].push_back(y(static_cast<Eigen::Index>(sys.memory[e].from)));
    }
    if ((step + 1) % substeps == 0) {
      const std::size_t m = (step + 1) / substeps;
      for (std::size_t i = 0; i < n; ++i) out[i][m] = y(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

OccupancyTrace kinetics_trace(const std::vector<NodeId>& nodes, const TimeGrid& grid,
                              std::vector<std::vector<double>> values) {
  OccupancyTrace trace;
  trace.provenance = Provenance::kinetics;
  trace.times = grid.times();
  trace.nodes = nodes;
  trace.mean = std::move(values);
  return trace;
}

std::vector<int> kinetics_distances(const KineticsSpec& spec, const std::vector<NodeId>& nodes) {
  std::vector<std::vector<std::size_t>> adj(nodes.size());
  for (const auto& r : spec.reactions.jumps) {
    adj[node_index(nodes, r.from, "reaction")].push_back(node_index(nodes, r.to, "reaction"));
  }
  for (const auto& t : spec.transport) {
    adj[node_index(nodes, t.from, "transport")].push_back(node_index(nodes, t.to, "transport"));
  }
  std::vector<int> dist(nodes.size(), kUnreachable);
  std::deque<std::size_t> queue;
  for (const auto& in : spec.inputs) {
    const std::size_t i = node_index(nodes, in.node, "input");
    if (dist[i] != 0) {
      dist[i] = 0;
      queue.push_back(i);
    }
  }
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    for (std::size_t k : adj[i]) {
      if (dist[k] == kUnreachable) {
        dist[k] = dist[i] + 1;
        queue.push_back(k);
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<NodeId> MarkovRates::node_list() const {
  if (!nodes.empty()) return nodes;
  std::vector<NodeId> all;
  for (int c = 1; c <= compartments; ++c) {
    for (int v = 1; v <= types; ++v) all.push_back({c, v});
  }
  return all;
}

Eigen::MatrixXd MarkovRates::jump_matrix() const {
  const auto list = node_list();
  const auto n = static_cast<Eigen::Index>(list.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (const auto& j : jumps) {
    check_rate(j.rate, "jump " + j.from.to_string() + " -> " + j.to.to_string());
    const auto a = static_cast<Eigen::Index>(node_index(list, j.from, "jump"));
    const auto b = static_cast<Eigen::Index>(node_index(list, j.to, "jump"));
    if (a == b) throw InvalidArgument("self jump at " + j.from.to_string());
    m(a, b) += j.rate;
  }
  return m;
}

Eigen::VectorXd MarkovRates::exit_vector() const {
  const auto list = node_list();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(list.size()));
  for (const auto& e : exits) {
    check_rate(e.rate, "exit at " + e.node.to_string());
    v(static_cast<Eigen::Index>(node_index(list, e.node, "exit"))) += e.rate;
  }
  return v;
}

Eigen::VectorXd MarkovRates::total_rates() const {
  return jump_matrix().rowwise().sum() + exit_vector();
}

NetworkSpec markov_to_semimarkov(const MarkovRates& rates, std::vector<InputBinding> inputs) {
  const auto nodes = rates.node_list();
  const Eigen::MatrixXd jumps = rates.jump_matrix();
  const Eigen::VectorXd exits = rates.exit_vector();
  std::vector<std::vector<ClockRoute>> out(nodes.size());
  std::vector<double> exit_rates(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const double r = jumps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (r > 0.0) out[i].push_back({nodes[k], r});
    }
    exit_rates[i] = exits(static_cast<Eigen::Index>(i));
  }
  return competing_clocks(rates.compartments, rates.types, nodes, out, exit_rates, std::move(inputs));
}

OccupancyTrace markov_mean_ode(const MarkovRates& rates, std::span<const BoundInput> inputs,
                               std::span<const double> initial, const TimeGrid& grid,
                               const OdeOptions& options) {
  const auto nodes = rates.node_list();
  const auto n = static_cast<Eigen::Index>(nodes.size());
  for (const auto& in : inputs) {
    if (in.node >= nodes.size()) throw InvalidArgument("input node index out of range");
  }
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(n);
  if (!initial.empty()) {
    if (initial.size() != nodes.size()) throw InvalidArgument("initial state size does not match node count");
    for (Eigen::Index i = 0; i < n; ++i) y0(i) = initial[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd total = rates.total_rates();
  Eigen::MatrixXd generator = rates.jump_matrix().transpose();
  for (Eigen::Index i = 0; i < n; ++i) generator(i, i) -= total(i);

  // Start where h * max Lambda <= 1, inside RK4's stability region.
  const double max_rate = n > 0 ? total.maxCoeff() : 0.0;
  std::size_t substeps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(grid.dt * max_rate)));
  auto coarse = rk4_solve(generator, inputs, y0, grid, substeps);
  for (std::size_t r = 0; r <= options.max_refinements; ++r) {
    auto fine = rk4_solve(generator, inputs, y0, grid, 2 * substeps);
    const double diff = max_abs_difference(coarse, fine);
    const double scale = max_abs(fine);
    substeps *= 2;
    if (diff <= options.tolerance * scale || (scale == 0.0 && diff == 0.0)) {
      auto trace = kinetics_trace(nodes, grid, std::move(fine));
      trace.metadata = {{"dt", format_number(grid.dt)},
                        {"horizon", format_number(grid.horizon())},
                        {"substeps", std::to_string(substeps)}};
      return trace;
    }
    coarse = std::move(fine);
  }
  throw ConvergenceError("Markov mean ODE did not reach relative tolerance " +
                         format_number(options.tolerance) + " after " +
                         std::to_string(options.max_refinements) + " step halvings");
}

void check_kinetics(const KineticsSpec& spec) {
  const auto& r = spec.reactions;
  if (r.compartments < 1 || r.types < 1) throw InvalidArgument("kinetics dimensions must be positive");
  const auto nodes = r.node_list();
  for (const auto& id : nodes) {
    if (id.compartment < 1 || id.compartment > r.compartments || id.type < 1 || id.type > r.types) {
      throw InvalidArgument("node " + id.to_string() + " is outside the declared dimensions");
    }
  }
  for (const auto& j : r.jumps) {
    node_index(nodes, j.from, "reaction");
    node_index(nodes, j.to, "reaction");
    check_rate(j.rate, "reaction " + j.from.to_string() + " -> " + j.to.to_string());
    if (j.from.compartment != j.to.compartment) {
      throw InvalidArgument("reaction " + j.from.to_string() + " -> " + j.to.to_string() +
                            " crosses compartments; use a transport edge");
    }
    if (j.from == j.to) throw InvalidArgument("self reaction at " + j.from.to_string());
  }
  for (const auto& e : r.exits) {
    node_index(nodes, e.node, "exit");
    check_rate(e.rate, "exit at " + e.node.to_string());
  }
  for (const auto& t : spec.transport) {
    node_index(nodes, t.from, "transport");
    node_index(nodes, t.to, "transport");
    check_rate(t.rate, "transport " + t.from.to_string() + " -> " + t.to.to_string());
    if (t.from.compartment == t.to.compartment) {
      throw InvalidArgument("transport " + t.from.to_string() + " -> " + t.to.to_string() +
                            " stays inside one compartment");
    }
    if (t.from.type != t.to.type) {
      throw InvalidArgument("transport " + t.from.to_string() + " -> " + t.to.to_string() +
                            " changes molecule type");
    }
  }
  for (const auto& [id, c] : spec.initial) {
    node_index(nodes, id, "initial state");
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw InvalidArgument("initial concentration at " + id.to_string() + " must be >= 0");
    }
  }
  for (const auto& in : spec.inputs) node_index(nodes, in.node, "input '" + in.signal + "'");
}

std::vector<double> initial_vector(const KineticsSpec& spec) {
  const auto nodes = spec.reactions.node_list();
  std::vector<double> c(nodes.size(), 0.0);
  for (const auto& [id, value] : spec.initial) c[node_index(nodes, id, "initial state")] += value;
  return c;
}

std::vector<BoundInput> bind_kinetics_inputs(const KineticsSpec& spec, const SignalSet& signals) {
  const auto nodes = spec.reactions.node_list();
  std::vector<BoundInput> out;
  for (const auto& in : spec.inputs) {
    const auto it = signals.find(in.signal);
    if (it == signals.end()) throw InvalidArgument("input references unknown signal '" + in.signal + "'");
    out.push_back({node_index(nodes, in.node, "input"), as_almost_periodic(it->second)});
  }
  return out;
}

DelayKineticsResult delay_kinetics(const KineticsSpec& spec, const SignalSet& signals,
                                   const TimeGrid& grid, const DelayKineticsOptions& options) {
  const DelaySystem sys = delay_system(spec, signals);
  const auto nodes = spec.reactions.node_list();
  std::size_t substeps = std::max<std::size_t>(1, options.initial_substeps);

  auto coarse = trapezoid_solve(sys, grid, substeps);
  std::vector<std::vector<double>> previous_extrapolant;
  auto extrapolate = [](const std::vector<std::vector<double>>& c, const std::vector<std::vector<double>>& f) {
    auto out = f;
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (std::size_t m = 0; m < f[i].size(); ++m) out[i][m] = (4.0 * f[i][m] - c[i][m]) / 3.0;
    }
    return out;
  };

  for (std::size_t r = 0; r < options.max_refinements; ++r) {
    auto fine = trapezoid_solve(sys, grid, 2 * substeps);
    substeps *= 2;
    auto extrapolant = extrapolate(coarse, fine);
    const double scale = max_abs(extrapolant);
    // Error of the finer trapezoid solve, which bounds the extrapolant's;
    // once two extrapolants exist their difference bounds the older one.
    double estimate = max_abs_difference(coarse, fine) / 3.0;
    if (!previous_extrapolant.empty()) {
      estimate = std::min(estimate, max_abs_difference(previous_extrapolant, extrapolant));
    }
    if (estimate <= options.tolerance * scale || (scale == 0.0 && estimate == 0.0)) {
      DelayKineticsResult result;
      result.substeps = substeps;
      result.error_estimate = estimate;
      const double floor = -options.clip_tolerance * std::max(1.0, scale);
      for (std::size_t i = 0; i < extrapolant.size(); ++i) {
        for (std::size_t m = 0; m < extrapolant[i].size(); ++m) {
          double& x = extrapolant[i][m];
          if (x >= 0.0) continue;
          if (x < floor) {
            throw ConvergenceError("delay kinetics unstable: concentration at " + nodes[i].to_string() +
                                   " reached " + format_number(x) + " at t = " + format_number(grid.at(m)));
          }
          x = 0.0;
          ++result.clipped;
        }
      }
      result.trace = kinetics_trace(nodes, grid, std::move(extrapolant));
      result.trace.metadata = {{"dt", format_number(grid.dt)},
                               {"horizon", format_number(grid.horizon())},
                               {"substeps", std::to_string(substeps)},
                               {"error_estimate", format_number(estimate)},
                               {"clipped", std::to_string(result.clipped)}};
      return result;
    }
    previous_extrapolant = std::move(extrapolant);
    coarse = std::move(fine);
  }
  throw ConvergenceError("delay kinetics did not reach relative tolerance " +
                         format_number(options.tolerance) + " with " + std::to_string(substeps) +
                         " sub-steps per grid step");
}

MarkovRates auxiliary_node_reduction(const KineticsSpec& spec) {
  check_kinetics(spec);
  MarkovRates out = spec.reactions;
  out.nodes = spec.reactions.node_list();
  out.compartments = spec.reactions.compartments + static_cast<int>(spec.transport.size());
  for (std::size_t e = 0; e < spec.transport.size(); ++e) {
    const auto& t = spec.transport[e];
    if (t.delay.family() != DelayDistribution::Family::exponential) {
      throw InvalidArgument("transport " + t.from.to_string() + " -> " + t.to.to_string() + " has a " +
                            t.delay.name() + " delay; only exponential transport reduces to Markov form");
    }
    const NodeId transit{spec.reactions.compartments + static_cast<int>(e) + 1, t.from.type};
    out.nodes.push_back(transit);
    out.jumps.push_back({t.from, transit, t.rate});
    out.jumps.push_back({transit, t.to, t.delay.rate()});
  }
  return out;
}

NetworkSpec kinetics_to_semimarkov(const KineticsSpec& spec) {
  check_kinetics(spec);
  auto nodes = spec.reactions.node_list();
  const std::size_t n = nodes.size();
  const Eigen::MatrixXd jumps = spec.reactions.jump_matrix();
  const Eigen::VectorXd exits = spec.reactions.exit_vector();
  std::vector<std::vector<ClockRoute>> out(n);
  std::vector<double> exit_rates(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double r = jumps(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (r > 0.0) out[i].push_back({nodes[k], r});
    }
    exit_rates[i] = exits(static_cast<Eigen::Index>(i));
  }
  std::vector<NodeId> transit;
  for (std::size_t e = 0; e < spec.transport.size(); ++e) {
    const auto& t = spec.transport[e];
    const NodeId x{spec.reactions.compartments + static_cast<int>(e) + 1, t.from.type};
    transit.push_back(x);
    out[node_index(nodes, t.from, "transport")].push_back({x, t.rate});
  }
  nodes.insert(nodes.end(), transit.begin(), transit.end());
  NetworkSpec net = competing_clocks(spec.reactions.compartments + static_cast<int>(transit.size()),
                                     spec.reactions.types, nodes, out, exit_rates, spec.inputs);
  for (std::size_t e = 0; e < transit.size(); ++e) {
    net.edges.push_back({transit[e], spec.transport[e].to, 1.0, spec.transport[e].delay});
  }
  return net;
}

std::vector<ScalingRow> scaling_convergence(const KineticsSpec& spec, const SignalSet& signals,
                                            std::span<const double> volumes, const SimConfig& config,
                                            const TimeGrid& grid) {
  config.check();
  if (config.sample_times.empty()) throw InvalidArgument("scaling convergence needs sample times");
  const auto kinetics = delay_kinetics(spec, signals, grid);
  const OccupancyTrace c = resample(kinetics.trace, config.sample_times);
  const Network net(kinetics_to_semimarkov(spec));
  const auto base = bind_inputs(net, signals);
  const auto c0 = initial_vector(spec);
  const std::size_t n = c0.size();

  std::vector<ScalingRow> rows;
  for (std::size_t k = 0; k < volumes.size(); ++k) {
    const double v = volumes[k];
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("volume must be positive");
    std::vector<BoundInput> scaled;
    for (const auto& in : base) scaled.push_back({in.node, in.signal.scaled(v)});
    SimConfig cfg = config;
    cfg.seed = stream_seed(config.seed, k);
    cfg.initial_counts.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const auto count = static_cast<std::size_t>(std::llround(c0[i] * v));
      if (count > 0) cfg.initial_counts.emplace_back(i, count);
    }
    const OccupancyTrace mc = simulate(net, scaled, cfg);
    ScalingRow row;
    row.volume = v;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t m = 0; m < c.time_count(); ++m) {
        row.error = std::max(row.error, std::abs(mc.mean[j][m] / v - c.mean[j][m]));
        row.standard_error = std::max(row.standard_error, mc.standard_error[j][m] / v);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

bool CorollaryReport::ok() const {
  return std::all_of(nodes.begin(), nodes.end(), [](const NodeCorollary& n) { return n.pass; });
}

CorollaryReport corollary_check(const KineticsSpec& spec, const SignalSet& signals, double gap,
                                const TimeGrid& grid) {
  check_kinetics(spec);
  const auto originals = spec.reactions.node_list();
  const std::size_t n = originals.size();
  const Network net(kinetics_to_semimarkov(spec));
  const auto inputs = bind_inputs(net, signals);

  CorollaryReport report;
  // C and the frequency check from the embedding; delta over effective hops,
  // Exponential(Lambda_i) for a reaction and Exponential(Lambda_i) * F for transport.
  report.parameters = class_parameters(net, inputs, gap);
  Eigen::VectorXd total = spec.reactions.total_rates();
  for (const auto& t : spec.transport) total(static_cast<Eigen::Index>(node_index(originals, t.from, "transport"))) += t.rate;
  double delta = 0.0;
  for (const auto& j : spec.reactions.jumps) {
    const auto hold = DelayDistribution::exponential(total(static_cast<Eigen::Index>(node_index(originals, j.from, "reaction"))));
    delta = std::max(delta, attenuation(hold, gap));
  }
  for (const auto& t : spec.transport) {
    const DelayDistribution hop[] = {
        DelayDistribution::exponential(total(static_cast<Eigen::Index>(node_index(originals, t.from, "transport")))),
        t.delay};
    delta = std::max(delta, attenuation(hop, gap));
  }
  if (!(delta < 1.0)) throw ClassConditionError("attenuation delta >= 1 over kinetics hops");
  const double scale = 2.0 / (gap * (1.0 - delta));
  report.parameters.attenuation = delta;
  report.parameters.bound_constant = scale * report.parameters.coefficient_sum;
  report.parameters.variance_bound_constant = scale * scale * report.parameters.variance_sum;

  report.window = sup_window(inputs);
  const LimitMean limit = limit_mean(net, inputs, report.window.times());
  const auto concentration = delay_kinetics(spec, signals, grid);
  const auto& c = concentration.trace;

  const std::size_t half = grid.steps / 2;
  const std::vector<double> gap_times{grid.at(half), grid.horizon()};
  const LimitMean at_gaps = limit_mean(net, inputs, gap_times);
  const double horizon = grid.horizon();
  report.late_window = std::min(0.5 * horizon, report.window.length > 0.0 ? report.window.length : 0.5 * horizon);
  const std::vector<int> dist = kinetics_distances(spec, originals);
  const double noise = 1e-9 + 2.0 * concentration.error_estimate;

  for (std::size_t j = 0; j < n; ++j) {
    NodeCorollary node;
    node.node = originals[j];
    node.distance = dist[j];
    node.steady_level = limit.steady(static_cast<Eigen::Index>(j));
    for (double x : limit.trace.mean[j]) node.limit_deviation = std::max(node.limit_deviation, std::abs(x - node.steady_level));
    for (std::size_t m = 0; m < grid.size(); ++m) {
      if (grid.at(m) >= horizon - report.late_window - 1e-12) {
        node.late_deviation = std::max(node.late_deviation, std::abs(c.mean[j][m] - node.steady_level));
      }
    }
    node.bound = report.parameters.deviation_bound(node.distance);
    node.gap_half = std::abs(c.mean[j][half] - at_gaps.trace.mean[j][0]);
    node.gap_end = std::abs(c.mean[j][grid.steps] - at_gaps.trace.mean[j][1]);
    const bool converging = node.gap_end < node.gap_half || node.gap_end <= noise;
    node.pass = node.limit_deviation <= node.bound + 1e-10 && converging;
    report.nodes.push_back(node);
  }
  return report;
}

}  // namespace homeostat
