#include "homeostat/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "homeostat/error.hpp"

namespace homeostat {

std::string NodeId::to_string() const {
  return "(" + std::to_string(compartment) + "," + std::to_string(type) + ")";
}

std::vector<NodeId> NetworkSpec::node_list() const {
  if (!nodes.empty()) return nodes;
  std::vector<NodeId> all;
  for (int c = 1; c <= compartments; ++c) {
    for (int v = 1; v <= types; ++v) all.push_back({c, v});
  }
  return all;
}

bool ValidationReport::ok() const {
  return std::none_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) {
    return d.severity == Diagnostic::Severity::error;
  });
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (const auto& d : diagnostics) {
    out << (d.severity == Diagnostic::Severity::error ? "error" : "warning");
    if (d.node) out << " at node " << d.node->to_string();
    out << ": " << d.message << '\n';
  }
  return out.str();
}

namespace {

double max_abs_eigenvalue(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

ValidationReport validate(const NetworkSpec& spec) {
  ValidationReport report;
  auto error = [&](std::optional<NodeId> node, std::string msg) {
    report.diagnostics.push_back({Diagnostic::Severity::error, node, std::move(msg)});
  };
  auto warning = [&](std::optional<NodeId> node, std::string msg) {
    report.diagnostics.push_back({Diagnostic::Severity::warning, node, std::move(msg)});
  };

  if (spec.compartments < 1 || spec.types < 1) {
    error(std::nullopt, "dimensions must be positive");
    return report;
  }

  const std::vector<NodeId> nodes = spec.node_list();
  std::map<NodeId, std::size_t> index;
  for (const auto& n : nodes) {
    if (n.compartment < 1 || n.compartment > spec.compartments || n.type < 1 ||
        n.type > spec.types) {
      error(n, "node outside declared dimensions");
      continue;
    }
    if (!index.emplace(n, index.size()).second) error(n, "duplicate node");
  }
  if (index.empty()) {
    error(std::nullopt, "network has no nodes");
    return report;
  }

  const std::size_t n = index.size();
  Eigen::MatrixXd routing = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> row_sum(n, 0.0);
  std::vector<std::vector<std::size_t>> successors(n);
  bool well_formed = true;
  auto valid_prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };

  std::set<std::pair<std::size_t, std::size_t>> seen_edges;
  for (const auto& e : spec.edges) {
    const auto from = index.find(e.from);
    const auto to = index.find(e.to);
    if (from == index.end() || to == index.end()) {
      error(e.from, "edge " + e.from.to_string() + "->" + e.to.to_string() +
                        " references an undeclared node");
      well_formed = false;
      continue;
    }
    if (!valid_prob(e.prob)) {
      error(e.from, "edge probability outside [0,1]");
      well_formed = false;
      continue;
    }
    if (e.prob == 0.0) {
      error(e.from, "edge " + e.from.to_string() + "->" + e.to.to_string() +
                        " has zero probability; edges exist only where p > 0");
      continue;
    }
    if (!seen_edges.emplace(from->second, to->second).second) {
      error(e.from, "duplicate edge to " + e.to.to_string());
      well_formed = false;
      continue;
    }
    routing(from->second, to->second) = e.prob;
    row_sum[from->second] += e.prob;
    successors[from->second].push_back(to->second);
  }

  std::set<std::size_t> seen_exits;
  for (const auto& x : spec.exits) {
    const auto it = index.find(x.node);
    if (it == index.end()) {
      error(x.node, "exit references an undeclared node");
      continue;
    }
    if (!valid_prob(x.prob)) {
      error(x.node, "exit probability outside [0,1]");
      well_formed = false;
      continue;
    }
    if (!seen_exits.insert(it->second).second) {
      error(x.node, "duplicate exit entry");
      continue;
    }
    row_sum[it->second] += x.prob;
  }

  for (const auto& [id, i] : index) {
    if (std::abs(row_sum[i] - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg.precision(15);
      msg << "routing and exit probabilities sum to " << row_sum[i] << ", expected 1";
      error(id, msg.str());
    }
  }

  if (well_formed) {
    report.spectral_radius = max_abs_eigenvalue(routing);
    if (!(report.spectral_radius < 1.0 - kRowSumTolerance)) {
      std::ostringstream msg;
      msg.precision(15);
      msg << "routing matrix has spectral radius " << report.spectral_radius
          << " >= 1; expected visit counts b(i,j) diverge";
      error(std::nullopt, msg.str());
    }
  }

  std::vector<bool> reached(n, false);
  std::deque<std::size_t> frontier;
  for (const auto& in : spec.inputs) {
    const auto it = index.find(in.node);
    if (it == index.end()) {
      error(in.node, "input '" + in.signal + "' is bound to an undeclared node");
      continue;
    }
    if (!reached[it->second]) {
      reached[it->second] = true;
      frontier.push_back(it->second);
    }
  }
  if (spec.inputs.empty()) warning(std::nullopt, "network has no input nodes");
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop_front();
    for (std::size_t k : successors[i]) {
      if (!reached[k]) {
        reached[k] = true;
        frontier.push_back(k);
      }
    }
  }
  if (!spec.inputs.empty()) {
    for (const auto& [id, i] : index) {
      if (!reached[i]) warning(id, "node is unreachable from the input set");
    }
  }
  return report;
}

Network::Network(NetworkSpec spec) : spec_(std::move(spec)), report_(validate(spec_)) {
  if (!report_.ok()) throw InvalidNetwork("invalid network:\n" + report_.summary());
  nodes_ = spec_.node_list();
  const std::size_t n = nodes_.size();
  routes_.resize(n);
  routing_ = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : spec_.edges) {
    const std::size_t i = index_of(e.from);
    const std::size_t k = index_of(e.to);
    routes_[i].push_back({k, e.prob, e.delay});
    routing_(i, k) = e.prob;
  }
  for (const auto& x : spec_.exits) {
    if (x.prob > 0.0) routes_[index_of(x.node)].push_back({exit, x.prob, x.delay});
  }
  for (const auto& in : spec_.inputs) input_nodes_.push_back(index_of(in.node));
  std::sort(input_nodes_.begin(), input_nodes_.end());
  input_nodes_.erase(std::unique(input_nodes_.begin(), input_nodes_.end()), input_nodes_.end());
}

std::optional<std::size_t> Network::find(const NodeId& id) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), id);
  if (it == nodes_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::size_t Network::index_of(const NodeId& id) const {
  if (auto i = find(id)) return *i;
  throw InvalidArgument("node " + id.to_string() + " is not part of the network");
}

double Network::exit_probability(std::size_t i) const {
  double p = 0.0;
  for (const auto& r : routes(i)) {
    if (r.target == exit) p += r.prob;
  }
  return p;
}

bool Network::is_input(std::size_t i) const {
  return std::binary_search(input_nodes_.begin(), input_nodes_.end(), i);
}

SojournMixture::SojournMixture(const Network& network, std::size_t node) {
  for (const auto& r : network.routes(node)) {
    branches_.emplace_back(r.prob, r.delay);
    mean_ += r.prob * r.delay.mean();
  }
}

double SojournMixture::cdf(double t) const {
  double f = 0.0;
  for (const auto& [p, d] : branches_) f += p * d.cdf(t);
  return f;
}

double SojournMixture::survival(double t) const {
  double s = 0.0;
  for (const auto& [p, d] : branches_) s += p * d.survival(t);
  return s;
}

double SojournMixture::pdf(double t) const {
  double f = 0.0;
  for (const auto& [p, d] : branches_) f += p * d.pdf(t);
  return f;
}

std::complex<double> SojournMixture::characteristic(double sigma) const {
  std::complex<double> psi = 0.0;
  for (const auto& [p, d] : branches_) psi += p * d.characteristic(sigma);
  return psi;
}

std::complex<double> SojournMixture::survival_transform(double sigma) const {
  std::complex<double> g = 0.0;
  for (const auto& [p, d] : branches_) g += p * d.survival_transform(sigma);
  return g;
}

Eigen::MatrixXd fundamental_matrix(const Network& network) {
  const auto& p = network.routing();
  const Eigen::Index n = p.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) - p);
  if (!lu.isInvertible() || !(network.spectral_radius() < 1.0)) {
    throw NonTransientError("I - P is singular; the walk is not transient");
  }
  return lu.solve(p);
}

double mean_sojourn(const Network& network, std::size_t node) {
  return SojournMixture(network, node).mean();
}

Eigen::VectorXd steady_levels(const Network& network, const Eigen::VectorXd& mean_rates,
                              InjectionSojourn injection) {
  const auto n = static_cast<Eigen::Index>(network.size());
  if (mean_rates.size() != n) throw InvalidArgument("mean_rates must have one entry per node");
  Eigen::MatrixXd visits = fundamental_matrix(network);
  if (injection == InjectionSojourn::included) visits += Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd d = visits.transpose() * mean_rates;
  for (Eigen::Index j = 0; j < n; ++j) d(j) *= mean_sojourn(network, static_cast<std::size_t>(j));
  return d;
}

std::vector<int> input_distances(const Network& network) {
  std::vector<int> dist(network.size(), kUnreachable);
  std::deque<std::size_t> frontier;
  for (std::size_t i : network.input_nodes()) {
    dist[i] = 0;
    frontier.push_back(i);
  }
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop_front();
    for (const auto& r : network.routes(i)) {
      if (r.target == Network::exit || dist[r.target] != kUnreachable) continue;
      dist[r.target] = dist[i] + 1;
      frontier.push_back(r.target);
    }
  }
  return dist;
}

int input_distance(const Network& network, std::size_t node) {
  return input_distances(network).at(node);
}

std::vector<BoundInput> bind_inputs(const Network& network, const SignalSet& signals) {
  std::vector<BoundInput> bound;
  for (const auto& in : network.spec().inputs) {
    const auto it = signals.find(in.signal);
    if (it == signals.end()) {
      throw InvalidArgument("input at node " + in.node.to_string() + " references unknown signal '" +
                            in.signal + "'");
    }
    bound.push_back({network.index_of(in.node), as_almost_periodic(it->second)});
  }
  return bound;
}

Eigen::VectorXd mean_input_rates(const Network& network, std::span<const BoundInput> inputs) {
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(network.size()));
  for (const auto& in : inputs) rates(static_cast<Eigen::Index>(in.node)) += in.signal.mean();
  return rates;
}

Eigen::VectorXd mean_input_rates(const Network& network, const SignalSet& signals) {
  return mean_input_rates(network, bind_inputs(network, signals));
}

double ClassParameters::deviation_bound(int distance) const {
  if (distance == kUnreachable) return 0.0;
  return bound_constant * std::pow(attenuation, distance);
}

double ClassParameters::variance_bound(int distance) const {
  if (distance == kUnreachable) return 0.0;
  return variance_bound_constant * std::pow(attenuation, 2 * distance);
}

namespace {

void check_frequency(double sigma, double gap, const std::string& where) {
  if (sigma < gap) {
    std::ostringstream msg;
    msg << "signal " << where << " has frequency " << sigma << " inside the gap (0, " << gap
        << ")";
    throw ClassConditionError(msg.str());
  }
}

ClassParameters finish_parameters(const Network& network, double gap, double c, double c_mean,
                                  double variance) {
  if (!(gap > 0.0) || !std::isfinite(gap)) throw InvalidArgument("spectral gap a must be > 0");
  ClassParameters params;
  params.gap = gap;
  params.coefficient_sum = c;
  params.coefficient_sum_with_mean = c_mean;
  params.variance_sum = variance;
  double delta = 0.0;
  for (const auto& e : network.spec().edges) delta = std::max(delta, attenuation(e.delay, gap));
  if (!(delta < 1.0)) {
    throw ClassConditionError("attenuation delta >= 1: some travel time has |psi| = 1 at |sigma| >= a");
  }
  params.attenuation = delta;
  const double scale = 2.0 / (gap * (1.0 - delta));
  params.bound_constant = scale * c;
  params.variance_bound_constant = scale * scale * variance;
  return params;
}

}  // namespace

ClassParameters class_parameters(const Network& network, std::span<const BoundInput> inputs,
                                 double gap) {
  double c = 0.0;
  double c_mean = 0.0;
  for (const auto& in : inputs) {
    for (const auto& term : in.signal.terms()) {
      check_frequency(term.frequency, gap, "at node " + network.node(in.node).to_string());
    }
    c += in.signal.coefficient_sum();
    c_mean += in.signal.coefficient_sum(true);
  }
  return finish_parameters(network, gap, c, c_mean, 0.0);
}

ClassParameters class_parameters(const Network& network, const SignalSet& signals, double gap) {
  double c = 0.0;
  double c_mean = 0.0;
  double variance = 0.0;
  for (const auto& in : network.spec().inputs) {
    const auto it = signals.find(in.signal);
    if (it == signals.end()) {
      throw InvalidArgument("input references unknown signal '" + in.signal + "'");
    }
    if (const auto* env = std::get_if<StationaryEnvironment>(&it->second)) {
      for (const auto& h : env->harmonics()) check_frequency(h.frequency, gap, "'" + in.signal + "'");
      double amp = 0.0;
      for (const auto& h : env->harmonics()) amp += h.amplitude;
      c += amp;
      c_mean += amp + env->mean();
      variance += env->variance();
    } else {
      const auto& ap = std::get<AlmostPeriodicSignal>(it->second);
      for (const auto& term : ap.terms()) check_frequency(term.frequency, gap, "'" + in.signal + "'");
      c += ap.coefficient_sum();
      c_mean += ap.coefficient_sum(true);
    }
  }
  return finish_parameters(network, gap, c, c_mean, variance);
}

}  // namespace homeostat
