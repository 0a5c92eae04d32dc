#pragma once

#include <compare>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "homeostat/delay.hpp"
#include "homeostat/signals.hpp"

namespace homeostat {

// Vertex (compartment, molecule type), both 1-based.
struct NodeId {
  int compartment = 1;
  int type = 1;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
  std::string to_string() const;
};

struct Edge {
  NodeId from;
  NodeId to;
  double prob = 0.0;
  DelayDistribution delay = DelayDistribution::exponential(1.0);
};

// Departure from the network; the exit transit is part of the node's sojourn.
struct ExitRoute {
  NodeId node;
  double prob = 0.0;
  DelayDistribution delay = DelayDistribution::exponential(1.0);
};

struct InputBinding {
  NodeId node;
  std::string signal;
};

struct NetworkSpec {
  int compartments = 0;
  int types = 0;
  // Explicit vertex list; empty means every (compartment, type) pair.
  std::vector<NodeId> nodes;
  std::vector<Edge> edges;
  std::vector<ExitRoute> exits;
  std::vector<InputBinding> inputs;

  std::vector<NodeId> node_list() const;
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::optional<NodeId> node;
  std::string message;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;
  // Spectral radius of the routing matrix; NaN when it could not be formed.
  double spectral_radius = std::numeric_limits<double>::quiet_NaN();

  bool ok() const;
  std::string summary() const;
};

inline constexpr double kRowSumTolerance = 1e-12;

ValidationReport validate(const NetworkSpec& spec);

// One outgoing branch of a node; target == Network::exit marks departure.
struct Route {
  std::size_t target = 0;
  double prob = 0.0;
  DelayDistribution delay = DelayDistribution::exponential(1.0);
};

// A validated, indexed network. Immutable after construction.
class Network {
 public:
  static constexpr std::size_t exit = std::numeric_limits<std::size_t>::max();

  // Throws InvalidNetwork when validate() reports an error.
  explicit Network(NetworkSpec spec);

  std::size_t size() const noexcept { return nodes_.size(); }
  const NodeId& node(std::size_t i) const { return nodes_.at(i); }
  std::span<const NodeId> nodes() const noexcept { return nodes_; }
  std::optional<std::size_t> find(const NodeId& id) const;
  std::size_t index_of(const NodeId& id) const;

  // Outgoing branches of node i, edges first (in spec order) then the exit.
  std::span<const Route> routes(std::size_t i) const { return routes_.at(i); }
  const Eigen::MatrixXd& routing() const noexcept { return routing_; }
  double exit_probability(std::size_t i) const;
  double spectral_radius() const noexcept { return report_.spectral_radius; }

  // Sorted, distinct indices of nodes bound to an input signal.
  std::span<const std::size_t> input_nodes() const noexcept { return input_nodes_; }
  bool is_input(std::size_t i) const;

  const NetworkSpec& spec() const noexcept { return spec_; }
  const ValidationReport& report() const noexcept { return report_; }

 private:
  NetworkSpec spec_;
  ValidationReport report_;
  std::vector<NodeId> nodes_;
  std::vector<std::vector<Route>> routes_;
  Eigen::MatrixXd routing_;
  std::vector<std::size_t> input_nodes_;
};

// Residence-time distribution at a node:
//   F_j = sum_k p_jk F_jk + p_j0 F_j0.
class SojournMixture {
 public:
  SojournMixture(const Network& network, std::size_t node);

  double cdf(double t) const;
  double survival(double t) const;
  double pdf(double t) const;
  double mean() const noexcept { return mean_; }
  std::complex<double> characteristic(double sigma) const;
  // (1 - psi_j(-sigma)) / (i sigma), finite at sigma = 0 where it equals mean().
  std::complex<double> survival_transform(double sigma) const;

 private:
  std::vector<std::pair<double, DelayDistribution>> branches_;
  double mean_ = 0.0;
};

// Whether the walk's first residence (at the injection node, before any hop)
// contributes to occupancy.
enum class InjectionSojourn { included, excluded };

// B = sum_{n >= 1} P^n = (I - P)^{-1} P.
Eigen::MatrixXd fundamental_matrix(const Network& network);

double mean_sojourn(const Network& network, std::size_t node);

// d_j = sum_i rate_i * (b(i, j) + [i == j and injection included]) * mu_j,
// with mean_rates indexed by node.
Eigen::VectorXd steady_levels(const Network& network, const Eigen::VectorXd& mean_rates,
                              InjectionSojourn injection = InjectionSojourn::included);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

// Directed hop count from the nearest input node; kUnreachable if none.
std::vector<int> input_distances(const Network& network);
int input_distance(const Network& network, std::size_t node);

// A signal resolved onto a node index; environments are realized by their seed.
struct BoundInput {
  std::size_t node = 0;
  AlmostPeriodicSignal signal;
};

// Throws InvalidArgument naming any binding whose signal id is missing.
std::vector<BoundInput> bind_inputs(const Network& network, const SignalSet& signals);

// Per-node mean input rate c0, summed over bindings.
Eigen::VectorXd mean_input_rates(const Network& network, const SignalSet& signals);
Eigen::VectorXd mean_input_rates(const Network& network, std::span<const BoundInput> inputs);

struct ClassParameters {
  double gap = 0.0;                    // a
  double coefficient_sum = 0.0;        // C, oscillatory terms only
  double coefficient_sum_with_mean = 0.0;
  double attenuation = 0.0;            // delta
  double bound_constant = 0.0;         // B = 2C / (a (1 - delta))
  double variance_sum = 0.0;           // total spectral mass of environments
  double variance_bound_constant = 0.0;  // (2 / (a (1 - delta)))^2 * variance_sum

  // B * delta^distance (0 for unreachable nodes).
  double deviation_bound(int distance) const;
  double variance_bound(int distance) const;
};

// Throws ClassConditionError when a signal frequency lies in (0, a) or delta >= 1.
ClassParameters class_parameters(const Network& network, const SignalSet& signals, double gap);
ClassParameters class_parameters(const Network& network, std::span<const BoundInput> inputs,
                                 double gap);

}  // namespace homeostat
