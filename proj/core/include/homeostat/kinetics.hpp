#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "homeostat/analytic.hpp"
#include "homeostat/network.hpp"
#include "homeostat/simulate.hpp"
#include "homeostat/trace.hpp"

namespace homeostat {

struct RateEdge {
  NodeId from;
  NodeId to;
  double rate = 0.0;
};

struct ExitRate {
  NodeId node;
  double rate = 0.0;
};

// Markov jump rates lambda_ij and exit rates lambda_i0 of a molecule.
struct MarkovRates {
  int compartments = 0;
  int types = 0;
  std::vector<NodeId> nodes;  // empty means every (compartment, type) pair
  std::vector<RateEdge> jumps;
  std::vector<ExitRate> exits;

  std::vector<NodeId> node_list() const;
  // [from][to] jump rates and per-node exit rates in node_list() order.
  Eigen::MatrixXd jump_matrix() const;
  Eigen::VectorXd exit_vector() const;
  // Lambda_i = sum_j lambda_ij + lambda_i0.
  Eigen::VectorXd total_rates() const;
};

// Competing exponential clocks as routing: p_ij = lambda_ij / Lambda_i,
// p_i0 = lambda_i0 / Lambda_i, every branch delayed by Exponential(Lambda_i).
// Throws InvalidArgument if some Lambda_i is zero.
NetworkSpec markov_to_semimarkov(const MarkovRates& rates, std::vector<InputBinding> inputs = {});

struct OdeOptions {
  double tolerance = 1e-8;       // relative change allowed when halving the step
  std::size_t max_refinements = 12;
};

// dm_i/dt = lambda_i(t) + sum_j (m_j lambda_ji - m_i lambda_ij) - m_i lambda_i0
// by fixed-step RK4 with sub-steps halved until the output on the grid
// changes by less than options.tolerance relative to its peak. Input node
// indices refer to rates.node_list().
OccupancyTrace markov_mean_ode(const MarkovRates& rates, std::span<const BoundInput> inputs,
                               std::span<const double> initial, const TimeGrid& grid,
                               const OdeOptions& options = {});

// Inter-compartment move (alpha, v) -> (beta, v) at rate lambda_ik whose
// molecules are absent from both compartments for a time distributed as `delay`.
struct TransportEdge {
  NodeId from;
  NodeId to;
  double rate = 0.0;
  DelayDistribution delay = DelayDistribution::exponential(1.0);
};

struct KineticsSpec {
  MarkovRates reactions;               // intra-compartment only
  std::vector<TransportEdge> transport;
  std::vector<InputBinding> inputs;    // scaled densities a_i(t)
  std::vector<std::pair<NodeId, double>> initial;  // c_i(0)
};

// Throws InvalidArgument on cross-compartment reactions, transport that
// changes molecule type or stays inside a compartment, or negative data.
void check_kinetics(const KineticsSpec& spec);

std::vector<double> initial_vector(const KineticsSpec& spec);
std::vector<BoundInput> bind_kinetics_inputs(const KineticsSpec& spec, const SignalSet& signals);

struct DelayKineticsOptions {
  double tolerance = 1e-6;  // relative Richardson error estimate of the finer solve
  std::size_t initial_substeps = 1;
  std::size_t max_refinements = 6;
  double clip_tolerance = 1e-9;
};

struct DelayKineticsResult {
  OccupancyTrace trace;  // extrapolated concentrations on the grid
  std::size_t substeps = 0;
  double error_estimate = 0.0;  // absolute, on the grid
  std::size_t clipped = 0;  // values in [-clip_tolerance, 0) set to zero
};

// dc_k/dt = l_k(t) + sum_{intra i} c_i lambda_ik
//         + sum_{transport i} int_0^t c_i(t - u) lambda_ik dF_ik(u) - Lambda_k c_k,
// integrated by the trapezoid rule (implicit in the current state) with
// trapezoid memory convolutions over the full history, then Richardson
// extrapolated across a step halving.
DelayKineticsResult delay_kinetics(const KineticsSpec& spec, const SignalSet& signals,
                                   const TimeGrid& grid, const DelayKineticsOptions& options = {});

// Exponential(nu) transport i -> k replaced by a transit node x with
// i -> x at lambda_ik and x -> k at nu. Original nodes keep their order and
// transit nodes are appended in transport order, in new compartments.
// Throws InvalidArgument if some transport delay is not exponential.
MarkovRates auxiliary_node_reduction(const KineticsSpec& spec);

// Semi-Markov network equivalent to the kinetics: transport i -> k becomes
// i -> x (Exponential(Lambda_i)) followed by x -> k (F_ik), with x an extra
// node that is not part of any compartment's concentration. Same node order
// as auxiliary_node_reduction.
NetworkSpec kinetics_to_semimarkov(const KineticsSpec& spec);

struct ScalingRow {
  double volume = 0.0;
  double error = 0.0;            // sup over grid and nodes of |count / volume - c(t)|
  double standard_error = 0.0;   // largest cell standard error of count / volume
};

// Monte Carlo with inputs a_i(t) * volume and round(c_i(0) * volume) initial
// molecules against delay_kinetics. config.sample_times and replications
// apply to every volume; volume v_k uses seed stream_seed(config.seed, k).
std::vector<ScalingRow> scaling_convergence(const KineticsSpec& spec, const SignalSet& signals,
                                            std::span<const double> volumes, const SimConfig& config,
                                            const TimeGrid& grid);

struct NodeCorollary {
  NodeId node;
  int distance = kUnreachable;   // hops in the reaction/transport graph
  double steady_level = 0.0;     // d_j
  double limit_deviation = 0.0;  // sup over the window of |c_j^inf - d_j|
  double late_deviation = 0.0;   // sup over the final window of |c_j(t) - d_j|
  double bound = 0.0;            // B delta^distance
  double gap_half = 0.0;         // |c_j - c_j^inf| at T / 2
  double gap_end = 0.0;          // |c_j - c_j^inf| at T
  bool pass = false;
};

struct CorollaryReport {
  ClassParameters parameters;  // delta over reaction and transport hops
  SupWindow window;
  double late_window = 0.0;
  std::vector<NodeCorollary> nodes;

  bool ok() const;
};

// c_j(t) from delay_kinetics; c_j^inf and d_j from the spectral engine on
// kinetics_to_semimarkov. A node passes when sup |c_j^inf - d_j| <= B delta^N
// and the transient gap shrinks from T/2 to T or sits at the solver's noise
// floor. late_deviation is reported but not gated: it still carries the transient.
CorollaryReport corollary_check(const KineticsSpec& spec, const SignalSet& signals, double gap,
                                const TimeGrid& grid);

}  // namespace homeostat
