#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "homeostat/network.hpp"
#include "homeostat/signals.hpp"
#include "homeostat/trace.hpp"

namespace homeostat {

// Uniform grid t_m = m * dt, m = 0..steps.
struct TimeGrid {
  double dt = 0.01;
  std::size_t steps = 0;

  // Rounds horizon / dt to whole steps and adjusts dt to land on the horizon.
  static TimeGrid with_horizon(double horizon, double dt);

  double horizon() const noexcept { return dt * static_cast<double>(steps); }
  std::size_t size() const noexcept { return steps + 1; }
  double at(std::size_t m) const noexcept { return dt * static_cast<double>(m); }
  std::vector<double> times() const;
};

// dt = min_j mu_j / 50.
TimeGrid default_grid(const Network& network, double horizon);

struct KernelOptions {
  InjectionSojourn injection = InjectionSojourn::included;
  double tolerance = 1e-10;          // sup-norm of the last path-length increment
  std::size_t max_iterations = 100000;
};

// Arrival densities A_sj(t) of walks started at `source`, obtained as the
// path-length expansion of the renewal system
//   A_sj = p_sj f_sj + sum_k (A_sk * p_kj f_kj).
// The expansion runs on the expected arrival counts M_sj = int_0^t A_sj, each
// hop a product-trapezoid integral against dF_kj, so unbounded or
// discontinuous densities cost no order of accuracy. Single-hop densities are
// sampled exactly; longer paths are differentiated from M.
struct ArrivalDensity {
  std::size_t source = 0;
  TimeGrid grid;
  std::vector<std::vector<double>> density;     // [target][m]
  std::vector<std::vector<double>> cumulative;  // M_sj(t_m)
  std::size_t iterations = 0;
  double last_increment = 0.0;
};

ArrivalDensity arrival_density(const Network& network, std::size_t source, const TimeGrid& grid,
                               const KernelOptions& options = {});

// P_sj(t_m) = int_0^t (1 - F_j(t - u)) dM_sj(u), plus 1 - F_s(t) on the
// diagonal when the injection sojourn is included.
struct TransitionKernelGrid {
  TimeGrid grid;
  InjectionSojourn injection = InjectionSojourn::included;
  std::vector<std::size_t> sources;
  std::size_t node_count = 0;
  std::vector<std::vector<std::vector<double>>> arrival;    // [source position][target][m]
  std::vector<std::vector<std::vector<double>>> occupancy;  // [source position][target][m]
  std::vector<std::size_t> iterations;

  std::size_t position(std::size_t source) const;
  const std::vector<double>& arrival_of(std::size_t source, std::size_t target) const;
  const std::vector<double>& occupancy_of(std::size_t source, std::size_t target) const;
  // Trapezoid integrals over [0, horizon].
  double arrival_integral(std::size_t source, std::size_t target) const;
  double occupancy_integral(std::size_t source, std::size_t target) const;
};

// Sources default to the network's input nodes.
TransitionKernelGrid transition_kernel(const Network& network, const TimeGrid& grid,
                                       const KernelOptions& options = {},
                                       std::span<const std::size_t> sources = {});

// Trapezoid running integral: out[m] = int_0^{t_m} values.
std::vector<double> cumulative_integral(std::span<const double> values, double dt);

// m_j(t) = sum_i int_0^t lambda_i(t - s) P_ij(s) ds on the kernel grid.
OccupancyTrace transient_mean(const Network& network, const TransitionKernelGrid& kernel,
                              std::span<const BoundInput> inputs);

// g_ij(sigma) = int_0^inf exp(-i sigma s) P_ij(s) ds for all node pairs:
//   [(I - Psi)^{-1} Psi]_ij (1 - psi_j(-sigma)) / (i sigma),  Psi_ik = p_ik psi_ik(-sigma),
// plus the injection-sojourn transform on the diagonal. At sigma = 0 this is
// the limit (b(i,j) + [i == j]) mu_j.
struct SpectralResponse {
  double frequency = 0.0;
  Eigen::MatrixXcd response;  // [source][target]
};

SpectralResponse spectral_response(const Network& network, double sigma,
                                   InjectionSojourn injection = InjectionSojourn::included);

struct LimitMean {
  Eigen::VectorXd steady;   // d_j
  OccupancyTrace trace;     // m_j^inf(t)
  double max_imaginary = 0.0;
};

// m_j^inf(t) = d_j + sum_i sum_{+-k} c_k(i) exp(i sigma_k t) g_ij(sigma_k).
LimitMean limit_mean(const Network& network, std::span<const BoundInput> inputs,
                     const std::vector<double>& times,
                     InjectionSojourn injection = InjectionSojourn::included);

// Evaluation window for sup_t deviations: [0, 50 * 2pi / min sigma] with step
// 2pi / (100 * max sigma). A single point at t = 0 for constant inputs.
struct SupWindow {
  double length = 0.0;
  double step = 0.0;
  std::vector<double> times() const;
};
SupWindow sup_window(std::span<const BoundInput> inputs);

struct NodeHomeostasis {
  NodeId node;
  int distance = kUnreachable;
  double steady_level = 0.0;
  double deviation = 0.0;  // sup_t |m_j^inf(t) - d_j| on the window grid
  double bound = 0.0;      // B delta^distance
  bool pass = false;
};

struct HomeostasisReport {
  ClassParameters parameters;
  InjectionSojourn injection = InjectionSojourn::included;
  SupWindow window;
  double tolerance = 1e-10;
  double max_imaginary = 0.0;
  std::vector<NodeHomeostasis> nodes;

  bool ok() const;
};

HomeostasisReport homeostasis_report(const Network& network, const SignalSet& signals, double gap,
                                     InjectionSojourn injection = InjectionSojourn::included);
HomeostasisReport homeostasis_report(const Network& network, std::span<const BoundInput> inputs,
                                     const ClassParameters& parameters,
                                     InjectionSojourn injection = InjectionSojourn::included);

struct NodeVariance {
  NodeId node;
  int distance = kUnreachable;
  double mean = 0.0;      // e_j
  double variance = 0.0;  // D_j = sum_i sum_atoms |g_ij(sigma)|^2 mass
  double bound = 0.0;     // B-hat delta^(2 distance)
  bool pass = false;
};

struct VarianceReport {
  ClassParameters parameters;
  InjectionSojourn injection = InjectionSojourn::included;
  std::vector<NodeVariance> nodes;

  bool ok() const;
};

// Inputs must be stationary environments or constant signals. Throws
// ClassConditionError when an atom falls inside the gap.
VarianceReport variance_response(const Network& network, const SignalSet& signals, double gap,
                                 InjectionSojourn injection = InjectionSojourn::included);

// Envelope sum_i L_i int_t^inf P_ij(s) ds of |m_j^inf(t) - m_j(t)|, with the
// tail mass taken as the closed-form total (b(i,j) + [i == j]) mu_j minus the
// kernel's running integral. Indexed [node][m] on the kernel grid.
std::vector<std::vector<double>> transient_gap_bound(const Network& network,
                                                     const TransitionKernelGrid& kernel,
                                                     std::span<const BoundInput> inputs);

}  // namespace homeostat
