#include "homeostat/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "homeostat/error.hpp"
#include "product_weights.hpp"

namespace homeostat {

TimeGrid TimeGrid::with_horizon(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0) || !std::isfinite(horizon) || !std::isfinite(dt)) {
    throw InvalidArgument("time grid needs horizon > 0 and dt > 0");
  }
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / dt - 1e-9)));
  return {horizon / static_cast<double>(steps), steps};
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> t(size());
  for (std::size_t m = 0; m < t.size(); ++m) t[m] = at(m);
  return t;
}

TimeGrid default_grid(const Network& network, double horizon) {
  double shortest = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < network.size(); ++j) shortest = std::min(shortest, mean_sojourn(network, j));
  return TimeGrid::with_horizon(horizon, shortest / 50.0);
}

namespace {

// Grid samples of a delay density. A density that is infinite at the origin
// (gamma with shape < 1) is replaced there by its first-cell average.
std::vector<double> density_samples(const DelayDistribution& d, const TimeGrid& grid) {
  std::vector<double> f(grid.size());
  for (std::size_t m = 0; m < f.size(); ++m) f[m] = d.pdf(grid.at(m));
  if (!std::isfinite(f[0])) f[0] = d.cdf(grid.dt) / grid.dt;
  return f;
}

// out[m] += scale * int_0^{t_m} a(u) f(t_m - u) du (trapezoid).
void accumulate_convolution(std::span<const double> a, std::span<const double> f, double scale,
                            double dt, std::vector<double>& out) {
  const std::size_t n = a.size();
  // First and last nonzero entries of a bound the work per output sample.
  std::size_t first = 0;
  while (first < n && a[first] == 0.0) ++first;
  if (first == n) return;
  for (std::size_t m = std::max<std::size_t>(first, 1); m < n; ++m) {
    double sum = 0.5 * (a[0] * f[m] + a[m] * f[0]);
    for (std::size_t l = std::max<std::size_t>(first, 1); l < m; ++l) sum += a[l] * f[m - l];
    out[m] += scale * dt * sum;
  }
}

double sup_norm(const std::vector<std::vector<double>>& v) {
  double s = 0.0;
  for (const auto& row : v) {
    for (double x : row) s = std::max(s, std::abs(x));
  }
  return s;
}

// out[m] += scale * int_0^{t_m} c(t_m - u) dF(u) with c piecewise linear and
// c(0) = 0, given the point weights of F.
void accumulate_stieltjes(std::span<const double> c, std::span<const double> weight, double scale,
                          std::vector<double>& out) {
  const std::size_t n = c.size();
  for (std::size_t m = 1; m < n; ++m) {
    double sum = 0.0;
    for (std::size_t l = 0; l < m; ++l) sum += weight[l] * c[m - l];
    out[m] += scale * sum;
  }
}

// Second-order finite differences, one-sided at the ends.
std::vector<double> derivative(std::span<const double> v, double dt) {
  const std::size_t n = v.size();
  std::vector<double> d(n, 0.0);
  if (n < 3) {
    if (n == 2) d[0] = d[1] = (v[1] - v[0]) / dt;
    return d;
  }
  d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
  for (std::size_t m = 1; m + 1 < n; ++m) d[m] = (v[m + 1] - v[m - 1]) / (2.0 * dt);
  d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
  return d;
}

}  // namespace

ArrivalDensity arrival_density(const Network& network, std::size_t source, const TimeGrid& grid,
                               const KernelOptions& options) {
  const std::size_t n = network.size();
  const std::size_t len = grid.size();
  if (source >= n) throw InvalidArgument("arrival_density: source index out of range");

  struct Hop {
    std::size_t from;
    std::size_t to;
    double prob;
    DelayDistribution delay;
    std::vector<double> weight;
  };
  std::vector<Hop> hops;
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& r : network.routes(k)) {
      if (r.target == Network::exit) continue;
      hops.push_back({k, r.target, r.prob, r.delay, detail::memory_weights(r.delay, grid.dt, len).point});
    }
  }

  ArrivalDensity result;
  result.source = source;
  result.grid = grid;
  result.density.assign(n, std::vector<double>(len, 0.0));
  result.cumulative.assign(n, std::vector<double>(len, 0.0));

  // Paths of length one, exactly: M = p F and A = p f.
  std::vector<std::vector<double>> increment(n, std::vector<double>(len, 0.0));
  for (const auto& h : hops) {
    if (h.from != source) continue;
    const auto f = density_samples(h.delay, grid);
    for (std::size_t m = 0; m < len; ++m) {
      increment[h.to][m] += h.prob * h.delay.cdf(grid.at(m));
      result.density[h.to][m] += h.prob * f[m];
    }
  }

  // Longer paths extend the expected arrival counts M by one hop at a time.
  // M is continuous even where a density is not, so the product-trapezoid
  // rule against dF keeps second order for every delay family.
  std::vector<std::vector<double>> longer(n, std::vector<double>(len, 0.0));
  std::size_t iterations = 1;
  double norm = sup_norm(increment);
  while (true) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t m = 0; m < len; ++m) result.cumulative[j][m] += increment[j][m];
      if (iterations > 1) {
        for (std::size_t m = 0; m < len; ++m) longer[j][m] += increment[j][m];
      }
    }
    if (norm < options.tolerance) break;
    if (iterations >= options.max_iterations) {
      std::ostringstream msg;
      msg << "arrival density did not converge within " << options.max_iterations
          << " path lengths (spectral radius of P = " << network.spectral_radius() << ")";
      throw ConvergenceError(msg.str());
    }
    std::vector<std::vector<double>> next(n, std::vector<double>(len, 0.0));
    for (const auto& h : hops) accumulate_stieltjes(increment[h.from], h.weight, h.prob, next[h.to]);
    increment = std::move(next);
    norm = sup_norm(increment);
    ++iterations;
  }

  // Paths of length >= 2 have a differentiable count; add its derivative.
  for (std::size_t j = 0; j < n; ++j) {
    const auto d = derivative(longer[j], grid.dt);
    for (std::size_t m = 0; m < len; ++m) result.density[j][m] += d[m];
  }
  result.iterations = iterations;
  result.last_increment = norm;
  return result;
}

std::size_t TransitionKernelGrid::position(std::size_t source) const {
  const auto it = std::find(sources.begin(), sources.end(), source);
  if (it == sources.end()) throw InvalidArgument("kernel was not computed for this source node");
  return static_cast<std::size_t>(it - sources.begin());
}

const std::vector<double>& TransitionKernelGrid::arrival_of(std::size_t source, std::size_t target) const {
  return arrival.at(position(source)).at(target);
}

const std::vector<double>& TransitionKernelGrid::occupancy_of(std::size_t source,
                                                              std::size_t target) const {
  return occupancy.at(position(source)).at(target);
}

double TransitionKernelGrid::arrival_integral(std::size_t source, std::size_t target) const {
  return cumulative_integral(arrival_of(source, target), grid.dt).back();
}

double TransitionKernelGrid::occupancy_integral(std::size_t source, std::size_t target) const {
  return cumulative_integral(occupancy_of(source, target), grid.dt).back();
}

std::vector<double> cumulative_integral(std::span<const double> values, double dt) {
  std::vector<double> out(values.size(), 0.0);
  for (std::size_t m = 1; m < values.size(); ++m) {
    out[m] = out[m - 1] + 0.5 * dt * (values[m - 1] + values[m]);
  }
  return out;
}

TransitionKernelGrid transition_kernel(const Network& network, const TimeGrid& grid,
                                       const KernelOptions& options,
                                       std::span<const std::size_t> sources) {
  TransitionKernelGrid kernel;
  kernel.grid = grid;
  kernel.injection = options.injection;
  kernel.node_count = network.size();
  if (sources.empty()) {
    kernel.sources.assign(network.input_nodes().begin(), network.input_nodes().end());
  } else {
    kernel.sources.assign(sources.begin(), sources.end());
  }

  // P_sj = int S_j(t - u) dM_sj(u) = M_sj(t) - int M_sj(t - u) dG_j(u), where G_j
  // is the sojourn mixture cdf; its product weights mix those of each route.
  std::vector<std::vector<double>> survival(network.size(), std::vector<double>(grid.size()));
  std::vector<std::vector<double>> sojourn_weight(network.size(), std::vector<double>(grid.size(), 0.0));
  for (std::size_t j = 0; j < network.size(); ++j) {
    const SojournMixture sojourn(network, j);
    for (std::size_t m = 0; m < grid.size(); ++m) survival[j][m] = sojourn.survival(grid.at(m));
    for (const auto& r : network.routes(j)) {
      const auto w = detail::memory_weights(r.delay, grid.dt, grid.size()).point;
      for (std::size_t l = 0; l < grid.size(); ++l) sojourn_weight[j][l] += r.prob * w[l];
    }
  }

  for (std::size_t s : kernel.sources) {
    ArrivalDensity a = arrival_density(network, s, grid, options);
    std::vector<std::vector<double>> p = a.cumulative;
    for (std::size_t j = 0; j < network.size(); ++j) {
      accumulate_stieltjes(a.cumulative[j], sojourn_weight[j], -1.0, p[j]);
    }
    if (options.injection == InjectionSojourn::included) {
      for (std::size_t m = 0; m < grid.size(); ++m) p[s][m] += survival[s][m];
    }
    kernel.arrival.push_back(std::move(a.density));
    kernel.occupancy.push_back(std::move(p));
    kernel.iterations.push_back(a.iterations);
  }
  return kernel;
}

OccupancyTrace transient_mean(const Network& network, const TransitionKernelGrid& kernel,
                              std::span<const BoundInput> inputs) {
  const TimeGrid& grid = kernel.grid;
  OccupancyTrace trace;
  trace.provenance = Provenance::analytic;
  trace.times = grid.times();
  trace.nodes.assign(network.nodes().begin(), network.nodes().end());
  trace.mean.assign(network.size(), std::vector<double>(grid.size(), 0.0));

  for (const auto& in : inputs) {
    std::vector<double> rate(grid.size());
    for (std::size_t m = 0; m < grid.size(); ++m) rate[m] = in.signal(grid.at(m));
    for (std::size_t j = 0; j < network.size(); ++j) {
      accumulate_convolution(rate, kernel.occupancy_of(in.node, j), 1.0, grid.dt, trace.mean[j]);
    }
  }
  trace.metadata = {{"dt", format_number(grid.dt)},
                    {"horizon", format_number(grid.horizon())},
                    {"injection_sojourn",
                     kernel.injection == InjectionSojourn::included ? "included" : "excluded"}};
  return trace;
}

SpectralResponse spectral_response(const Network& network, double sigma, InjectionSojourn injection) {
  const auto n = static_cast<Eigen::Index>(network.size());
  Eigen::MatrixXcd psi = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t i = 0; i < network.size(); ++i) {
    for (const auto& r : network.routes(i)) {
      if (r.target == Network::exit) continue;
      psi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(r.target)) +=
          r.prob * r.delay.characteristic(-sigma);
    }
  }
  const Eigen::MatrixXcd system = Eigen::MatrixXcd::Identity(n, n) - psi;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(system);
  if (!(lu.rcond() > 1e-14)) {
    std::ostringstream msg;
    msg << "I - Psi(" << sigma << ") is singular";
    throw NonTransientError(msg.str());
  }
  Eigen::MatrixXcd g = lu.solve(psi);

  Eigen::VectorXcd transform(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    transform(j) = SojournMixture(network, static_cast<std::size_t>(j)).survival_transform(sigma);
  }
  for (Eigen::Index j = 0; j < n; ++j) g.col(j) *= transform(j);
  if (injection == InjectionSojourn::included) g.diagonal() += transform;
  return {sigma, std::move(g)};
}

std::vector<double> SupWindow::times() const {
  if (!(length > 0.0) || !(step > 0.0)) return {0.0};
  const auto count = static_cast<std::size_t>(std::floor(length / step + 1e-9));
  std::vector<double> t(count + 1);
  for (std::size_t m = 0; m <= count; ++m) t[m] = step * static_cast<double>(m);
  return t;
}

SupWindow sup_window(std::span<const BoundInput> inputs) {
  double lo = 0.0;
  double hi = 0.0;
  for (const auto& in : inputs) {
    if (in.signal.is_constant()) continue;
    lo = lo == 0.0 ? in.signal.min_frequency() : std::min(lo, in.signal.min_frequency());
    hi = std::max(hi, in.signal.max_frequency());
  }
  if (hi == 0.0) return {};
  return {50.0 * 2.0 * std::numbers::pi / lo, 2.0 * std::numbers::pi / (100.0 * hi)};
}

LimitMean limit_mean(const Network& network, std::span<const BoundInput> inputs,
                     const std::vector<double>& times, InjectionSojourn injection) {
  LimitMean result;
  result.steady = steady_levels(network, mean_input_rates(network, inputs), injection);

  const std::size_t n = network.size();
  std::vector<std::vector<std::complex<double>>> sum(
      n, std::vector<std::complex<double>>(times.size(), 0.0));

  std::map<double, Eigen::MatrixXcd> responses;
  auto response = [&](double sigma) -> const Eigen::MatrixXcd& {
    auto it = responses.find(sigma);
    if (it == responses.end()) {
      it = responses.emplace(sigma, spectral_response(network, sigma, injection).response).first;
    }
    return it->second;
  };

  for (const auto& in : inputs) {
    const auto row = static_cast<Eigen::Index>(in.node);
    for (const auto& term : in.signal.terms()) {
      const Eigen::MatrixXcd& gp = response(term.frequency);
      const Eigen::MatrixXcd& gm = response(-term.frequency);
      for (std::size_t j = 0; j < n; ++j) {
        const std::complex<double> up = term.coefficient * gp(row, static_cast<Eigen::Index>(j));
        const std::complex<double> down =
            std::conj(term.coefficient) * gm(row, static_cast<Eigen::Index>(j));
        for (std::size_t m = 0; m < times.size(); ++m) {
          sum[j][m] += up * std::polar(1.0, term.frequency * times[m]) +
                       down * std::polar(1.0, -term.frequency * times[m]);
        }
      }
    }
  }

  OccupancyTrace& trace = result.trace;
  trace.provenance = Provenance::analytic;
  trace.times = times;
  trace.nodes.assign(network.nodes().begin(), network.nodes().end());
  trace.mean.assign(n, std::vector<double>(times.size()));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t m = 0; m < times.size(); ++m) {
      trace.mean[j][m] = result.steady(static_cast<Eigen::Index>(j)) + sum[j][m].real();
      result.max_imaginary = std::max(result.max_imaginary, std::abs(sum[j][m].imag()));
    }
  }
  trace.metadata = {{"series", "limit_mean"},
                    {"injection_sojourn",
                     injection == InjectionSojourn::included ? "included" : "excluded"}};
  return result;
}

bool HomeostasisReport::ok() const {
  return std::all_of(nodes.begin(), nodes.end(), [](const auto& n) { return n.pass; });
}

HomeostasisReport homeostasis_report(const Network& network, std::span<const BoundInput> inputs,
                                     const ClassParameters& parameters, InjectionSojourn injection) {
  HomeostasisReport report;
  report.parameters = parameters;
  report.injection = injection;
  report.window = sup_window(inputs);

  const LimitMean limit = limit_mean(network, inputs, report.window.times(), injection);
  report.max_imaginary = limit.max_imaginary;
  const std::vector<int> dist = input_distances(network);
  for (std::size_t j = 0; j < network.size(); ++j) {
    NodeHomeostasis entry;
    entry.node = network.node(j);
    entry.distance = dist[j];
    entry.steady_level = limit.steady(static_cast<Eigen::Index>(j));
    for (double v : limit.trace.mean[j]) {
      entry.deviation = std::max(entry.deviation, std::abs(v - entry.steady_level));
    }
    entry.bound = parameters.deviation_bound(dist[j]);
    entry.pass = entry.deviation <= entry.bound + report.tolerance;
    report.nodes.push_back(entry);
  }
  return report;
}

HomeostasisReport homeostasis_report(const Network& network, const SignalSet& signals, double gap,
                                     InjectionSojourn injection) {
  const ClassParameters params = class_parameters(network, signals, gap);
  const std::vector<BoundInput> inputs = bind_inputs(network, signals);
  return homeostasis_report(network, inputs, params, injection);
}

bool VarianceReport::ok() const {
  return std::all_of(nodes.begin(), nodes.end(), [](const auto& n) { return n.pass; });
}

VarianceReport variance_response(const Network& network, const SignalSet& signals, double gap,
                                 InjectionSojourn injection) {
  VarianceReport report;
  report.parameters = class_parameters(network, signals, gap);
  report.injection = injection;

  const std::size_t n = network.size();
  Eigen::VectorXd mean_rates = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::vector<double> variance(n, 0.0);
  for (const auto& in : network.spec().inputs) {
    const Signal& signal = signals.at(in.signal);
    const auto row = static_cast<Eigen::Index>(network.index_of(in.node));
    if (const auto* ap = std::get_if<AlmostPeriodicSignal>(&signal)) {
      if (!ap->is_constant()) {
        throw InvalidArgument("variance analysis needs stationary inputs; signal '" + in.signal +
                              "' is a deterministic oscillation");
      }
      mean_rates(row) += ap->mean();
      continue;
    }
    const auto& env = std::get<StationaryEnvironment>(signal);
    mean_rates(row) += env.mean();
    for (const auto& atom : spectral_measure(env)) {
      const Eigen::MatrixXcd g = spectral_response(network, atom.frequency, injection).response;
      for (std::size_t j = 0; j < n; ++j) {
        variance[j] += std::norm(g(row, static_cast<Eigen::Index>(j))) * atom.mass;
      }
    }
  }

  const Eigen::VectorXd e = steady_levels(network, mean_rates, injection);
  const std::vector<int> dist = input_distances(network);
  for (std::size_t j = 0; j < n; ++j) {
    NodeVariance entry;
    entry.node = network.node(j);
    entry.distance = dist[j];
    entry.mean = e(static_cast<Eigen::Index>(j));
    entry.variance = variance[j];
    entry.bound = report.parameters.variance_bound(dist[j]);
    entry.pass = entry.variance <= entry.bound * (1.0 + 1e-12) + 1e-15;
    report.nodes.push_back(entry);
  }
  return report;
}

std::vector<std::vector<double>> transient_gap_bound(const Network& network,
                                                     const TransitionKernelGrid& kernel,
                                                     std::span<const BoundInput> inputs) {
  const std::size_t n = network.size();
  Eigen::MatrixXd visits = fundamental_matrix(network);
  if (kernel.injection == InjectionSojourn::included) {
    visits += Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  }
  std::vector<std::vector<double>> bound(n, std::vector<double>(kernel.grid.size(), 0.0));
  for (const auto& in : inputs) {
    const double level = in.signal.envelope();
    for (std::size_t j = 0; j < n; ++j) {
      const double total = visits(static_cast<Eigen::Index>(in.node), static_cast<Eigen::Index>(j)) *
                           mean_sojourn(network, j);
      const std::vector<double> running = cumulative_integral(kernel.occupancy_of(in.node, j), kernel.grid.dt);
      for (std::size_t m = 0; m < running.size(); ++m) {
        bound[j][m] += level * std::max(0.0, total - running[m]);
      }
    }
  }
  return bound;
}

}  // namespace homeostat
