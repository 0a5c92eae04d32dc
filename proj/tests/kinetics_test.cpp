#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "homeostat/analytic.hpp"
#include "homeostat/error.hpp"
#include "homeostat/kinetics.hpp"
#include "test_support.hpp"

namespace homeostat {
namespace {

double max_diff(const OccupancyTrace& a, const OccupancyTrace& b, std::size_t nodes) {
  double m = 0.0;
  for (std::size_t j = 0; j < nodes; ++j) {
    for (std::size_t k = 0; k < a.times.size(); ++k) m = std::max(m, std::abs(a.mean[j][k] - b.mean[j][k]));
  }
  return m;
}

// Two compartments of one type: reaction-free, transport 1 -> 2, exit from both.
KineticsSpec transport_pair(DelayDistribution delay) {
  KineticsSpec k;
  k.reactions.compartments = 2;
  k.reactions.types = 1;
  k.reactions.exits = {{{1, 1}, 0.5}, {{2, 1}, 1.0}};
  k.transport = {{{1, 1}, {2, 1}, 1.5, delay}};
  k.inputs = {{{1, 1}, "s"}};
  k.initial = {{{1, 1}, 0.3}};
  return k;
}

TEST(MarkovRates, MatricesAndTotals) {
  const MarkovRates r{2, 1, {}, {{{1, 1}, {2, 1}, 1.2}, {{2, 1}, {1, 1}, 0.6}}, {{{1, 1}, 0.3}, {{2, 1}, 0.5}}};
  const auto total = r.total_rates();
  EXPECT_DOUBLE_EQ(total(0), 1.5);
  EXPECT_DOUBLE_EQ(total(1), 1.1);
  EXPECT_DOUBLE_EQ(r.jump_matrix()(0, 1), 1.2);
}

TEST(MarkovEmbedding, CompetingClocks) {
  const MarkovRates r{2, 1, {}, {{{1, 1}, {2, 1}, 1.2}}, {{{1, 1}, 0.3}, {{2, 1}, 0.5}}};
  const auto spec = markov_to_semimarkov(r, {{{1, 1}, "s"}});
  const Network net(spec);
  ASSERT_EQ(net.routes(0).size(), 2u);
  EXPECT_NEAR(net.routes(0)[0].prob, 0.8, 1e-15);
  EXPECT_NEAR(net.exit_probability(0), 0.2, 1e-15);
  EXPECT_EQ(net.routes(0)[0].delay, DelayDistribution::exponential(1.5));
  EXPECT_NEAR(mean_sojourn(net, 0), 1.0 / 1.5, 1e-15);

  const MarkovRates stuck{2, 1, {}, {{{1, 1}, {2, 1}, 1.0}}, {}};
  EXPECT_THROW(markov_to_semimarkov(stuck), InvalidArgument);
}

TEST(MarkovOde, SingleNodeClosedForm) {
  const MarkovRates r{1, 1, {}, {}, {{{1, 1}, 2.0}}};
  const std::vector<BoundInput> inputs{{0, AlmostPeriodicSignal::constant(4.0)}};
  const std::vector<double> init{1.0};
  const auto grid = TimeGrid::with_horizon(5.0, 0.1);
  const auto tr = markov_mean_ode(r, inputs, init, grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.at(k);
    EXPECT_NEAR(tr.mean[0][k], 2.0 + (1.0 - 2.0) * std::exp(-2.0 * t), 1e-8);
  }
  EXPECT_EQ(tr.provenance, Provenance::kinetics);
}

// The ODE, the analytic kernel on the embedding and each other agree.
TEST(MarkovOde, AgreesWithEmbeddedKernel) {
  for (const auto& c : testing::standard_markov_cases()) {
    std::vector<InputBinding> bindings;
    SignalSet signals;
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
      const std::string id = "in" + std::to_string(i);
      bindings.push_back({c.inputs[i].first, id});
      signals.emplace(id, c.inputs[i].second);
    }
    const Network net(markov_to_semimarkov(c.rates, bindings));
    const auto inputs = bind_inputs(net, signals);
    const auto grid = TimeGrid::with_horizon(8.0, 0.005);
    const auto analytic = transient_mean(net, transition_kernel(net, grid), inputs);
    const auto ode = markov_mean_ode(c.rates, inputs, {}, grid);
    double peak = 0.0;
    for (const auto& s : ode.mean) for (double x : s) peak = std::max(peak, std::abs(x));
    EXPECT_LT(max_diff(analytic, ode, net.size()), 1e-4 * peak) << c.name;
  }
}

TEST(CheckKinetics, RejectsStructuralErrors) {
  auto k = transport_pair(DelayDistribution::exponential(1.0));
  EXPECT_NO_THROW(check_kinetics(k));
  auto cross = k;
  cross.reactions.jumps.push_back({{1, 1}, {2, 1}, 1.0});
  EXPECT_THROW(check_kinetics(cross), InvalidArgument);
  auto same = k;
  same.transport[0].to = {1, 1};
  EXPECT_THROW(check_kinetics(same), InvalidArgument);
  auto type_change = k;
  type_change.reactions.types = 2;
  type_change.transport[0].to = {2, 2};
  EXPECT_THROW(check_kinetics(type_change), InvalidArgument);
  auto negative = k;
  negative.initial[0].second = -1.0;
  EXPECT_THROW(check_kinetics(negative), InvalidArgument);
}

TEST(DelayKinetics, ReducesToMarkovOdeWithoutTransport) {
  KineticsSpec k;
  k.reactions = {1, 2, {}, {{{1, 1}, {1, 2}, 1.3}, {{1, 2}, {1, 1}, 0.4}}, {{{1, 2}, 0.9}}};
  k.inputs = {{{1, 1}, "s"}};
  k.initial = {{{1, 2}, 0.7}};
  const SignalSet signals{{"s", testing::two_plus_cos5()}};
  const auto grid = TimeGrid::with_horizon(6.0, 0.01);
  const auto dk = delay_kinetics(k, signals, grid);
  const auto inputs = bind_kinetics_inputs(k, signals);
  const auto init = initial_vector(k);
  const auto ode = markov_mean_ode(k.reactions, inputs, init, grid);
  EXPECT_LT(max_diff(dk.trace, ode, 2), 1e-7);
}

TEST(DelayKinetics, ExponentialTransportMatchesAuxiliaryNodes) {
  const auto k = transport_pair(DelayDistribution::exponential(2.0));
  const SignalSet signals{{"s", testing::two_plus_cos5()}};
  const auto grid = TimeGrid::with_horizon(10.0, 0.01);
  const auto dk = delay_kinetics(k, signals, grid);
  const auto aux = auxiliary_node_reduction(k);
  ASSERT_EQ(aux.node_list().size(), 3u);
  EXPECT_EQ(aux.node_list()[2], (NodeId{3, 1}));
  std::vector<double> init = initial_vector(k);
  init.push_back(0.0);
  const auto ode = markov_mean_ode(aux, bind_kinetics_inputs(k, signals), init, grid);
  EXPECT_LT(max_diff(dk.trace, ode, 2), 1e-6);
  EXPECT_THROW(auxiliary_node_reduction(transport_pair(DelayDistribution::uniform(1.0))), InvalidArgument);
}

// With general F the solution matches the analytic mean of the semi-Markov
// embedding (started empty), including a gamma density unbounded at 0.
TEST(DelayKinetics, GeneralTransportMatchesEmbedding) {
  for (const auto& delay : {DelayDistribution::gamma(2.0, 3.0), DelayDistribution::uniform(1.2),
                            DelayDistribution::gamma(1.0, 0.7), DelayDistribution::gamma(0.6, 1.0)}) {
    auto k = transport_pair(delay);
    k.initial.clear();
    const SignalSet signals{{"s", testing::two_plus_cos5()}};
    const auto grid = TimeGrid::with_horizon(8.0, 0.005);
    const auto dk = delay_kinetics(k, signals, grid);
    const Network net(kinetics_to_semimarkov(k));
    ASSERT_EQ(net.size(), 3u);
    const auto analytic = transient_mean(net, transition_kernel(net, grid), bind_inputs(net, signals));
    EXPECT_LT(max_diff(dk.trace, analytic, 2), 1e-4) << delay.name();
    EXPECT_GE(dk.error_estimate, 0.0);
  }
}

TEST(DelayKinetics, ConcentrationsStayNonNegative) {
  const auto k = transport_pair(DelayDistribution::uniform(0.7));
  const SignalSet signals{{"s", AlmostPeriodicSignal{1.0, {{9.0, {0.5, 0.0}}}}}};
  const auto dk = delay_kinetics(k, signals, TimeGrid::with_horizon(5.0, 0.02));
  for (const auto& s : dk.trace.mean) for (double x : s) EXPECT_GE(x, 0.0);
}

TEST(DelayKinetics, ReportsStepFailure) {
  const auto k = transport_pair(DelayDistribution::gamma(2.0, 3.0));
  const SignalSet signals{{"s", testing::two_plus_cos5()}};
  DelayKineticsOptions opts;
  opts.tolerance = 1e-15;
  opts.max_refinements = 1;
  EXPECT_THROW(delay_kinetics(k, signals, TimeGrid::with_horizon(2.0, 0.1), opts), ConvergenceError);
}

// Random non-negative almost periodic rate: mean in [1, 3], up to two terms.
AlmostPeriodicSignal random_signal(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double mean = 1.0 + 2.0 * u(rng);
  std::vector<FourierTerm> terms;
  const int count = static_cast<int>(u(rng) * 3.0);
  for (int k = 0; k < count; ++k) {
    terms.push_back({0.5 + 6.0 * u(rng), std::polar(0.2 * mean * u(rng), 6.283185307179586 * u(rng))});
  }
  return {mean, terms};
}

AlmostPeriodicSignal sum_of(const AlmostPeriodicSignal& a, const AlmostPeriodicSignal& b) {
  std::vector<FourierTerm> terms(a.terms().begin(), a.terms().end());
  terms.insert(terms.end(), b.terms().begin(), b.terms().end());
  return {a.mean() + b.mean(), terms};
}

// With one fixed refinement the scheme is a linear map of (inputs, initial state).
TEST(DelayKineticsProperty, SuperpositionInInputsAndInitialState) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DelayKineticsOptions fixed;
  fixed.tolerance = 1e300;
  fixed.initial_substeps = 2;
  const auto grid = TimeGrid::with_horizon(5.0, 0.02);
  for (int trial = 0; trial < 6; ++trial) {
    const DelayDistribution delays[] = {DelayDistribution::gamma(0.6 + 2.0 * u(rng), 1.0 + 3.0 * u(rng)),
                                        DelayDistribution::uniform(0.3 + u(rng)),
                                        DelayDistribution::exponential(0.5 + 2.0 * u(rng))};
    auto base = transport_pair(delays[trial % 3]);
    base.inputs = {{{1, 1}, "s"}, {{2, 1}, "r"}};
    const AlmostPeriodicSignal s1 = random_signal(rng), r1 = random_signal(rng);
    const AlmostPeriodicSignal s2 = random_signal(rng), r2 = random_signal(rng);
    auto k1 = base;
    k1.initial = {{{1, 1}, u(rng)}, {{2, 1}, u(rng)}};
    auto k2 = base;
    k2.initial = {{{1, 1}, u(rng)}, {{2, 1}, u(rng)}};
    auto k12 = base;
    k12.initial = {{{1, 1}, k1.initial[0].second + k2.initial[0].second},
                   {{2, 1}, k1.initial[1].second + k2.initial[1].second}};
    const auto a = delay_kinetics(k1, {{"s", s1}, {"r", r1}}, grid, fixed).trace;
    const auto b = delay_kinetics(k2, {{"s", s2}, {"r", r2}}, grid, fixed).trace;
    const auto ab = delay_kinetics(k12, {{"s", sum_of(s1, s2)}, {"r", sum_of(r1, r2)}}, grid, fixed).trace;
    double peak = 0.0;
    double diff = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t m = 0; m < grid.size(); ++m) {
        peak = std::max(peak, std::abs(ab.mean[j][m]));
        diff = std::max(diff, std::abs(ab.mean[j][m] - a.mean[j][m] - b.mean[j][m]));
      }
    }
    EXPECT_LE(diff, 1e-8 * peak) << delays[trial % 3].name();
  }
}

// Free mass c_1 + c_2 plus mass in transit equals c(0) + inputs - exits, with
// transit(t) = int_0^t c_1(t - u) lambda_12 (1 - F(u)) du and the time
// integrals taken independently by the trapezoid rule on a finer grid.
TEST(DelayKineticsProperty, MassAccounting) {
  for (const auto& delay : {DelayDistribution::gamma(2.0, 3.0), DelayDistribution::exponential(1.3)}) {
    const auto k = transport_pair(delay);
    const AlmostPeriodicSignal s = testing::two_plus_cos5();
    const double dt = 0.0025;
    const auto grid = TimeGrid::with_horizon(6.0, dt);
    const auto dk = delay_kinetics(k, {{"s", s}}, grid);
    const auto& c1 = dk.trace.mean[0];
    const auto& c2 = dk.trace.mean[1];
    double inflow = 0.0;
    double outflow = 0.0;
    double worst = 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
      if (m > 0) {
        inflow += 0.5 * dt * (s(grid.at(m - 1)) + s(grid.at(m)));
        outflow += 0.5 * dt * (0.5 * (c1[m - 1] + c1[m]) + 1.0 * (c2[m - 1] + c2[m]));
      }
      double transit = 0.0;
      for (std::size_t l = 0; l <= m && m > 0; ++l) {
        const double w = (l == 0 || l == m) ? 0.5 * dt : dt;
        transit += w * c1[m - l] * 1.5 * (1.0 - delay.cdf(grid.at(l)));
      }
      const double balance = c1[m] + c2[m] + transit - (0.3 + inflow - outflow);
      worst = std::max(worst, std::abs(balance));
    }
    EXPECT_LT(worst, 1e-5) << delay.name();
  }
}

// Zero input, unit mass at one node: the in-system total only decreases and,
// with the departed mass added back, stays at 1.
TEST(MarkovOde, OutflowOnlyConservesMass) {
  const MarkovRates loop = testing::standard_markov_cases()[4].rates;
  const std::vector<double> init{1.0, 0.0};
  const double dt = 0.001;
  const auto grid = TimeGrid::with_horizon(4.0, dt);
  const auto tr = markov_mean_ode(loop, {}, init, grid);
  const Eigen::VectorXd exits = loop.exit_vector();
  double departed = 0.0;
  double previous = 1.0;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double total = tr.mean[0][m] + tr.mean[1][m];
    if (m > 0) {
      departed += 0.5 * dt * (exits(0) * (tr.mean[0][m - 1] + tr.mean[0][m]) +
                              exits(1) * (tr.mean[1][m - 1] + tr.mean[1][m]));
    }
    EXPECT_LE(total, previous + 1e-15);
    EXPECT_NEAR(total + departed, 1.0, 1e-6);
    previous = total;
  }
}

TEST(MarkovOde, ScalarReference) {
  const MarkovRates r{1, 1, {}, {}, {{{1, 1}, 1.0}}};
  const std::vector<BoundInput> inputs{{0, AlmostPeriodicSignal::constant(2.0)}};
  const auto tr = markov_mean_ode(r, inputs, {}, TimeGrid::with_horizon(1.0, 0.1));
  EXPECT_NEAR(tr.mean[0].back(), 1.26424, 1e-5);
  EXPECT_NEAR(tr.mean[0].back(), 2.0 * (1.0 - std::exp(-1.0)), 1e-8);
}

// Constant input: the delay system settles where inflow balances exits,
// c_1 = l / Lambda_1 and c_2 = lambda_12 c_1 / lambda_20, whatever F is.
TEST(DelayKinetics, ConstantInputReachesBalance) {
  for (const auto& delay : {DelayDistribution::gamma(2.0, 3.0), DelayDistribution::uniform(1.2)}) {
    const auto k = transport_pair(delay);
    const auto dk = delay_kinetics(k, {{"s", AlmostPeriodicSignal::constant(2.0)}}, TimeGrid::with_horizon(30.0, 0.02));
    EXPECT_NEAR(dk.trace.mean[0].back(), 2.0 / 2.0, 1e-8) << delay.name();
    EXPECT_NEAR(dk.trace.mean[1].back(), 1.5 * 1.0 / 1.0, 1e-6) << delay.name();
  }
}

TEST(Corollary, ExponentialTransportChain) {
  KineticsSpec k;
  k.reactions.compartments = 3;
  k.reactions.types = 1;
  k.reactions.exits = {{{3, 1}, 1.0}};
  k.transport = {{{1, 1}, {2, 1}, 1.0, DelayDistribution::exponential(50.0)},
                 {{2, 1}, {3, 1}, 1.0, DelayDistribution::exponential(50.0)}};
  k.inputs = {{{1, 1}, "s"}};
  const SignalSet signals{{"s", testing::two_plus_cos5()}};
  const auto report = corollary_check(k, signals, 5.0, TimeGrid::with_horizon(24.0, 0.01));
  EXPECT_TRUE(report.ok());
  ASSERT_EQ(report.nodes.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(report.nodes[j].distance, static_cast<int>(j));
    EXPECT_NEAR(report.nodes[j].steady_level, 2.0, 1e-9);
    EXPECT_LE(report.nodes[j].limit_deviation, report.nodes[j].bound);
  }
}

TEST(Scaling, ErrorShrinksWithVolume) {
  KineticsSpec k;
  k.reactions = {1, 1, {}, {}, {{{1, 1}, 1.0}}};
  k.inputs = {{{1, 1}, "s"}};
  k.initial = {{{1, 1}, 1.0}};
  const SignalSet signals{{"s", testing::two_plus_cos5()}};
  SimConfig cfg;
  cfg.horizon = 5.0;
  cfg.replications = 100;
  cfg.seed = 4;
  for (int i = 0; i <= 25; ++i) cfg.sample_times.push_back(0.2 * i);
  const std::vector<double> volumes{10.0, 1000.0};
  const auto rows = scaling_convergence(k, signals, volumes, cfg, TimeGrid::with_horizon(5.0, 0.01));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[0].error, rows[1].error);
  EXPECT_GT(rows[0].standard_error, rows[1].standard_error);
}

}  // namespace
}  // namespace homeostat
