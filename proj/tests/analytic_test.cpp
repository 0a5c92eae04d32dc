#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "homeostat/analytic.hpp"
#include "homeostat/error.hpp"
#include "test_support.hpp"

namespace homeostat {
namespace {

using testing::chain_spec;
using testing::exp1;
using cd = std::complex<double>;

TEST(TimeGrid, LandsOnHorizon) {
  const auto g = TimeGrid::with_horizon(10.0, 0.03);
  EXPECT_NEAR(g.horizon(), 10.0, 1e-12);
  EXPECT_LE(g.dt, 0.03 + 1e-12);
  EXPECT_EQ(g.times().size(), g.size());
}

TEST(Kernel, SingleNodeSurvival) {
  const Network net(chain_spec(0));
  const auto grid = TimeGrid::with_horizon(10.0, 0.01);
  const auto k = transition_kernel(net, grid);
  const auto& p = k.occupancy_of(0, 0);
  for (std::size_t m = 0; m < grid.size(); m += 97) EXPECT_NEAR(p[m], std::exp(-grid.at(m)), 1e-12);

  KernelOptions off;
  off.injection = InjectionSojourn::excluded;
  const auto k_off = transition_kernel(net, grid, off);
  for (double x : k_off.occupancy_of(0, 0)) EXPECT_EQ(x, 0.0);
}

// One Exp(1) hop: A_01(t) = e^{-t}, P_01(t) = t e^{-t}.
TEST(Kernel, OneHopClosedForm) {
  const Network net(chain_spec(1));
  const auto grid = TimeGrid::with_horizon(15.0, 0.005);
  const auto k = transition_kernel(net, grid);
  const auto& a = k.arrival_of(0, 1);
  const auto& p = k.occupancy_of(0, 1);
  for (std::size_t m = 0; m < grid.size(); m += 211) {
    const double t = grid.at(m);
    EXPECT_NEAR(a[m], std::exp(-t), 1e-12);
    EXPECT_NEAR(p[m], t * std::exp(-t), 2e-5);
  }
}

// Exp(1) hop into an Exp(3) sojourn: P_01(t) = (e^{-t} - e^{-3t}) / 2. The
// trapezoid error shrinks four-fold per halving. (Equal rates would make the
// integrand linear and the rule exact.)
TEST(Kernel, ConvergesAtSecondOrder) {
  auto spec = chain_spec(1);
  spec.exits[0].delay = DelayDistribution::exponential(3.0);
  const Network net(spec);
  double prev = 0.0;
  for (double dt : {0.04, 0.02, 0.01}) {
    const auto grid = TimeGrid::with_horizon(10.0, dt);
    const auto kernel = transition_kernel(net, grid);
    const auto& p = kernel.occupancy_of(0, 1);
    double err = 0.0;
    for (std::size_t m = 0; m < grid.size(); ++m) {
      const double t = grid.at(m);
      err = std::max(err, std::abs(p[m] - 0.5 * (std::exp(-t) - std::exp(-3.0 * t))));
    }
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 4.0, 0.5);
    }
    prev = err;
  }
}

TEST(Kernel, ReportsNonConvergence) {
  const Network net(chain_spec(2));
  KernelOptions opts;
  opts.max_iterations = 1;
  EXPECT_THROW(transition_kernel(net, TimeGrid::with_horizon(5.0, 0.01), opts), ConvergenceError);
}

// int_0^T P_ij = b(i,j) mu_j (injection excluded) on random networks.
TEST(KernelProperty, IntegralsMatchVisitCounts) {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 12; ++k) {
    const int n = 2 + static_cast<int>(rng() % 3);
    const Network net(testing::random_network(rng, n));
    double mu = 0.0;
    for (std::size_t j = 0; j < net.size(); ++j) mu = std::max(mu, mean_sojourn(net, j));
    const double horizon = 20.0 * mu / (1.0 - net.spectral_radius());
    KernelOptions opts;
    opts.injection = InjectionSojourn::excluded;
    const auto grid = TimeGrid::with_horizon(horizon, std::max(0.01, horizon / 3000.0));
    const auto kernel = transition_kernel(net, grid, opts);
    const Eigen::MatrixXd b = testing::neumann_oracle(net.routing());
    for (std::size_t j = 0; j < net.size(); ++j) {
      const double expected = b(0, static_cast<Eigen::Index>(j)) * mean_sojourn(net, j);
      EXPECT_NEAR(kernel.occupancy_integral(0, j), expected, 1e-2 * std::max(expected, 1e-3)) << "case " << k;
    }
  }
}

TEST(TransientMean, ConstantInputSingleNode) {
  const Network net(chain_spec(0));
  const auto grid = TimeGrid::with_horizon(8.0, 0.01);
  const auto kernel = transition_kernel(net, grid);
  const std::vector<BoundInput> inputs{{0, AlmostPeriodicSignal::constant(3.0)}};
  const auto m = transient_mean(net, kernel, inputs);
  for (std::size_t k = 0; k < grid.size(); k += 50) {
    EXPECT_NEAR(m.mean[0][k], 3.0 * (1.0 - std::exp(-grid.at(k))), 1e-4);
  }
}

TEST(Spectral, ChainClosedForm) {
  const Network net(chain_spec(3));
  for (double sigma : {0.5, 1.0, 5.0}) {
    const auto g = spectral_response(net, sigma);
    const cd hop = 1.0 / cd(1.0, sigma);  // psi(-sigma) for Exp(1)
    for (int j = 0; j <= 3; ++j) {
      const cd expected = std::pow(hop, j) * hop;
      EXPECT_NEAR(std::abs(g.response(0, j) - expected), 0.0, 1e-14) << "j=" << j;
    }
  }
}

// Uniform(b) hops: psi(-sigma) = (1 - e^{-i sigma b}) / (i sigma b), and the
// survival transform is (1 - psi(-sigma)) / (i sigma).
TEST(Spectral, UniformChainClosedForm) {
  const double b = 1.5;
  const Network net(chain_spec(2, DelayDistribution::uniform(b)));
  for (double sigma : {0.4, 2.0, 7.0}) {
    const auto g = spectral_response(net, sigma);
    const cd is(0.0, sigma);
    const cd hop = (1.0 - std::exp(-is * b)) / (is * b);
    const cd stay = (1.0 - hop) / is;
    for (int j = 0; j <= 2; ++j) {
      EXPECT_NEAR(std::abs(g.response(0, j) - std::pow(hop, j) * stay), 0.0, 1e-13) << "j=" << j;
    }
  }
}

TEST(Spectral, ZeroFrequencyIsVisitCountTimesSojourn) {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 30; ++k) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const Network net(testing::random_network(rng, n));
    const Eigen::MatrixXd b = testing::neumann_oracle(net.routing());
    const auto g0 = spectral_response(net, 0.0, InjectionSojourn::excluded);
    const auto g_tiny = spectral_response(net, 1e-10, InjectionSojourn::excluded);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double bm = b(i, j) * mean_sojourn(net, static_cast<std::size_t>(j));
        EXPECT_NEAR(std::abs(g0.response(i, j) - bm), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(g_tiny.response(i, j) - bm), 0.0, 1e-8);
      }
    }
  }
}

// Closed-form g against time-domain quadrature of the kernel.
TEST(SpectralProperty, MatchesKernelQuadrature) {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 6; ++k) {
    const Network net(testing::random_network(rng, 3));
    double mu = 0.0;
    for (std::size_t j = 0; j < net.size(); ++j) mu = std::max(mu, mean_sojourn(net, j));
    const auto grid = TimeGrid::with_horizon(40.0 * mu / (1.0 - net.spectral_radius()), 0.02);
    const auto kernel = transition_kernel(net, grid);
    for (double sigma : {0.3, 1.0, 2.5, 5.0, 10.0}) {
      const auto g = spectral_response(net, sigma);
      for (std::size_t j = 0; j < net.size(); ++j) {
        const auto& p = kernel.occupancy_of(0, j);
        cd q = 0.0;
        for (std::size_t m = 0; m < grid.size(); ++m) {
          const double w = (m == 0 || m + 1 == grid.size()) ? 0.5 : 1.0;
          q += w * std::exp(cd(0.0, -sigma * grid.at(m))) * p[m];
        }
        q *= grid.dt;
        EXPECT_NEAR(std::abs(g.response(0, static_cast<Eigen::Index>(j)) - q), 0.0, 1e-3)
            << "case " << k << " sigma=" << sigma << " j=" << j;
      }
    }
  }
}

TEST(LimitMean, TransientApproachesLimit) {
  const Network net(chain_spec(2));
  const auto grid = TimeGrid::with_horizon(30.0, 0.005);
  const auto kernel = transition_kernel(net, grid);
  const std::vector<BoundInput> inputs{{0, testing::two_plus_cos5()}};
  const auto m = transient_mean(net, kernel, inputs);
  const std::vector<double> late{29.0, 29.5, 30.0};
  const auto lim = limit_mean(net, inputs, late);
  const auto mr = resample(m, late);
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t t = 0; t < late.size(); ++t) EXPECT_NEAR(mr.mean[j][t], lim.trace.mean[j][t], 1e-4);
    EXPECT_NEAR(lim.steady(static_cast<Eigen::Index>(j)), 2.0, 1e-12);
  }
  EXPECT_LT(lim.max_imaginary, 1e-12);
}

TEST(Homeostasis, ChainDeviationIsTwentySixPower) {
  const Network net(chain_spec(4));
  const SignalSet signals{{"s", testing::two_plus_cos5()}};
  const auto report = homeostasis_report(net, signals, 5.0);
  ASSERT_TRUE(report.ok());
  for (const auto& node : report.nodes) {
    const double expected = std::pow(26.0, -(node.distance + 1) / 2.0);
    EXPECT_NEAR(node.deviation, expected, 1e-3 * expected);
    EXPECT_LE(node.deviation, node.bound);
  }
}

TEST(Homeostasis, ConstantInputHasNoDeviation) {
  const Network net(chain_spec(3));
  const SignalSet signals{{"s", AlmostPeriodicSignal::constant(2.0)}};
  const auto report = homeostasis_report(net, signals, 1.0);
  for (const auto& node : report.nodes) EXPECT_NEAR(node.deviation, 0.0, 1e-14);
}

TEST(Variance, SingleNodeClosedForm) {
  const Network net(chain_spec(0));
  const SignalSet signals{{"s", StationaryEnvironment{2.0, {{5.0, 1.0}}, 1}}};
  const auto v = variance_response(net, signals, 5.0);
  ASSERT_EQ(v.nodes.size(), 1u);
  EXPECT_NEAR(v.nodes[0].variance, 1.0 / 52.0, 1e-15);
  EXPECT_NEAR(v.nodes[0].mean, 2.0, 1e-14);
  EXPECT_TRUE(v.ok());
}

TEST(Variance, RejectsDeterministicOscillation) {
  const Network net(chain_spec(0));
  const SignalSet signals{{"s", testing::two_plus_cos5()}};
  EXPECT_THROW(variance_response(net, signals, 5.0), InvalidArgument);
}

// The envelope bounds the exact gap; the trapezoid discretization floor
// (about 1.7e-6 at dt = 0.002) is covered by the additive slack.
TEST(TransientGap, EnvelopeDominatesActualGap) {
  const Network net(chain_spec(2, DelayDistribution::gamma(2.0, 2.0)));
  const auto grid = TimeGrid::with_horizon(16.0, 0.002);
  const auto kernel = transition_kernel(net, grid);
  const std::vector<BoundInput> inputs{{0, testing::two_plus_cos5()}};
  const auto m = transient_mean(net, kernel, inputs);
  const auto lim = limit_mean(net, inputs, m.times);
  const auto bound = transient_gap_bound(net, kernel, inputs);
  for (std::size_t j = 0; j < net.size(); ++j) {
    for (std::size_t k = 0; k < grid.size(); k += 200) {
      EXPECT_LE(std::abs(m.mean[j][k] - lim.trace.mean[j][k]), bound[j][k] + 2.5e-6) << j << " " << k;
    }
  }
}

}  // namespace
}  // namespace homeostat
