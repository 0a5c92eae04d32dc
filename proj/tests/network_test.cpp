#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "homeostat/error.hpp"
#include "homeostat/network.hpp"
#include "test_support.hpp"

namespace homeostat {
namespace {

using testing::chain_spec;
using testing::exp1;

bool has_error_at(const ValidationReport& r, const NodeId& node) {
  for (const auto& d : r.diagnostics) {
    if (d.severity == Diagnostic::Severity::error && d.node == node) return true;
  }
  return false;
}

TEST(Validate, AcceptsChain) {
  const auto r = validate(chain_spec(3));
  EXPECT_TRUE(r.ok()) << r.summary();
  EXPECT_NEAR(r.spectral_radius, 0.0, 1e-12);
}

TEST(Validate, RowSumViolationNamesNode) {
  auto spec = chain_spec(2);
  spec.edges[1].prob = 0.9;
  const auto r = validate(spec);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(has_error_at(r, {2, 1}));
  EXPECT_NE(r.summary().find("(2,1)"), std::string::npos);
}

TEST(Validate, RejectsRecurrentRouting) {
  NetworkSpec spec;
  spec.compartments = 2;
  spec.types = 1;
  spec.edges = {{{1, 1}, {2, 1}, 1.0, exp1()}, {{2, 1}, {1, 1}, 1.0, exp1()}};
  spec.inputs = {{{1, 1}, "s"}};
  const auto r = validate(spec);
  EXPECT_FALSE(r.ok());
  EXPECT_NEAR(r.spectral_radius, 1.0, 1e-12);
  EXPECT_THROW(Network{spec}, InvalidNetwork);
}

TEST(Validate, RejectsMalformedEdges) {
  auto spec = chain_spec(1);
  spec.edges.push_back({{1, 1}, {3, 1}, 0.5, exp1()});
  EXPECT_FALSE(validate(spec).ok());

  spec = chain_spec(1);
  spec.edges.push_back({{2, 1}, {1, 1}, 0.0, exp1()});
  EXPECT_FALSE(validate(spec).ok());

  spec = chain_spec(1);
  spec.edges[0].prob = 0.5;
  spec.edges.push_back({{1, 1}, {2, 1}, 0.5, exp1()});
  EXPECT_FALSE(validate(spec).ok());

  spec = chain_spec(1);
  spec.inputs.push_back({{5, 1}, "s"});
  EXPECT_FALSE(validate(spec).ok());
}

TEST(Validate, WarnsOnUnreachableNodes) {
  auto spec = chain_spec(1);
  spec.compartments = 3;
  spec.exits.push_back({{3, 1}, 1.0, exp1()});
  const auto r = validate(spec);
  EXPECT_TRUE(r.ok());
  bool warned = false;
  for (const auto& d : r.diagnostics) warned |= d.severity == Diagnostic::Severity::warning && d.node == NodeId{3, 1};
  EXPECT_TRUE(warned);
}

TEST(Network, RoutesListEdgesThenExit) {
  const Network net(chain_spec(2));
  ASSERT_EQ(net.size(), 3u);
  ASSERT_EQ(net.routes(0).size(), 1u);
  EXPECT_EQ(net.routes(0)[0].target, 1u);
  ASSERT_EQ(net.routes(2).size(), 1u);
  EXPECT_EQ(net.routes(2)[0].target, Network::exit);
  EXPECT_DOUBLE_EQ(net.exit_probability(2), 1.0);
  EXPECT_EQ(net.input_nodes().size(), 1u);
  EXPECT_TRUE(net.is_input(0));
}

// b = (I - P)^{-1} P matches the truncated Neumann series on random networks.
TEST(NetworkProperty, FundamentalMatrixMatchesNeumannSeries) {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 120; ++k) {
    const int n = 2 + static_cast<int>(rng() % 6);
    const Network net(testing::random_network(rng, n));
    const Eigen::MatrixXd b = fundamental_matrix(net);
    const Eigen::MatrixXd oracle = testing::neumann_oracle(net.routing());
    EXPECT_LT((b - oracle).cwiseAbs().maxCoeff(), 1e-10) << "case " << k;
    EXPECT_LT(net.spectral_radius(), 1.0);
    EXPECT_GE(b.minCoeff(), -1e-14);
  }
}

TEST(Network, SojournMixtureIncludesExitBranch) {
  NetworkSpec spec;
  spec.compartments = 2;
  spec.types = 1;
  spec.edges = {{{1, 1}, {2, 1}, 0.25, DelayDistribution::exponential(2.0)}};
  spec.exits = {{{1, 1}, 0.75, DelayDistribution::uniform(2.0)}, {{2, 1}, 1.0, exp1()}};
  spec.inputs = {{{1, 1}, "s"}};
  const Network net(spec);
  const SojournMixture f(net, 0);
  EXPECT_DOUBLE_EQ(f.mean(), 0.25 * 0.5 + 0.75 * 1.0);
  EXPECT_NEAR(testing::simpson([&](double t) { return f.survival(t); }, 0.0, 40.0, 400000), f.mean(), 1e-6);
  EXPECT_NEAR(std::abs(f.survival_transform(0.0) - f.mean()), 0.0, 1e-15);
  EXPECT_NEAR(f.cdf(1.0), 0.25 * (1.0 - std::exp(-2.0)) + 0.75 * 0.5, 1e-15);
}

TEST(Network, SteadyLevelsOfChain) {
  const Network net(chain_spec(3));
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(4);
  rates(0) = 2.0;
  const auto d = steady_levels(net, rates);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(d(j), 2.0, 1e-12);
  const auto d_ex = steady_levels(net, rates, InjectionSojourn::excluded);
  EXPECT_NEAR(d_ex(0), 0.0, 1e-12);
  EXPECT_NEAR(d_ex(1), 2.0, 1e-12);
}

// d_j = sum_i lambda_i (b(i,j) + [i == j]) mu_j against the Neumann oracle.
TEST(NetworkProperty, SteadyLevelsMatchOracle) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(rng() % 5);
    const Network net(testing::random_network(rng, n));
    Eigen::VectorXd rates = Eigen::VectorXd::Zero(n);
    rates(0) = 1.7;
    const Eigen::MatrixXd b = testing::neumann_oracle(net.routing());
    for (auto inj : {InjectionSojourn::included, InjectionSojourn::excluded}) {
      const auto d = steady_levels(net, rates, inj);
      for (int j = 0; j < n; ++j) {
        const double visits = b(0, j) + (inj == InjectionSojourn::included && j == 0 ? 1.0 : 0.0);
        EXPECT_NEAR(d(j), 1.7 * visits * mean_sojourn(net, j), 1e-10);
      }
    }
  }
}

TEST(Network, InputDistances) {
  const Network net(chain_spec(4));
  const auto dist = input_distances(net);
  for (int j = 0; j <= 4; ++j) EXPECT_EQ(dist[j], j);
  EXPECT_EQ(input_distance(net, 3), 3);
}

TEST(ClassParameters, ExponentialChainConstants) {
  const Network net(chain_spec(2));
  SignalSet signals{{"s", testing::two_plus_cos5()}};
  const auto p = class_parameters(net, signals, 5.0);
  EXPECT_NEAR(p.attenuation, 1.0 / std::sqrt(26.0), 1e-15);
  EXPECT_DOUBLE_EQ(p.coefficient_sum, 1.0);
  EXPECT_DOUBLE_EQ(p.coefficient_sum_with_mean, 3.0);
  EXPECT_NEAR(p.bound_constant, 2.0 / (5.0 * (1.0 - 1.0 / std::sqrt(26.0))), 1e-14);
  EXPECT_NEAR(p.deviation_bound(2), p.bound_constant / 26.0, 1e-15);
  EXPECT_DOUBLE_EQ(p.deviation_bound(kUnreachable), 0.0);
}

TEST(ClassParameters, UnitGapGivesRootHalf) {
  const Network net(chain_spec(1));
  SignalSet signals{{"s", AlmostPeriodicSignal{2.0, {{1.0, {0.5, 0.0}}}}}};
  EXPECT_NEAR(class_parameters(net, signals, 1.0).attenuation, 0.70711, 1e-5);
}

TEST(ClassParameters, RejectsFrequencyInsideGap) {
  const Network net(chain_spec(1));
  SignalSet signals{{"s", testing::two_plus_cos5()}};
  EXPECT_THROW(class_parameters(net, signals, 6.0), ClassConditionError);
  EXPECT_THROW(class_parameters(net, signals, 0.0), InvalidArgument);
}

TEST(BindInputs, MissingSignalIsNamed) {
  const Network net(chain_spec(1, exp1(), "absent"));
  SignalSet signals{{"s", testing::two_plus_cos5()}};
  try {
    bind_inputs(net, signals);
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("absent"), std::string::npos);
  }
}

}  // namespace
}  // namespace homeostat
