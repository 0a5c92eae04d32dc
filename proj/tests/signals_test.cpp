#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "homeostat/error.hpp"
#include "homeostat/signals.hpp"

namespace homeostat {
namespace {

TEST(AlmostPeriodic, EvaluatesRealSum) {
  const AlmostPeriodicSignal s{2.0, {{5.0, {0.5, 0.0}}}};
  for (double t : {0.0, 0.3, 1.7, 10.0}) {
    EXPECT_NEAR(s(t), 2.0 + std::cos(5.0 * t), 1e-14);
    EXPECT_NEAR(s.evaluate_complex(t).real(), s(t), 1e-14);
    EXPECT_NEAR(s.evaluate_complex(t).imag(), 0.0, 1e-14);
  }
  EXPECT_DOUBLE_EQ(s.coefficient_sum(), 1.0);
  EXPECT_DOUBLE_EQ(s.coefficient_sum(true), 3.0);
  EXPECT_DOUBLE_EQ(s.envelope(), 3.0);
  EXPECT_DOUBLE_EQ(s.min_frequency(), 5.0);
}

TEST(AlmostPeriodic, RejectsPossiblyNegativeRates) {
  EXPECT_THROW(AlmostPeriodicSignal(1.0, {{1.0, {0.6, 0.0}}}), InvalidArgument);
  EXPECT_THROW(AlmostPeriodicSignal(1.0, {{0.0, {0.1, 0.0}}}), InvalidArgument);
  EXPECT_THROW(AlmostPeriodicSignal(1.0, {{-2.0, {0.1, 0.0}}}), InvalidArgument);
  EXPECT_THROW(AlmostPeriodicSignal(-1.0, {}), InvalidArgument);
  EXPECT_NO_THROW(AlmostPeriodicSignal(1.0, {{1.0, {0.5, 0.0}}}));
}

TEST(AlmostPeriodicProperty, NonNegativeAndBoundedByEnvelope) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    std::vector<FourierTerm> terms;
    const int m = 1 + static_cast<int>(rng() % 4);
    double budget = 0.0;
    for (int i = 0; i < m; ++i) {
      const std::complex<double> c(u(rng) - 0.5, u(rng) - 0.5);
      terms.push_back({0.5 + 10.0 * u(rng), c});
      budget += 2.0 * std::abs(c);
    }
    const AlmostPeriodicSignal s(budget * (1.0 + u(rng)), terms);
    for (int i = 0; i < 200; ++i) {
      const double t = 100.0 * u(rng);
      EXPECT_GE(s(t), -1e-12);
      EXPECT_LE(s(t), s.envelope() + 1e-12);
    }
  }
}

TEST(AlmostPeriodic, FourierCoefficientRecoversTerms) {
  const AlmostPeriodicSignal s{3.0, {{2.0, {0.4, -0.3}}, {5.0, {0.2, 0.1}}}};
  const double period = 2.0 * std::numbers::pi;  // common period of 2 and 5
  const int n = 20001;
  const double dt = 20.0 * period / (n - 1);
  std::vector<double> samples(n);
  for (int k = 0; k < n; ++k) samples[k] = s(k * dt);
  EXPECT_NEAR(std::abs(fourier_coefficient(samples, dt, 2.0) - std::complex<double>(0.4, -0.3)), 0.0, 1e-6);
  EXPECT_NEAR(std::abs(fourier_coefficient(samples, dt, -5.0) - std::complex<double>(0.2, -0.1)), 0.0, 1e-6);
  EXPECT_NEAR(std::abs(fourier_coefficient(samples, dt, 0.0) - 3.0), 0.0, 1e-6);
  EXPECT_NEAR(std::abs(fourier_coefficient(samples, dt, 3.0)), 0.0, 1e-6);
}

TEST(AlmostPeriodic, ScaledMultipliesEverything) {
  const AlmostPeriodicSignal s{2.0, {{5.0, {0.5, 0.2}}}};
  const auto big = s.scaled(100.0);
  for (double t : {0.0, 0.4, 3.3}) EXPECT_NEAR(big(t), 100.0 * s(t), 1e-11);
}

TEST(Stationary, EnvironmentInvariants) {
  const StationaryEnvironment env{2.0, {{5.0, 1.0}}, 42};
  EXPECT_DOUBLE_EQ(env.variance(), 0.5);
  EXPECT_DOUBLE_EQ(env.envelope(), 3.0);
  EXPECT_THROW(StationaryEnvironment(1.0, {{5.0, 1.5}}), InvalidArgument);
  EXPECT_THROW(StationaryEnvironment(1.0, {{0.0, 0.5}}), InvalidArgument);

  const auto atoms = spectral_measure(env);
  ASSERT_EQ(atoms.size(), 2u);
  EXPECT_DOUBLE_EQ(atoms[0].frequency, -5.0);
  EXPECT_DOUBLE_EQ(atoms[1].frequency, 5.0);
  EXPECT_DOUBLE_EQ(atoms[0].mass + atoms[1].mass, env.variance());
}

TEST(Stationary, RealizationIsSeededAndHasFixedModulus) {
  const StationaryEnvironment env{2.0, {{5.0, 1.0}, {7.0, 0.6}}, 42};
  const auto a = realize(env, 9);
  const auto b = realize(env, 9);
  const auto c = realize(env, 10);
  ASSERT_EQ(a.terms().size(), 2u);
  EXPECT_EQ(a.terms()[0].coefficient, b.terms()[0].coefficient);
  EXPECT_NE(a.terms()[0].coefficient, c.terms()[0].coefficient);
  EXPECT_NEAR(std::abs(a.terms()[0].coefficient), 0.5, 1e-15);
  EXPECT_NEAR(std::abs(a.terms()[1].coefficient), 0.3, 1e-15);
  EXPECT_DOUBLE_EQ(a.mean(), 2.0);
}

// Across realizations lambda(t) has mean c0 and variance sum a_k^2 / 2.
TEST(Stationary, EnsembleMomentsMatchSpectralMass) {
  const StationaryEnvironment env{2.0, {{5.0, 1.0}, {7.0, 0.6}}, 42};
  const int n = 40000;
  double s = 0.0, s2 = 0.0;
  for (int r = 0; r < n; ++r) {
    const double x = realize(env, static_cast<std::uint64_t>(r))(1.234);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, 2.0, 5.0 * std::sqrt(env.variance() / n));
  EXPECT_NEAR(var, env.variance(), 0.03 * env.variance());
}

TEST(SignalVariant, Helpers) {
  const Signal ap = AlmostPeriodicSignal{1.0, {{1.0, {0.25, 0.0}}}};
  const Signal env = StationaryEnvironment{2.0, {{5.0, 1.0}}, 3};
  EXPECT_DOUBLE_EQ(envelope(ap), 1.5);
  EXPECT_DOUBLE_EQ(envelope(env), 3.0);
  EXPECT_DOUBLE_EQ(mean_rate(env), 2.0);
  EXPECT_EQ(as_almost_periodic(env).terms()[0].coefficient,
            realize(std::get<StationaryEnvironment>(env)).terms()[0].coefficient);
}

}  // namespace
}  // namespace homeostat
