#include "homeostat/delay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>

#include "homeostat/error.hpp"

namespace homeostat {
namespace {

constexpr std::complex<double> kI{0.0, 1.0};

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// sum_n (-i sigma)^n E[X^{n+1}] / (n+1)!, the Taylor series of the survival
// transform around the origin.
std::complex<double> survival_series(const DelayDistribution& d, double sigma) {
  std::complex<double> sum = 0.0;
  std::complex<double> power = 1.0;  // (-i sigma)^n / (n+1)!
  for (int n = 0; n < 60; ++n) {
    power /= static_cast<double>(n + 1);
    const std::complex<double> term = power * d.moment(n + 1);
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    power *= -kI * sigma;
  }
  return sum;
}

}  // namespace

DelayDistribution DelayDistribution::exponential(double rate) {
  if (!positive_finite(rate)) {
    throw InvalidArgument("exponential delay requires rate > 0, got " + std::to_string(rate));
  }
  return {Family::exponential, 1.0, rate};
}

DelayDistribution DelayDistribution::gamma(double shape, double rate) {
  if (!positive_finite(shape) || !positive_finite(rate)) {
    throw InvalidArgument("gamma delay requires shape > 0 and rate > 0");
  }
  return {Family::gamma, shape, rate};
}

DelayDistribution DelayDistribution::uniform(double upper) {
  if (!positive_finite(upper)) {
    throw InvalidArgument("uniform delay requires upper bound > 0, got " + std::to_string(upper));
  }
  return {Family::uniform, upper, 0.0};
}

std::string DelayDistribution::name() const {
  switch (family_) {
    case Family::exponential: return "exponential";
    case Family::gamma: return "gamma";
    case Family::uniform: return "uniform";
  }
  return "unknown";
}

double DelayDistribution::cdf(double t) const {
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::exponential: return -std::expm1(-second_ * t);
    case Family::gamma: return boost::math::gamma_p(first_, second_ * t);
    case Family::uniform: return std::min(1.0, t / first_);
  }
  return 0.0;
}

double DelayDistribution::partial_expectation(double t) const {
  if (t <= 0.0) return 0.0;
  switch (family_) {
    case Family::exponential: {
      // (1 - e^{-x} (1 + x)) / rate, x = rate t
      const double x = second_ * t;
      return (-std::expm1(-x) - x * std::exp(-x)) / second_;
    }
    case Family::gamma: return first_ / second_ * boost::math::gamma_p(first_ + 1.0, second_ * t);
    case Family::uniform: {
      const double x = std::min(t, first_);
      return x * x / (2.0 * first_);
    }
  }
  return 0.0;
}

double DelayDistribution::pdf(double t) const {
  if (t < 0.0) return 0.0;
  switch (family_) {
    case Family::exponential: return second_ * std::exp(-second_ * t);
    case Family::gamma:
      if (t == 0.0) {
        if (first_ < 1.0) return std::numeric_limits<double>::infinity();
        return first_ == 1.0 ? second_ : 0.0;
      }
      return second_ * boost::math::gamma_p_derivative(first_, second_ * t);
    case Family::uniform:
      if (t < first_) return 1.0 / first_;
      return t == first_ ? 0.5 / first_ : 0.0;
  }
  return 0.0;
}

double DelayDistribution::mean() const {
  switch (family_) {
    case Family::exponential: return 1.0 / second_;
    case Family::gamma: return first_ / second_;
    case Family::uniform: return 0.5 * first_;
  }
  return 0.0;
}

double DelayDistribution::moment(int n) const {
  if (n < 0) throw InvalidArgument("moment order must be non-negative");
  double m = 1.0;
  switch (family_) {
    case Family::exponential:
      for (int k = 1; k <= n; ++k) m *= k / second_;
      return m;
    case Family::gamma:
      for (int k = 0; k < n; ++k) m *= (first_ + k) / second_;
      return m;
    case Family::uniform:
      return std::pow(first_, n) / (n + 1);
  }
  return m;
}

std::complex<double> DelayDistribution::characteristic(double sigma) const {
  switch (family_) {
    case Family::exponential:
      return second_ / std::complex<double>(second_, -sigma);
    case Family::gamma:
      return std::exp(-first_ * std::log(std::complex<double>(1.0, -sigma / second_)));
    case Family::uniform: {
      const double x = sigma * first_;
      if (std::abs(x) < 1e-4) {
        // 1 + ix/2 - x^2/6 - i x^3/24
        return {1.0 - x * x / 6.0, x / 2.0 - x * x * x / 24.0};
      }
      return (std::exp(kI * x) - 1.0) / (kI * x);
    }
  }
  return 1.0;
}

std::complex<double> DelayDistribution::survival_transform(double sigma) const {
  switch (family_) {
    case Family::exponential:
      return 1.0 / std::complex<double>(second_, sigma);
    case Family::gamma:
      if (std::abs(sigma) < 0.1 * second_) return survival_series(*this, sigma);
      break;
    case Family::uniform:
      if (std::abs(sigma) * first_ < 1.0) return survival_series(*this, sigma);
      break;
  }
  return (1.0 - characteristic(-sigma)) / (kI * sigma);
}

double DelayDistribution::modulus_envelope(double sigma) const {
  const double s = std::abs(sigma);
  switch (family_) {
    case Family::exponential:
    case Family::gamma:
      return std::pow(1.0 + (s / second_) * (s / second_), -0.5 * first_);
    case Family::uniform:
      return s * first_ <= 2.0 ? 1.0 : 2.0 / (s * first_);
  }
  return 1.0;
}

double DelayDistribution::sample(std::mt19937_64& rng) const {
  switch (family_) {
    case Family::exponential:
      return std::exponential_distribution<double>(second_)(rng);
    case Family::gamma:
      return std::gamma_distribution<double>(first_, 1.0 / second_)(rng);
    case Family::uniform:
      return std::uniform_real_distribution<double>(0.0, first_)(rng);
  }
  return 0.0;
}

double attenuation(std::span<const DelayDistribution> factors, double gap,
                   double points_per_unit) {
  if (factors.empty()) throw InvalidArgument("attenuation of an empty hop is undefined");
  if (!(gap > 0.0) || !std::isfinite(gap)) throw InvalidArgument("spectral gap must be > 0");
  if (!(points_per_unit > 0.0)) throw InvalidArgument("grid density must be > 0");

  auto modulus = [&](double sigma) {
    double m = 1.0;
    for (const auto& f : factors) m *= std::abs(f.characteristic(sigma));
    return m;
  };
  auto envelope = [&](double sigma) {
    double m = 1.0;
    for (const auto& f : factors) m *= f.modulus_envelope(sigma);
    return m;
  };

  const bool monotone = std::all_of(factors.begin(), factors.end(),
                                    [](const auto& f) { return f.modulus_is_monotone(); });
  if (monotone) return modulus(gap);

  const double step = 1.0 / points_per_unit;
  constexpr long kMaxPoints = 200'000'000;
  double best = modulus(gap);
  double best_sigma = gap;
  long k = 1;
  for (; k < kMaxPoints; ++k) {
    const double sigma = gap + static_cast<double>(k) * step;
    const double m = modulus(sigma);
    if (m > best) {
      best = m;
      best_sigma = sigma;
    }
    if (envelope(sigma) <= best) break;
  }
  if (k == kMaxPoints) {
    // Budget exhausted: fall back to the envelope, which is an upper bound.
    return std::max(best, envelope(gap + static_cast<double>(k) * step));
  }

  // Golden-section refinement of the grid maximum.
  double lo = std::max(gap, best_sigma - step);
  double hi = best_sigma + step;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = modulus(x1);
  double f2 = modulus(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = modulus(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = modulus(x1);
    }
  }
  return std::max({best, f1, f2});
}

double attenuation(const DelayDistribution& delay, double gap, double points_per_unit) {
  return attenuation(std::span<const DelayDistribution>(&delay, 1), gap, points_per_unit);
}

}  // namespace homeostat
