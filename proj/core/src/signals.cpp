#include "homeostat/signals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "homeostat/error.hpp"
#include "homeostat/rng.hpp"

namespace homeostat {

AlmostPeriodicSignal::AlmostPeriodicSignal(double mean, std::vector<FourierTerm> terms)
    : mean_(mean), terms_(std::move(terms)) {
  if (!std::isfinite(mean_) || mean_ < 0.0) {
    throw InvalidArgument("signal mean must be finite and non-negative");
  }
  for (const auto& term : terms_) {
    if (!std::isfinite(term.frequency) || !(term.frequency > 0.0)) {
      throw InvalidArgument("signal terms are stored with frequency > 0 only");
    }
    if (!std::isfinite(term.coefficient.real()) || !std::isfinite(term.coefficient.imag())) {
      throw InvalidArgument("signal coefficient is not finite");
    }
  }
  if (coefficient_sum() > mean_ * (1.0 + 1e-12)) {
    throw InvalidArgument("signal may go negative: sum of |c_k| exceeds the mean c0");
  }
}

double AlmostPeriodicSignal::operator()(double t) const {
  double value = mean_;
  for (const auto& term : terms_) {
    value += 2.0 * std::real(term.coefficient * std::polar(1.0, term.frequency * t));
  }
  return value;
}

std::complex<double> AlmostPeriodicSignal::evaluate_complex(double t) const {
  std::complex<double> value = mean_;
  for (const auto& term : terms_) {
    value += term.coefficient * std::polar(1.0, term.frequency * t);
    value += std::conj(term.coefficient) * std::polar(1.0, -term.frequency * t);
  }
  return value;
}

double AlmostPeriodicSignal::coefficient_sum(bool include_mean) const noexcept {
  double sum = include_mean ? std::abs(mean_) : 0.0;
  for (const auto& term : terms_) sum += 2.0 * std::abs(term.coefficient);
  return sum;
}

double AlmostPeriodicSignal::min_frequency() const noexcept {
  double m = 0.0;
  for (const auto& term : terms_) m = (m == 0.0) ? term.frequency : std::min(m, term.frequency);
  return m;
}

double AlmostPeriodicSignal::max_frequency() const noexcept {
  double m = 0.0;
  for (const auto& term : terms_) m = std::max(m, term.frequency);
  return m;
}

AlmostPeriodicSignal AlmostPeriodicSignal::scaled(double factor) const {
  if (!(factor >= 0.0)) throw InvalidArgument("signal scale factor must be non-negative");
  std::vector<FourierTerm> terms = terms_;
  for (auto& term : terms) term.coefficient *= factor;
  return {mean_ * factor, std::move(terms)};
}

std::complex<double> fourier_coefficient(std::span<const double> samples, double dt,
                                         double sigma) {
  if (samples.size() < 2 || !(dt > 0.0)) {
    throw InvalidArgument("fourier_coefficient needs at least two samples and dt > 0");
  }
  const std::size_t last = samples.size() - 1;
  std::complex<double> sum = 0.0;
  for (std::size_t m = 0; m <= last; ++m) {
    const double weight = (m == 0 || m == last) ? 0.5 : 1.0;
    sum += weight * samples[m] * std::polar(1.0, -sigma * dt * static_cast<double>(m));
  }
  const double horizon = dt * static_cast<double>(last);
  return sum * dt / horizon;
}

StationaryEnvironment::StationaryEnvironment(double mean, std::vector<Harmonic> harmonics,
                                             std::uint64_t seed)
    : mean_(mean), harmonics_(std::move(harmonics)), seed_(seed) {
  if (!std::isfinite(mean_) || mean_ < 0.0) {
    throw InvalidArgument("environment mean must be finite and non-negative");
  }
  double amplitude_sum = 0.0;
  for (const auto& h : harmonics_) {
    if (!std::isfinite(h.frequency) || !(h.frequency > 0.0)) {
      throw InvalidArgument("environment harmonics need frequency > 0");
    }
    if (!std::isfinite(h.amplitude) || !(h.amplitude > 0.0)) {
      throw InvalidArgument("environment harmonics need amplitude > 0");
    }
    amplitude_sum += h.amplitude;
  }
  if (amplitude_sum > mean_ * (1.0 + 1e-12)) {
    throw InvalidArgument("environment may go negative: sum of amplitudes exceeds the mean");
  }
}

double StationaryEnvironment::variance() const noexcept {
  double v = 0.0;
  for (const auto& h : harmonics_) v += 0.5 * h.amplitude * h.amplitude;
  return v;
}

double StationaryEnvironment::envelope() const noexcept {
  double l = mean_;
  for (const auto& h : harmonics_) l += h.amplitude;
  return l;
}

AlmostPeriodicSignal realize(const StationaryEnvironment& env, std::uint64_t seed) {
  std::mt19937_64 rng(stream_seed(seed, 0));
  std::vector<FourierTerm> terms;
  terms.reserve(env.harmonics().size());
  for (const auto& h : env.harmonics()) {
    const double phase = 2.0 * std::numbers::pi * uniform01(rng);
    terms.push_back({h.frequency, std::polar(0.5 * h.amplitude, phase)});
  }
  return {env.mean(), std::move(terms)};
}

std::vector<SpectralAtom> spectral_measure(const StationaryEnvironment& env) {
  std::vector<SpectralAtom> atoms;
  atoms.reserve(2 * env.harmonics().size());
  for (const auto& h : env.harmonics()) {
    const double mass = 0.25 * h.amplitude * h.amplitude;
    atoms.push_back({-h.frequency, mass});
    atoms.push_back({h.frequency, mass});
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const auto& x, const auto& y) { return x.frequency < y.frequency; });
  return atoms;
}

AlmostPeriodicSignal as_almost_periodic(const Signal& signal) {
  if (const auto* ap = std::get_if<AlmostPeriodicSignal>(&signal)) return *ap;
  return realize(std::get<StationaryEnvironment>(signal));
}

double envelope(const Signal& signal) {
  return std::visit([](const auto& s) { return s.envelope(); }, signal);
}

double mean_rate(const Signal& signal) {
  return std::visit([](const auto& s) { return s.mean(); }, signal);
}

}  // namespace homeostat
