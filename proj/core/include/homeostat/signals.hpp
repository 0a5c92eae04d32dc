#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace homeostat {

// One harmonic c * exp(i sigma t) with sigma > 0; its conjugate partner
// conj(c) * exp(-i sigma t) is implied.
struct FourierTerm {
  double frequency = 0.0;
  std::complex<double> coefficient;
};

// A non-negative input rate given as a finite Fourier sum
//   lambda(t) = c0 + sum_k [c_k exp(i sigma_k t) + conj(c_k) exp(-i sigma_k t)].
// Non-negativity is guaranteed by requiring sum over +-sigma of |c_k| <= c0.
class AlmostPeriodicSignal {
 public:
  AlmostPeriodicSignal() = default;
  AlmostPeriodicSignal(double mean, std::vector<FourierTerm> terms);
  static AlmostPeriodicSignal constant(double mean) { return {mean, {}}; }

  double mean() const noexcept { return mean_; }
  std::span<const FourierTerm> terms() const noexcept { return terms_; }
  bool is_constant() const noexcept { return terms_.empty(); }

  double operator()(double t) const;
  // Same sum accumulated over both conjugate halves in complex arithmetic.
  std::complex<double> evaluate_complex(double t) const;

  // sum over sigma = +-sigma_k of |c(sigma)|, optionally including |c0|.
  double coefficient_sum(bool include_mean = false) const noexcept;
  // Upper bound L on |lambda(t)|: c0 + coefficient_sum().
  double envelope() const noexcept { return mean_ + coefficient_sum(); }
  double min_frequency() const noexcept;
  double max_frequency() const noexcept;

  AlmostPeriodicSignal scaled(double factor) const;

 private:
  double mean_ = 0.0;
  std::vector<FourierTerm> terms_;
};

// (1/T) * integral over [0, T] of lambda(s) exp(-i sigma s) ds by the
// trapezoid rule on uniformly spaced samples, T = (n - 1) dt.
std::complex<double> fourier_coefficient(std::span<const double> samples, double dt,
                                         double sigma);

struct Harmonic {
  double frequency = 0.0;  // > 0
  double amplitude = 0.0;  // > 0
};

// Stationary random input lambda(t, w) = mean + sum_k a_k cos(sigma_k t + phi_k)
// with phases phi_k i.i.d. uniform on [0, 2 pi).
class StationaryEnvironment {
 public:
  StationaryEnvironment() = default;
  StationaryEnvironment(double mean, std::vector<Harmonic> harmonics, std::uint64_t seed = 0);

  double mean() const noexcept { return mean_; }
  std::span<const Harmonic> harmonics() const noexcept { return harmonics_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Total spectral mass: sum a_k^2 / 2.
  double variance() const noexcept;
  // Almost-sure bound L = mean + sum a_k.
  double envelope() const noexcept;

 private:
  double mean_ = 0.0;
  std::vector<Harmonic> harmonics_;
  std::uint64_t seed_ = 0;
};

// One realization of the environment: c_k = (a_k / 2) exp(i phi_k).
AlmostPeriodicSignal realize(const StationaryEnvironment& env, std::uint64_t seed);
inline AlmostPeriodicSignal realize(const StationaryEnvironment& env) {
  return realize(env, env.seed());
}

struct SpectralAtom {
  double frequency = 0.0;
  double mass = 0.0;
};

// Atoms (+-sigma_k, a_k^2 / 4), ordered by frequency.
std::vector<SpectralAtom> spectral_measure(const StationaryEnvironment& env);

using Signal = std::variant<AlmostPeriodicSignal, StationaryEnvironment>;
using SignalSet = std::map<std::string, Signal>;

// Deterministic view of any signal: environments are realized with their own seed.
AlmostPeriodicSignal as_almost_periodic(const Signal& signal);
double envelope(const Signal& signal);
double mean_rate(const Signal& signal);

}  // namespace homeostat
