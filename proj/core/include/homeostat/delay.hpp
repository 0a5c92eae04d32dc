#pragma once

#include <complex>
#include <random>
#include <span>
#include <string>

namespace homeostat {

// Travel-time distribution of a single hop. Only families whose characteristic
// function is strictly below one in modulus away from the origin are
// representable; lattice and deterministic delays have no constructor.
class DelayDistribution {
 public:
  enum class Family { exponential, gamma, uniform };

  static DelayDistribution exponential(double rate);
  static DelayDistribution gamma(double shape, double rate);
  // Uniform on (0, upper).
  static DelayDistribution uniform(double upper);

  Family family() const noexcept { return family_; }
  std::string name() const;

  // Family parameters: exponential (rate), gamma (shape, rate), uniform (upper).
  double rate() const noexcept { return second_; }
  double shape() const noexcept { return first_; }
  double upper() const noexcept { return first_; }

  double cdf(double t) const;
  double survival(double t) const { return 1.0 - cdf(t); }
  // Right-continuous density; the uniform density takes its midpoint value at
  // the jump t = upper so that trapezoid sums integrate it correctly there.
  double pdf(double t) const;
  double mean() const;
  // E[X; X <= t], the mean restricted to [0, t].
  double partial_expectation(double t) const;
  // E[X^n] for n >= 0.
  double moment(int n) const;

  // psi(sigma) = E exp(i sigma X).
  std::complex<double> characteristic(double sigma) const;
  // Integral over s >= 0 of exp(-i sigma s) (1 - F(s)), equal to
  // (1 - psi(-sigma)) / (i sigma); evaluated without cancellation near 0 and
  // equal to mean() at sigma = 0.
  std::complex<double> survival_transform(double sigma) const;

  // Non-increasing function of |sigma| bounding |psi(sigma)| from above.
  double modulus_envelope(double sigma) const;
  // True when |psi| itself is non-increasing in |sigma|.
  bool modulus_is_monotone() const noexcept { return family_ != Family::uniform; }

  double sample(std::mt19937_64& rng) const;

  friend bool operator==(const DelayDistribution&, const DelayDistribution&) = default;

 private:
  DelayDistribution(Family family, double first, double second)
      : family_(family), first_(first), second_(second) {}

  Family family_;
  double first_;   // shape (gamma) or upper (uniform); 1 for exponential
  double second_;  // rate (exponential, gamma); unused for uniform
};

// sup over |sigma| >= a of |prod_k psi_k(sigma)| for a hop whose travel time is
// the sum of independent delays. Monotone products are exact at sigma = a;
// otherwise a grid with `points_per_unit` samples per unit frequency is
// scanned until the product envelope drops below the running maximum, and the
// best grid point is refined locally.
double attenuation(std::span<const DelayDistribution> factors, double gap,
                   double points_per_unit = 1e4);
double attenuation(const DelayDistribution& delay, double gap,
                   double points_per_unit = 1e4);

}  // namespace homeostat
