#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "homeostat/delay.hpp"

namespace homeostat::detail {

// Product-trapezoid weights of int_0^t c(t - u) dF(u) for piecewise-linear c
// on a step-h grid: point l collects the down-ramp mass of cell [l h, (l+1) h]
// and the up-ramp mass of cell [(l-1) h, l h]. up[c] is the up-ramp part of
// cell c, so the truncated weight at l = m is up[m - 1].
struct MemoryWeights {
  std::vector<double> point;  // full weight of point l (l < steps)
  std::vector<double> up;     // up-ramp weight of cell l
};

inline MemoryWeights memory_weights(const DelayDistribution& d, double h, std::size_t steps) {
  MemoryWeights w;
  w.point.assign(steps + 1, 0.0);
  w.up.assign(steps + 1, 0.0);
  std::vector<double> down(steps + 1, 0.0);
  double f_lo = 0.0;
  double pe_lo = 0.0;
  for (std::size_t c = 0; c <= steps; ++c) {
    const double a = h * static_cast<double>(c);
    const double b = h * static_cast<double>(c + 1);
    const double f_hi = d.cdf(b);
    const double pe_hi = d.partial_expectation(b);
    const double mass = f_hi - f_lo;
    const double up = std::clamp((pe_hi - pe_lo - a * mass) / h, 0.0, std::max(mass, 0.0));
    w.up[c] = up;
    down[c] = mass - up;
    f_lo = f_hi;
    pe_lo = pe_hi;
  }
  for (std::size_t l = 0; l <= steps; ++l) w.point[l] = down[l] + (l > 0 ? w.up[l - 1] : 0.0);
  return w;
}

}  // namespace homeostat::detail
