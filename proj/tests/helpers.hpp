#pragma once

#include <cmath>
#include <numbers>

#include "dtdft/grid.hpp"

namespace testing {

inline constexpr double pi = std::numbers::pi;

inline dtdft::ScalarField gaussian(const dtdft::Grid& g, double centre, double sigma2, double mass = 1.0) {
  const double norm = mass / std::sqrt(2.0 * pi * sigma2);
  return dtdft::sample(g, [&](double x) {
    double d = x - centre;
    if (g.periodic()) d -= g.length() * std::round(d / g.length());
    return norm * std::exp(-d * d / (2.0 * sigma2));
  });
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace testing
