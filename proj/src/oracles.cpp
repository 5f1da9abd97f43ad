#include "dtdft/oracles.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dtdft/error.hpp"

namespace dtdft::oracles {

DispersionParams DispersionParams::from_model(const ModelParams& p, double sigma0_sq) {
  DispersionParams dp;
  dp.sigma0_sq = sigma0_sq;
  const double kT = p.kT();
  dp.D = kT / p.b;
  dp.lambdaT2 = kT > 0.0 ? p.units.hbar * p.units.hbar / (4.0 * p.units.m * kT)
                         : std::numeric_limits<double>::infinity();
  return dp;
}

double dispersion_sigma2(double t, const DispersionParams& dp) {
  if (t < 0.0) throw std::invalid_argument("dispersion_sigma2: t < 0");
  const double s0 = dp.sigma0_sq;
  const double lam = dp.lambdaT2;
  const double rhs = 2.0 * dp.D * t;
  if (rhs == 0.0) return s0;
  if (lam == 0.0) return s0 + rhs;
  if (!std::isfinite(lam)) throw std::invalid_argument("dispersion_sigma2: T = 0, use zero_temperature_sigma2");

  // G is increasing in s with G(s0) = -rhs < 0.
  auto G = [&](double s) { return s - s0 - lam * std::log1p((s - s0) / (lam + s0)) - rhs; };
  double lo = s0;
  double hi = s0 + rhs + 4.0 * lam;
  while (G(hi) < 0.0) hi = s0 + 2.0 * (hi - s0);
  for (int it = 0; it < 200 && (hi - lo) > 1e-6 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (G(mid) < 0.0 ? lo : hi) = mid;
  }
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 50; ++it) {
    const double step = G(s) * (lam + s) / s;
    double next = s - step;
    if (next <= lo || next >= hi) next = 0.5 * (lo + hi);
    (G(next) < 0.0 ? lo : hi) = next;
    if (std::abs(next - s) <= 1e-15 * next) {
      s = next;
      break;
    }
    s = next;
  }
  return s;
}

double zero_temperature_sigma2(double t, const ModelParams& p, double sigma0_sq) {
  if (t < 0.0) throw std::invalid_argument("zero_temperature_sigma2: t < 0");
  const auto& u = p.units;
  return std::sqrt(sigma0_sq * sigma0_sq + u.hbar * u.hbar * t / (u.m * p.b));
}

double quantum_diffusion_coefficient(double sigma2, const ModelParams& p) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("quantum_diffusion_coefficient: variance must be > 0");
  const auto& u = p.units;
  return u.hbar * u.hbar / (4.0 * u.m * p.b * sigma2);
}

double harmonic_stationary_variance(double T, double omega, const ModelParams& p) {
  if (!(omega > 0.0)) throw std::invalid_argument("harmonic_stationary_variance: omega must be > 0");
  const auto& u = p.units;
  const double kT = u.kB * T;
  const double hw = u.hbar * omega;
  return (kT + std::sqrt(kT * kT + hw * hw)) / (2.0 * u.m * omega * omega);
}

double measure_mean(const Grid& g, std::span<const double> rho) {
  double mass = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) mass += g.weight(i) * rho[i];
  if (!(mass > 0.0)) throw std::invalid_argument("measure_mean: zero mass");
  if (!g.periodic()) {
    double m1 = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) m1 += g.weight(i) * rho[i] * g.x(i);
    return m1 / mass;
  }
  const double k = 2.0 * std::numbers::pi / g.length();
  double c = 0.0, s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    c += rho[i] * std::cos(k * g.x(i));
    s += rho[i] * std::sin(k * g.x(i));
  }
  double angle = std::atan2(s, c);
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  return angle / k;
}

double measure_variance(const Grid& g, std::span<const double> rho) {
  const double mean = measure_mean(g, rho);
  const double L = g.length();
  double mass = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    double d = g.x(i) - mean;
    if (g.periodic()) d -= L * std::round(d / L);
    mass += g.weight(i) * rho[i];
    m2 += g.weight(i) * rho[i] * d * d;
  }
  return m2 / mass;
}

double measure_variance(const DensityField& rho) { return measure_variance(rho.grid(), rho.values()); }

double functional_derivative_fd(const Functional& F, const DensityField& rho, const ScalarField& g,
                                double eta, const ModelParams& p) {
  require_same_grid(rho.grid(), g.grid, "functional_derivative_fd");
  auto shifted = [&](double s) {
    ScalarField f(rho.grid());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = rho[i] + s * g[i];
    return DensityField::checked(std::move(f), p);
  };
  auto central = [&](double e) { return (F(shifted(e)) - F(shifted(-e))) / (2.0 * e); };
  const double coarse = central(eta);
  const double fine = central(0.5 * eta);
  return (4.0 * fine - coarse) / 3.0;
}

double l1_distance(const Grid& g, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += g.weight(i) * std::abs(a[i] - b[i]);
  return s;
}

}  // namespace dtdft::oracles
