#pragma once

// Closed-form and brute-force references used by the tests and `verify`.

#include <functional>
#include <span>

#include "dtdft/functionals.hpp"

namespace dtdft::oracles {

/// Free thermo-quantum spreading: D = kB T / b, lambdaT2 = hbar^2 / (4 m kB T).
struct DispersionParams {
  double D = 0.0;
  double lambdaT2 = 0.0;
  double sigma0_sq = 0.0;

  static DispersionParams from_model(const ModelParams& p, double sigma0_sq);
};

/// Root of s - s0 - lambdaT2 ln[(lambdaT2 + s)/(lambdaT2 + s0)] = 2 D t, i.e. the
/// integral of d(sigma^2)/dt = 2 (D + D_Q(sigma^2)) from sigma0^2. With
/// sigma0_sq = 0 this is s - lambdaT2 ln(1 + s/lambdaT2) = 2 D t.
/// lambdaT2 == 0 gives the classical s0 + 2 D t.
double dispersion_sigma2(double t, const DispersionParams& dp);

/// sqrt(sigma0^4 + hbar^2 t / (m b)); with sigma0_sq = 0 this is hbar sqrt(t / (m b)).
double zero_temperature_sigma2(double t, const ModelParams& p, double sigma0_sq = 0.0);

/// hbar^2 / (4 m b sigma^2).
double quantum_diffusion_coefficient(double sigma2, const ModelParams& p);

/// Stationary Gaussian variance of the dilute flow in U = m omega^2 x^2 / 2:
/// [kB T + sqrt(kB^2 T^2 + hbar^2 omega^2)] / (2 m omega^2).
double harmonic_stationary_variance(double T, double omega, const ModelParams& p);

/// Variance of rho treated as a distribution. Periodic grids use the circular
/// mean and minimum-image displacements.
double measure_variance(const Grid& g, std::span<const double> rho);
double measure_variance(const DensityField& rho);
/// Density mean position (circular on periodic grids).
double measure_mean(const Grid& g, std::span<const double> rho);

using Functional = std::function<double(const DensityField&)>;

/// Central difference (F[rho + eta g] - F[rho - eta g]) / 2 eta, Richardson
/// extrapolated over eta and eta/2. Throws BandViolation if a perturbed
/// density leaves the band.
double functional_derivative_fd(const Functional& F, const DensityField& rho, const ScalarField& g,
                                double eta, const ModelParams& p);

/// L1 distance int |a - b| dx.
double l1_distance(const Grid& g, std::span<const double> a, std::span<const double> b);

}  // namespace dtdft::oracles
