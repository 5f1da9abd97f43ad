#include <cmath>

#include "doctest.h"
#include "dtdft/oracles.hpp"
#include "helpers.hpp"

using namespace dtdft;
using namespace dtdft::oracles;

TEST_SUITE("oracles") {
  TEST_CASE("dispersion law") {
    const DispersionParams dp{1.0, 1.0, 0.0};
    const double s = dispersion_sigma2(0.5, dp);
    CHECK(s == doctest::Approx(2.1462).epsilon(1e-4));
    // Residual of the implicit relation.
    CHECK(s - std::log(1.0 + s) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(dispersion_sigma2(3.0, {1.0, 1e-12, 0.0}) == doctest::Approx(6.0).epsilon(1e-9));
    CHECK(dispersion_sigma2(3.0, {1.0, 0.0, 0.5}) == 6.5);
    CHECK(dispersion_sigma2(0.0, {1.0, 1.0, 0.3}) == doctest::Approx(0.3).epsilon(1e-14));
  }

  TEST_CASE("dispersion rate is the sum of the two diffusion coefficients") {
    ModelParams p = ModelParams::dilute(0.25, 0.25);
    const auto dp = DispersionParams::from_model(p, 0.1);
    CHECK(dp.D == doctest::Approx(1.0));
    CHECK(dp.lambdaT2 == doctest::Approx(1.0));
    for (double t : {0.1, 0.7, 2.0, 5.0}) {
      auto central = [&](double e) { return (dispersion_sigma2(t + e, dp) - dispersion_sigma2(t - e, dp)) / (2.0 * e); };
      const double rate = (4.0 * central(5e-4) - central(1e-3)) / 3.0;
      const double s = dispersion_sigma2(t, dp);
      const double expected = 2.0 * (dp.D + quantum_diffusion_coefficient(s, p));
      CHECK(std::abs(rate - expected) <= 1e-8 * expected);
    }
  }

  TEST_CASE("zero-temperature spreading") {
    ModelParams p = ModelParams::dilute(0.0, 1.0);
    CHECK(zero_temperature_sigma2(4.0, p) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(zero_temperature_sigma2(3.0, p, 2.0) == doctest::Approx(std::sqrt(7.0)).epsilon(1e-15));
    for (double t = 0.1; t <= 10.0; t *= 1.7) {
      ModelParams warm = ModelParams::dilute(1e-9, 1.0);
      const auto dp = DispersionParams::from_model(warm, 0.0);
      CHECK(std::abs(dispersion_sigma2(t, dp) - zero_temperature_sigma2(t, p)) <= 1e-6 * zero_temperature_sigma2(t, p));
    }
  }

  TEST_CASE("quantum diffusion coefficient") {
    ModelParams p = ModelParams::dilute(1.0, 1.0);
    CHECK(quantum_diffusion_coefficient(1.0, p) == 0.25);
    const auto dp = DispersionParams::from_model(p, 0.0);
    CHECK(quantum_diffusion_coefficient(dp.lambdaT2, p) == doctest::Approx(dp.D).epsilon(1e-15));
  }

  TEST_CASE("harmonic stationary variance") {
    ModelParams p = ModelParams::dilute(0.0, 1.0);
    CHECK(harmonic_stationary_variance(0.0, 1.0, p) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(harmonic_stationary_variance(1.0, 1.0, p) == doctest::Approx(1.20711).epsilon(1e-5));
    p.units.hbar = 1e-9;
    CHECK(harmonic_stationary_variance(2.0, 0.5, p) == doctest::Approx(2.0 / 0.25).epsilon(1e-12));
  }

  TEST_CASE("measured variance") {
    const Grid g(101, 10.0, Boundary::no_flux);
    std::vector<double> two(g.size(), 0.0);
    two[40] = two[60] = 1.0;
    CHECK(measure_variance(g, two) == doctest::Approx(1.0).epsilon(1e-13));

    const Grid p(1024, 40.0, Boundary::periodic);
    const auto gauss = testing::gaussian(p, 11.0, 2.3);
    CHECK(std::abs(measure_variance(p, gauss.values) - 2.3) <= 1e-4);
    CHECK(measure_mean(p, gauss.values) == doctest::Approx(11.0).epsilon(1e-10));
    // Translation invariance, including across the periodic seam.
    const auto shifted = testing::gaussian(p, 39.0, 2.3);
    CHECK(measure_variance(p, shifted.values) == doctest::Approx(measure_variance(p, gauss.values)).epsilon(1e-10));
  }

  TEST_CASE("finite-difference functional derivative of a quadratic") {
    const Grid g(64, 2.0, Boundary::periodic);
    ModelParams p;
    p.rho_bar = 10.0;
    const auto rho = DensityField::checked(sample(g, [](double x) { return 1.0 + 0.5 * std::sin(3.0 * x); }), p);
    const auto dir = sample(g, [](double x) { return std::cos(x * 3.14159265358979323846); });
    const Functional F = [](const DensityField& r) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) s += r.grid().weight(i) * r[i] * r[i] * r[i];
      return s;
    };
    double exact = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) exact += g.weight(i) * 3.0 * rho[i] * rho[i] * dir[i];
    CHECK(functional_derivative_fd(F, rho, dir, 1e-2, p) == doctest::Approx(exact).epsilon(1e-12));
  }

  TEST_CASE("L1 distance") {
    const Grid g(10, 1.0, Boundary::periodic);
    std::vector<double> a(10, 1.0), b(10, 0.5);
    CHECK(l1_distance(g, a, b) == doctest::Approx(0.5));
    CHECK(l1_distance(g, a, a) == 0.0);
  }
}
