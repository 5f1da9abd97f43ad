#include <cmath>
#include <random>

#include "doctest.h"
#include "dtdft/error.hpp"
#include "dtdft/functionals.hpp"
#include "dtdft/oracles.hpp"
#include "dtdft/verify.hpp"
#include "helpers.hpp"

using namespace dtdft;
using testing::pi;

namespace {

const double c_tf = 0.3 * std::pow(3.0 * pi * pi, 2.0 / 3.0);

ModelParams bare(double rho_bar = 2.0) {
  ModelParams p;
  p.rho_bar = rho_bar;
  p.terms = {false, false, false, false, false};
  return p;
}

DensityField uniform(const Grid& g, double v, const ModelParams& p) {
  return DensityField::checked(ScalarField(g, v), p);
}

DensityField smooth(const Grid& g, const ModelParams& p, double phase = 0.0) {
  const double k = 2.0 * pi / g.length();
  return DensityField::checked(sample(g, [&](double x) {
    return 0.6 + 0.25 * std::sin(k * x + phase) + 0.1 * std::cos(2.0 * k * x);
  }), p);
}

}  // namespace

TEST_SUITE("functionals") {
  TEST_CASE("density band handling") {
    const Grid g(16, 1.0, Boundary::periodic);
    ModelParams p = bare(1.0);
    p.T = 1.0;
    p.terms.entropy = true;
    CHECK_THROWS_AS(DensityField::checked(ScalarField(g, 1.0), p), BandViolation);
    CHECK_THROWS_AS(DensityField::checked(ScalarField(g, 0.0), p), BandViolation);
    const auto c = DensityField::clamped(ScalarField(g, 2.0), p);
    CHECK(c[0] == doctest::Approx(1.0 - p.density_floor()).epsilon(1e-15));
    CHECK(c[0] < 1.0);
    const auto z = DensityField::clamped(ScalarField(g, -1.0), p);
    CHECK(z[0] == p.density_floor());
    p.T = 0.0;
    CHECK_NOTHROW(DensityField::checked(ScalarField(g, 1.5), p));
    CHECK_THROWS_AS(DensityField::positive(ScalarField(g, 0.0), p), BandViolation);
  }

  TEST_CASE("parameter validation") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.rho_bar = 0.0;
    CHECK_THROWS(p.validate());
    p = ModelParams{};
    p.T = -1.0;
    CHECK_THROWS(p.validate());
    p = ModelParams{};
    p.background_neutralization = false;
    CHECK_THROWS(p.validate_for(Grid(16, 1.0, Boundary::periodic)));
    CHECK_NOTHROW(p.validate_for(Grid(16, 1.0, Boundary::no_flux)));
    p.units.e2 = 0.0;
    CHECK_NOTHROW(p.validate_for(Grid(16, 1.0, Boundary::periodic)));
  }

  TEST_CASE("Thomas-Fermi energy") {
    const Grid g(64, 10.0, Boundary::periodic);
    const auto p = bare();
    CHECK(tf_energy(uniform(g, 1.0, p), p) == doctest::Approx(28.712).epsilon(1e-4));
    CHECK(tf_energy(uniform(g, 1.0, p), p) == doctest::Approx(10.0 * c_tf).epsilon(1e-14));
    CHECK(tf_energy(uniform(g, 1e-9, p), p) < 1e-12);
    const auto r = smooth(g, p);
    auto twice = r.field();
    for (auto& v : twice.values) v *= 2.0;
    const auto p4 = bare(4.0);
    CHECK(tf_energy(DensityField::checked(twice, p4), p4) / tf_energy(r, p) ==
          doctest::Approx(std::pow(2.0, 5.0 / 3.0)).epsilon(1e-13));
  }

  TEST_CASE("Weizsacker energy and Fisher information") {
    const auto p = bare();
    const Grid g(1024, 40.0, Boundary::periodic);
    CHECK(weizsacker_energy(uniform(g, 0.7, p), p) == 0.0);
    CHECK(fisher_entropy(uniform(g, 0.7, p)) == doctest::Approx(0.0));
    const auto gauss = DensityField::clamped(testing::gaussian(g, 20.0, 1.0), p);
    CHECK(weizsacker_energy(gauss, p) == doctest::Approx(0.125).epsilon(1e-3));
    CHECK(fisher_entropy(gauss) == doctest::Approx(1.0).epsilon(1e-3));
    const Grid s(256, 10.0, Boundary::periodic);
    const auto r = smooth(s, p);
    CHECK(std::abs(weizsacker_energy(r, p) - fisher_entropy(r) / 8.0) <= 1e-6 * weizsacker_energy(r, p));
  }

  TEST_CASE("Weizsacker energy is linear under uniform scaling") {
    const Grid g(128, 10.0, Boundary::periodic);
    const auto p = bare(1.0);
    const auto r = smooth(g, p);
    auto triple = r.field();
    for (auto& v : triple.values) v *= 3.0;
    const auto p3 = bare(3.0);
    CHECK(weizsacker_energy(DensityField::checked(triple, p3), p3) ==
          doctest::Approx(3.0 * weizsacker_energy(r, p)).epsilon(1e-12));
  }

  TEST_CASE("Dirac exchange") {
    const Grid g(64, 10.0, Boundary::periodic);
    auto p = bare();
    CHECK(dirac_energy(uniform(g, 1.0, p), p) == doctest::Approx(-7.3856).epsilon(1e-4));
    CHECK(dirac_energy(smooth(g, p), p) <= 0.0);
    p.units.e2 = 0.0;
    CHECK(dirac_energy(uniform(g, 1.0, p), p) == 0.0);
  }

  TEST_CASE("external energy") {
    const Grid g(1024, 40.0, Boundary::no_flux);
    const auto p = bare();
    const auto gauss = DensityField::clamped(testing::gaussian(g, 13.0, 1.5), p);
    CHECK(external_energy(gauss, ScalarField(g, 0.0)) == 0.0);
    CHECK(external_energy(gauss, sample(g, [](double x) { return x; })) == doctest::Approx(13.0).epsilon(1e-8));
    CHECK(external_energy(gauss, ScalarField(g, 2.5)) == doctest::Approx(2.5 * gauss.mass()).epsilon(1e-13));
    CHECK_THROWS_AS(external_energy(gauss, ScalarField(Grid(1024, 40.0, Boundary::periodic), 0.0)), GridMismatch);
  }

  TEST_CASE("lattice-gas entropy") {
    const Grid g(100, 10.0, Boundary::periodic);
    ModelParams p = bare(1.0);
    p.T = 1.0;
    p.terms.entropy = true;
    CHECK(fd_entropy(uniform(g, 0.5, p), p) == doctest::Approx(6.9315).epsilon(1e-4));
    ModelParams p3 = p;
    p3.rho_bar = 3.0;
    const double limit = -10.0 * 3.0 * std::log(3.0);
    CHECK(fd_entropy(uniform(g, 1e-8, p3), p3) == doctest::Approx(limit).epsilon(1e-6));
    // Strict concavity: the midpoint beats the chord.
    const auto a = smooth(g, p, 0.0);
    const auto b = smooth(g, p, 2.0);
    std::vector<double> mid(g.size());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
    const auto m = DensityField::checked(ScalarField(g, mid), p);
    CHECK(fd_entropy(m, p) > 0.5 * (fd_entropy(a, p) + fd_entropy(b, p)));
  }

  TEST_CASE("free energy breakdown") {
    const Grid g(64, 10.0, Boundary::periodic);
    auto p = bare();
    const ScalarField U0(g, 0.0);
    const auto r = smooth(g, p);
    CHECK(free_energy(r, U0, p).total == 0.0);
    p.terms.tf = true;
    p.units.e2 = 0.0;
    p.terms.hartree = p.terms.dirac = true;
    const auto e = free_energy(uniform(g, 1.0, p), U0, p);
    CHECK(e.total == doctest::Approx(28.712).epsilon(1e-4));
    CHECK(e.e_h == 0.0);
    CHECK(e.e_d == 0.0);
  }

  TEST_CASE("toggles are additive") {
    const Grid g(128, 10.0, Boundary::periodic);
    ModelParams all;
    all.T = 0.5;
    all.rho_bar = 2.0;
    all.coulomb_softening = 0.3;
    const auto U = sample(g, [](double x) { return 0.05 * (x - 5.0) * (x - 5.0); });
    const auto r = smooth(g, all);
    const auto full = free_energy(r, U, all);
    CHECK(full.total == full.e_tf + full.e_w + full.e_h + full.e_d + full.e_u + full.minus_TS);
    auto only = [&](auto setter) {
      ModelParams q = all;
      q.terms = {false, false, false, false, false};
      setter(q.terms);
      return free_energy(r, U, q);
    };
    CHECK(only([](Terms& t) { t.tf = true; }).e_tf == full.e_tf);
    CHECK(only([](Terms& t) { t.weizsacker = true; }).e_w == full.e_w);
    CHECK(only([](Terms& t) { t.hartree = true; }).e_h == full.e_h);
    CHECK(only([](Terms& t) { t.dirac = true; }).e_d == full.e_d);
    CHECK(only([](Terms& t) { t.entropy = true; }).minus_TS == full.minus_TS);
    const auto none = only([](Terms&) {});
    CHECK(none.e_tf == 0.0);
    CHECK(none.e_w == 0.0);
    CHECK(none.e_h == 0.0);
    CHECK(none.e_d == 0.0);
    CHECK(none.minus_TS == 0.0);
    CHECK(none.e_u == full.e_u);
  }

  TEST_CASE("Bohm potential") {
    const auto p = bare();
    const Grid g(2048, 40.0, Boundary::periodic);
    const auto gauss = DensityField::clamped(testing::gaussian(g, 20.0, 1.0), p);
    const auto Q = bohm_potential(gauss, p);
    CHECK(Q[1024] == doctest::Approx(0.25).epsilon(1e-4));
    for (std::size_t i = 900; i < 1150; i += 25) {
      const double x = g.x(i) - 20.0;
      CHECK(Q[i] == doctest::Approx(0.5 * (0.5 - x * x / 4.0)).epsilon(1e-3));
    }
    CHECK(testing::max_abs(bohm_potential(uniform(g, 0.3, p), p).values) == 0.0);
    const auto W = weizsacker_potential(gauss, p);
    CHECK(W[1024] == doctest::Approx(Q[1024]).epsilon(1e-4));
  }

  TEST_CASE("chemical potential") {
    const Grid g(64, 10.0, Boundary::periodic);
    ModelParams p;
    p.rho_bar = 2.0;
    p.T = 1.3;
    p.coulomb_softening = 0.5;
    const auto mu = chemical_potential(uniform(g, 1.0, p), ScalarField(g, 0.0), p);
    for (double v : mu.values) CHECK(v == doctest::Approx(3.8007).epsilon(1e-4));

    const auto d = ModelParams::dilute(0.7, 1.0);
    const Grid big(1024, 40.0, Boundary::periodic);
    const auto gauss = DensityField::clamped(testing::gaussian(big, 20.0, 2.0, 1e-3), d);
    const auto U = sample(big, [](double x) { return 0.01 * x; });
    const auto md = chemical_potential(gauss, U, d);
    const auto Q = weizsacker_potential(gauss, d);
    for (std::size_t i = 0; i < big.size(); i += 97)
      CHECK(md[i] == doctest::Approx(Q[i] + U[i] + 0.7 * std::log(gauss[i] / d.rho_bar)).epsilon(1e-12));
  }

  TEST_CASE("effective potential") {
    const Grid g(128, 10.0, Boundary::periodic);
    ModelParams p;
    p.rho_bar = 2.0;
    p.T = 0.8;
    p.coulomb_softening = 0.4;
    const auto U = sample(g, [](double x) { return std::sin(x); });
    const auto r = smooth(g, p);
    const auto ueff = effective_potential(r, U, p);
    const auto mu = chemical_potential(r, U, p);
    const auto Q = weizsacker_potential(r, p);
    for (std::size_t i = 0; i < g.size(); i += 7) {
      const double tf = 0.5 * std::pow(3.0 * pi * pi * r[i], 2.0 / 3.0);
      const double ent = 0.8 * std::log(r[i] / (2.0 - r[i]));
      CHECK(ueff[i] == doctest::Approx(mu[i] - tf - Q[i] - ent).epsilon(1e-11));
    }
    const auto un = effective_potential(uniform(g, 1.0, p), U, p);
    for (std::size_t i = 0; i < g.size(); i += 9) CHECK(un[i] - U[i] == doctest::Approx(-0.98475).epsilon(1e-4));
    p.units.e2 = 0.0;
    CHECK(effective_potential(r, U, p).values == U.values);
  }

  TEST_CASE("effective diffusion") {
    const Grid g(64, 10.0, Boundary::periodic);
    ModelParams p;
    p.units.e2 = 0.0;
    p.rho_bar = 2.0;
    p.b = 1.0;
    const auto D = effective_diffusion(uniform(g, 1.0, p), p);
    CHECK(D.diagonal[5] == doctest::Approx(1.91416).epsilon(1e-5));

    auto dilute = ModelParams::dilute(2.0, 4.0);
    dilute.rho_bar = 1.0;
    const auto Dd = effective_diffusion(uniform(g, 1e-9, dilute), dilute);
    CHECK(Dd.diagonal[0] == doctest::Approx(0.5).epsilon(1e-8));

    const Grid big(2048, 40.0, Boundary::periodic);
    const double s2 = 1.5;
    const auto gauss = DensityField::clamped(testing::gaussian(big, 20.0, s2, 1e-4), dilute);
    const auto Dg = effective_diffusion(gauss, dilute);
    const double expected = 1.0 / (4.0 * 4.0 * s2) + 0.5;
    for (std::size_t i = 960; i < 1090; i += 16) CHECK(Dg.diagonal[i] == doctest::Approx(expected).epsilon(1e-4));
  }

  TEST_CASE("chemical potential is the functional derivative") {
    const Grid g(256, 10.0, Boundary::periodic);
    ModelParams p;
    p.rho_bar = 2.0;
    p.T = 0.5;
    p.coulomb_softening = 0.3;
    const auto U = sample(g, [](double x) { return 0.1 * std::cos(x); });
    const FreeEnergyModel model(p, U);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
      const auto r = smooth(g, p, trial);
      const double k = 2.0 * pi / g.length();
      const double a1 = uni(rng), a2 = uni(rng), ph = uni(rng);
      auto gfield = sample(g, [&](double x) { return a1 * std::sin(k * x + ph) + a2 * std::cos(3.0 * k * x); });
      const auto mu = model.chemical_potential(r.values());
      double lhs = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) lhs += g.weight(i) * mu[i] * gfield[i];
      const double fd = oracles::functional_derivative_fd(
          [&](const DensityField& d) { return model.energy(d.values()).total; }, r, gfield, 1e-3, p);
      CHECK(std::abs(lhs - fd) <= 1e-6 * std::abs(lhs));
    }
  }

  TEST_CASE("a sign error in the exchange term is caught") {
    const auto good = verify::functional_derivative();
    CHECK(good.passed);
    // Flip the sign of the exchange contribution to mu.
    const auto flipped = verify::functional_derivative([](const FreeEnergyModel& m, std::span<const double> rho) {
      auto mu = m.chemical_potential(rho);
      const auto& p = m.params();
      for (std::size_t i = 0; i < mu.size(); ++i)
        mu[i] += 2.0 * (p.units.e2 / pi) * std::cbrt(3.0 * pi * pi * rho[i]);
      return mu;
    });
    CHECK_FALSE(flipped.passed);
  }
}
