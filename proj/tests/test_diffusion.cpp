#include <cmath>

#include "doctest.h"
#include "dtdft/diffusion.hpp"
#include "dtdft/error.hpp"
#include "dtdft/oracles.hpp"
#include "helpers.hpp"

using namespace dtdft;
using testing::pi;

namespace {

ModelParams full_params() {
  ModelParams p;
  p.T = 0.5;
  p.rho_bar = 2.0;
  p.b = 1.0;
  p.coulomb_softening = 0.3;
  return p;
}

ScalarField bumpy(const Grid& g) {
  const double k = 2.0 * pi / g.length();
  return sample(g, [&](double x) { return 0.6 + 0.2 * std::sin(k * x) + 0.1 * std::cos(2.0 * k * x + 1.0); });
}

ScalarField trap(const Grid& g, double omega) {
  const double c = 0.5 * g.length();
  return sample(g, [&](double x) { return 0.5 * omega * omega * (x - c) * (x - c); });
}

double rel_l2(const ScalarField& a, const ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_SUITE("diffusion") {
  TEST_CASE("uniform density has zero flow") {
    for (auto bc : {Boundary::periodic, Boundary::no_flux}) {
      const Grid g(64, 8.0, bc);
      const auto p = full_params();
      const auto rho = DensityField::checked(ScalarField(g, 0.8), p);
      const ScalarField U(g, 0.0);
      // Local terms cancel exactly; the FFT convolution leaves round-off.
      auto local = p;
      local.terms.hartree = false;
      CHECK(testing::max_abs(rhs_mu_form(rho, U, local).values) == 0.0);
      CHECK(testing::max_abs(rhs_mu_form(rho, U, p).values) <= 1e-12);
      CHECK(testing::max_abs(rhs_effective_form(rho, U, p).values) <= 1e-12);
    }
  }

  TEST_CASE("flow conserves mass") {
    for (auto bc : {Boundary::periodic, Boundary::no_flux}) {
      const Grid g(128, 8.0, bc);
      const auto p = full_params();
      const auto r = rhs_mu_form(DensityField::checked(bumpy(g), p), trap(g, 0.3), p);
      double scale = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) scale += g.weight(i) * std::abs(r[i]);
      CHECK(std::abs(integrate(r)) <= 1e-14 * scale);
    }
  }

  TEST_CASE("the two flow forms converge to each other") {
    const auto p = full_params();
    auto diff = [&](std::size_t n) {
      const Grid g(n, 10.0, Boundary::periodic);
      const auto rho = DensityField::checked(bumpy(g), p);
      const auto U = sample(g, [](double x) { return 0.2 * std::cos(2.0 * pi * x / 10.0); });
      return rel_l2(rhs_effective_form(rho, U, p), rhs_mu_form(rho, U, p));
    };
    const double e1 = diff(256), e2 = diff(512);
    CHECK(e1 <= 1e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
  }

  TEST_CASE("dilute effective form is drift plus Einstein diffusion") {
    const Grid g(512, 20.0, Boundary::periodic);
    const auto p = ModelParams::dilute(0.6, 1.5);
    const auto U = trap(g, 0.2);
    const auto rho = DensityField::clamped(testing::gaussian(g, 10.0, 2.0, 1e-3), p);
    const auto lhs = rhs_effective_form(rho, U, p);
    const auto Q = bohm_potential(rho, p);
    std::vector<double> drive(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) drive[i] = Q[i] + U[i];
    const auto drift = divergence(VectorField(g, [&] {
      const auto dv = gradient(ScalarField(g, drive)).values;
      std::vector<double> f(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) f[i] = rho[i] * dv[i] / p.b;
      return f;
    }()));
    const auto lap = laplacian(rho.field());
    ScalarField rhs(g);
    for (std::size_t i = 0; i < g.size(); ++i) rhs[i] = drift[i] + p.kT() / p.b * lap[i];
    CHECK(rel_l2(lhs, rhs) < 5e-3);
  }

  TEST_CASE("equilibrium is a fixed point") {
    const Grid g(64, 8.0, Boundary::periodic);
    const auto p = full_params();
    const DiffusionSolver solver(p, ScalarField(g, 0.0));
    auto s = solver.make_state(DensityField::checked(ScalarField(g, 0.9), p));
    const auto before = s.rho.field().values;
    solver.step(s);
    CHECK(s.steps == 1);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(s.rho[i] - before[i]) <= 1e-12);
    const auto rep = solver.steady_state(s, {.tol = 1e-8, .t_char = 1.0, .max_steps = 1000, .check_every = 1});
    CHECK(rep.converged);
    CHECK(rep.steps <= 1);
  }

  TEST_CASE("accepted steps conserve mass and do not raise the free energy") {
    for (auto bc : {Boundary::periodic, Boundary::no_flux}) {
      const Grid g(96, 8.0, bc);
      const auto p = full_params();
      const DiffusionSolver solver(p, trap(g, 0.4));
      auto s = solver.make_state(DensityField::checked(bumpy(g), p));
      const double m0 = s.rho.mass();
      double f_prev = solver.ensure_cache(s).energy.total;
      for (int k = 0; k < 300; ++k) {
        solver.step(s);
        const auto& c = solver.ensure_cache(s);
        const double scale = std::max(std::abs(c.energy.total), 1.0);
        CHECK(c.energy.total - f_prev <= 1e-12 * scale * 10.0);
        f_prev = c.energy.total;
      }
      CHECK(std::abs(s.rho.mass() - m0) <= 1e-12 * m0);
    }
  }

  TEST_CASE("step control") {
    const Grid g(64, 8.0, Boundary::periodic);
    const auto p = full_params();
    SUBCASE("never steps past the target") {
      const DiffusionSolver solver(p, trap(g, 0.4));
      auto s = solver.make_state(DensityField::checked(bumpy(g), p));
      solver.advance_to(s, 1e-3);
      CHECK(s.t == 1e-3);
      const double t_before = s.t;
      solver.step(s, 1e-3);
      CHECK(s.t == t_before);
    }
    SUBCASE("underflow aborts") {
      StepControl c;
      c.dt_min = 1e3;
      const DiffusionSolver solver(p, trap(g, 0.4), c);
      auto s = solver.make_state(DensityField::checked(bumpy(g), p));
      CHECK_THROWS_AS(solver.step(s), NumericalAbort);
    }
    SUBCASE("step budget aborts") {
      StepControl c;
      c.max_steps = 5;
      const DiffusionSolver solver(p, trap(g, 0.4), c);
      auto s = solver.make_state(DensityField::checked(bumpy(g), p));
      CHECK_THROWS_AS(solver.advance_to(s, 100.0), NumericalAbort);
    }
    SUBCASE("dt_max caps the step") {
      StepControl c;
      c.dt_max = 1e-6;
      const DiffusionSolver solver(p, trap(g, 0.4), c);
      auto s = solver.make_state(DensityField::checked(bumpy(g), p));
      for (int k = 0; k < 50; ++k) solver.step(s);
      CHECK(s.last_dt <= 1e-6);
    }
  }

  TEST_CASE("evolution records observations at cadence") {
    const Grid g(64, 8.0, Boundary::no_flux);
    const auto p = full_params();
    const DiffusionSolver solver(p, trap(g, 0.4));
    auto s = solver.make_state(DensityField::checked(bumpy(g), p));
    const auto tr = solver.evolve(s, 0.02, 0.005);
    REQUIRE(tr.observations.size() == 5);
    for (std::size_t k = 0; k < 5; ++k) CHECK(tr.observations[k].t == doctest::Approx(0.005 * k).epsilon(1e-12));
    for (std::size_t k = 1; k < 5; ++k) CHECK(tr.observations[k].energy.total <= tr.observations[k - 1].energy.total);

    auto z = solver.make_state(DensityField::checked(bumpy(g), p));
    const auto same = z.rho.field().values;
    const auto zero = solver.evolve(z, 0.0, 0.1);
    CHECK(zero.observations.size() == 1);
    CHECK(z.rho.field().values == same);
  }

  TEST_CASE("evolution is deterministic") {
    const Grid g(64, 8.0, Boundary::periodic);
    const auto p = full_params();
    const DiffusionSolver solver(p, trap(g, 0.4));
    auto a = solver.make_state(DensityField::checked(bumpy(g), p));
    auto b = solver.make_state(DensityField::checked(bumpy(g), p));
    solver.evolve(a, 0.01, 0.005);
    solver.evolve(b, 0.01, 0.005);
    CHECK(a.rho.field().values == b.rho.field().values);
    CHECK(a.steps == b.steps);
  }

  TEST_CASE("cadence times are absolute multiples") {
    CHECK(next_cadence_time(0.0, 0.25) == 0.25);
    CHECK(next_cadence_time(0.3, 0.25) == 0.5);
    CHECK(next_cadence_time(0.5, 0.25) == 0.75);
    CHECK(next_cadence_time(0.75 - 1e-15, 0.25) == 1.0);
  }

  TEST_CASE("dilute trapped electron relaxes toward the stationary variance") {
    const Grid g(121, 12.0, Boundary::no_flux);
    const auto p = ModelParams::dilute(1.0, 1.0);
    const DiffusionSolver solver(p, trap(g, 1.0));
    auto s = solver.make_state(DensityField::clamped(testing::gaussian(g, 6.0, 0.6), p));
    const double target = oracles::harmonic_stationary_variance(1.0, 1.0, p);
    const double gap0 = std::abs(oracles::measure_variance(s.rho) - target);
    solver.advance_to(s, 1.0);
    const double gap1 = std::abs(oracles::measure_variance(s.rho) - target);
    CHECK(gap1 < 0.5 * gap0);
  }
}
