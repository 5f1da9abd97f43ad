#include "dtdft/verify.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numbers>
#include <random>
#include <thread>

#include "dtdft/config.hpp"
#include "dtdft/diffusion.hpp"
#include "dtdft/dks.hpp"
#include "dtdft/hartree.hpp"
#include "dtdft/oracles.hpp"

#ifndef DTDFT_BUILD_TYPE
#define DTDFT_BUILD_TYPE "unknown"
#endif

namespace dtdft::verify {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

ScalarField gaussian(const Grid& g, double centre, double sigma2, double mass = 1.0) {
  const double norm = mass / std::sqrt(2.0 * kPi * sigma2);
  return sample(g, [&](double x) {
    double d = x - centre;
    if (g.periodic()) d -= g.length() * std::round(d / g.length());
    return norm * std::exp(-d * d / (2.0 * sigma2));
  });
}

// Smooth periodic test density with all Fourier content in the lowest modes.
ScalarField smooth_density(const Grid& g) {
  const double k = 2.0 * kPi / g.length();
  return sample(g, [&](double x) { return 0.3 + 0.1 * std::sin(k * x) + 0.05 * std::cos(2.0 * k * x + 0.3); });
}

ModelParams full_model() {
  ModelParams p;
  p.T = 0.5;
  p.b = 1.0;
  p.rho_bar = 1.0;
  p.statistics = Statistics::fermi_dirac;
  p.coulomb_softening = 0.2;
  return p;
}

json model_json(const ModelParams& p) {
  RunConfig c;
  c.model = p;
  return to_json(c)["model"];
}

template <class F>
Criterion timed(int id, std::string name, const json& scenario, F&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Criterion c;
  c.id = id;
  c.name = std::move(name);
  c.config_hash = fnv1a_hex(scenario.dump());
  try {
    body(c);
  } catch (const std::exception& e) {
    c.passed = false;
    c.measured = std::string("exception: ") + e.what();
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

// Free spreading of a Gaussian under the dilute flow; returns the largest
// relative deviation from `reference` over observations with t >= t_from.
struct SpreadResult {
  double worst = 0.0;
  double worst_bare = 0.0;
};

template <class Ref, class Bare>
SpreadResult free_spreading(const ModelParams& p, double sigma0_sq, double t_end, Ref&& reference,
                            Bare&& bare_check, double L = 80.0) {
  const Grid g(512, L, Boundary::periodic);
  DiffusionSolver solver(p, ScalarField(g));
  auto s = solver.make_state(DensityField::clamped(gaussian(g, 0.5 * L, sigma0_sq), p));
  SpreadResult r;
  solver.evolve(s, t_end, 0.05, [&](const Observation& o) {
    if (o.t < 0.1 - 1e-12) return;
    r.worst = std::max(r.worst, std::abs(o.sigma2 / reference(o.t) - 1.0));
    if (auto e = bare_check(o)) r.worst_bare = std::max(r.worst_bare, *e);
  });
  return r;
}

}  // namespace

bool Report::all_passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.passed; });
}

Criterion dispersion_law() {
  const ModelParams p = ModelParams::dilute(0.25, 0.25);
  const double s0 = 0.1;
  const json scen = {{"scenario", "dispersion"}, {"model", model_json(p)}, {"n", 512}, {"L", 80.0}, {"sigma0_sq", s0}};
  return timed(1, "dispersion law", scen, [&](Criterion& c) {
    const auto dp = oracles::DispersionParams::from_model(p, s0);
    const auto r = free_spreading(p, s0, 2.0, [&](double t) { return oracles::dispersion_sigma2(t, dp); },
                                  [](const Observation&) { return std::optional<double>(); });
    c.passed = r.worst <= 0.02;
    c.measured = "max rel err " + sci(r.worst) + " over t in [0.1, 2]";
    c.expected = "<= 2.000e-02";
  });
}

Criterion zero_temperature_law() {
  const ModelParams p = ModelParams::dilute(0.0, 0.25);
  const double s0 = 0.1;
  const json scen = {{"scenario", "zero_temperature"}, {"model", model_json(p)}, {"n", 512}, {"L", 80.0},
                     {"sigma0_sq", s0}};
  return timed(2, "zero-temperature law", scen, [&](Criterion& c) {
    const auto& u = p.units;
    const auto r = free_spreading(
        p, s0, 2.0, [&](double t) { return oracles::zero_temperature_sigma2(t, p, s0); },
        [&](const Observation& o) -> std::optional<double> {
          if (o.sigma2 < 10.0 * s0) return std::nullopt;
          return std::abs(o.sigma2 / (u.hbar * std::sqrt(o.t / (u.m * p.b))) - 1.0);
        });
    c.passed = r.worst <= 0.02 && r.worst_bare <= 0.03;
    c.measured = "max rel err " + sci(r.worst) + " (generalized), " + sci(r.worst_bare) + " (bare, sigma2 >= 10 sigma0^2)";
    c.expected = "<= 2.000e-02, <= 3.000e-02";
  });
}

Criterion classical_limit() {
  // D = 1 and lambda_T^2 = 1e-4 = 1e-3 sigma0^2.
  const ModelParams p = ModelParams::dilute(2500.0, 2500.0);
  const double s0 = 0.1;
  // Pure diffusion has no quantum smoothing, so sigma0 needs a few more cells than in C1.
  const double L = 40.0;
  const json scen = {{"scenario", "classical"}, {"model", model_json(p)}, {"n", 512}, {"L", L}, {"sigma0_sq", s0}};
  return timed(3, "classical limit", scen, [&](Criterion& c) {
    const double D = p.kT() / p.b;
    const auto r = free_spreading(p, s0, 2.0, [&](double t) { return s0 + 2.0 * D * t; },
                                  [](const Observation&) { return std::optional<double>(); }, L);
    const double lambda2 = oracles::DispersionParams::from_model(p, s0).lambdaT2;
    c.passed = r.worst <= 0.02 && lambda2 <= 1e-3 * s0 * (1.0 + 1e-12);
    c.measured = "max rel err " + sci(r.worst) + " vs 2Dt + sigma0^2 (lambda_T^2 = " + sci(lambda2) + ")";
    c.expected = "<= 2.000e-02";
  });
}

Criterion harmonic_stationarity() {
  const double L = 12.0;
  const std::size_t n = 121;
  const json scen = {{"scenario", "harmonic"}, {"n", n}, {"L", L}, {"T", {1.0, 0.0}}, {"omega", 1.0}, {"b", 1.0}};
  return timed(4, "harmonic stationarity", scen, [&](Criterion& c) {
    const Grid g(n, L, Boundary::no_flux);
    const auto U = sample(g, [&](double x) { return 0.5 * (x - 0.5 * L) * (x - 0.5 * L); });
    bool ok = true;
    std::string measured;
    for (double T : {1.0, 0.0}) {
      const ModelParams p = ModelParams::dilute(T, 1.0);
      DiffusionSolver solver(p, U);
      auto s = solver.make_state(DensityField::clamped(gaussian(g, 0.5 * L, 1.0), p));
      SteadyStateOptions opt;
      opt.tol = 1e-7;
      const auto rep = solver.steady_state(s, opt);
      const double var = oracles::measure_variance(s.rho);
      const double ref = oracles::harmonic_stationary_variance(T, 1.0, p);
      const double err = std::abs(var / ref - 1.0);
      ok = ok && rep.converged && rep.mu_spread <= 1e-6 && err <= 0.01;
      measured += (measured.empty() ? "" : "; ") + std::string("T=") + (T > 0 ? "1" : "0") + ": mu_spread " +
                  sci(rep.mu_spread) + ", sigma2 " + sci(var) + " vs " + sci(ref) + " (rel " + sci(err) + ")";
    }
    c.passed = ok;
    c.measured = measured;
    c.expected = "mu_spread <= 1e-6, rel <= 1.000e-02";
  });
}

Criterion functional_derivative(const MuProvider& mu_provider) {
  const ModelParams p = full_model();
  const std::uint64_t seed = 20240601;
  const json scen = {{"scenario", "functional_derivative"}, {"model", model_json(p)}, {"n", 256}, {"L", 10.0},
                     {"seed", seed}};
  return timed(5, "functional derivative", scen, [&](Criterion& c) {
    const Grid g(256, 10.0, Boundary::periodic);
    const double k = 2.0 * kPi / g.length();
    const auto U = sample(g, [&](double x) { return 0.2 * std::cos(k * x); });
    const FreeEnergyModel model(p, U);
    const auto rho = DensityField::checked(smooth_density(g), p);
    const auto mu = mu_provider ? mu_provider(model, rho.values()) : model.chemical_potential(rho.values());
    const oracles::Functional F = [&](const DensityField& r) { return model.energy(r.values()).total; };

    std::mt19937_64 rng(seed);
    auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
    double worst = 0.0;
    for (int dir = 0; dir < 10; ++dir) {
      double a[4], b[4];
      for (int m = 0; m < 4; ++m) {
        a[m] = unit();
        b[m] = unit();
      }
      auto gdir = sample(g, [&](double x) {
        double v = 0.0;
        for (int m = 0; m < 4; ++m) v += a[m] * std::cos((m + 1) * k * x) + b[m] * std::sin((m + 1) * k * x);
        return v;
      });
      double amax = 0.0;
      for (double v : gdir.values) amax = std::max(amax, std::abs(v));
      for (double& v : gdir.values) v /= amax;
      double exact = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) exact += g.weight(i) * mu[i] * gdir[i];
      const double fd = oracles::functional_derivative_fd(F, rho, gdir, 1e-3, p);
      worst = std::max(worst, std::abs(exact - fd) / std::abs(exact));
    }
    c.passed = worst <= 1e-4;
    c.measured = "max rel err " + sci(worst) + " over 10 directions";
    c.expected = "<= 1.000e-04";
  });
}

Criterion form_equivalence() {
  ModelParams p = full_model();
  const json scen = {{"scenario", "form_equivalence"}, {"model", model_json(p)}, {"n", {256, 512}}, {"L", 10.0}};
  return timed(6, "form equivalence", scen, [&](Criterion& c) {
    auto error_at = [&](std::size_t n) {
      const Grid g(n, 10.0, Boundary::periodic);
      const double k = 2.0 * kPi / g.length();
      const auto U = sample(g, [&](double x) { return 0.2 * std::cos(k * x); });
      const auto rho = DensityField::checked(smooth_density(g), p);
      const auto a = rhs_mu_form(rho, U, p);
      const auto b = rhs_effective_form(rho, U, p);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += a[i] * a[i];
      }
      return std::sqrt(num / den);
    };
    const double e256 = error_at(256);
    const double e512 = error_at(512);
    const double ratio = e256 / e512;
    c.passed = e256 <= 1e-3 && ratio >= 3.5;
    c.measured = "rel L2 " + sci(e256) + " at n=256, ratio " + sci(ratio);
    c.expected = "<= 1.000e-03, ratio >= 3.5";
  });
}

Criterion conservation() {
  const ModelParams p = full_model();
  const json scen = {{"scenario", "conservation"}, {"model", model_json(p)}, {"steps", 10000}, {"n", {128, 129}}};
  return timed(7, "conservation and H-theorem", scen, [&](Criterion& c) {
    bool ok = true;
    std::string measured;
    for (Boundary b : {Boundary::periodic, Boundary::no_flux}) {
      const Grid g(b == Boundary::periodic ? 128 : 129, 10.0, b);
      const auto U = sample(g, [&](double x) { return 0.05 * (x - 5.0) * (x - 5.0); });
      DiffusionSolver solver(p, U);
      auto s = solver.make_state(DensityField::clamped(smooth_density(g), p));
      const double m0 = s.rho.mass();
      double F = solver.ensure_cache(s).energy.total;
      double worst_rise = -std::numeric_limits<double>::infinity();
      bool monotone = true;
      for (int k = 0; k < 10000; ++k) {
        solver.step(s);
        const double Fn = s.cache->energy.total;
        worst_rise = std::max(worst_rise, (Fn - F) / std::abs(F));
        monotone = monotone && Fn - F <= 1e-12 * std::abs(F);
        F = Fn;
      }
      const double drift = std::abs(s.rho.mass() - m0) / m0;
      ok = ok && monotone && drift <= 1e-10;
      measured += (measured.empty() ? "" : "; ") + std::string(to_string(b)) + ": mass drift " + sci(drift) +
                  ", max relative F change " + sci(worst_rise);
    }
    c.passed = ok;
    c.measured = measured;
    c.expected = "drift <= 1e-10, F change <= 1e-12";
  });
}

Criterion hartree_oracle() {
  const json scen = {{"scenario", "hartree"}, {"n", 512}, {"L", 10.0}, {"softening", 0.2}};
  return timed(8, "Hartree oracle", scen, [&](Criterion& c) {
    double worst = 0.0;
    for (Boundary b : {Boundary::periodic, Boundary::no_flux}) {
      const Grid g(512, 10.0, b);
      const CoulombKernel k(g, 1.0, 0.2, true);
      const auto rho = smooth_density(g);
      const auto vd = k.potential(rho.values, CoulombKernel::Path::direct);
      const auto vf = k.potential(rho.values, CoulombKernel::Path::fast);
      const double ed = k.energy(rho.values, vd);
      const double ef = k.energy(rho.values, vf);
      worst = std::max(worst, std::abs(ef - ed) / std::abs(ed));
    }
    const Grid g(512, 10.0, Boundary::periodic);
    const CoulombKernel k(g, 1.0, 0.2, true);
    const auto v = k.potential(ScalarField(g, 0.7).values);
    double vmax = 0.0;
    for (double x : v) vmax = std::max(vmax, std::abs(x));
    c.passed = worst <= 1e-10 && vmax <= 1e-12;
    c.measured = "fast vs direct energy rel " + sci(worst) + ", uniform |v_H| " + sci(vmax);
    c.expected = "<= 1.000e-10, <= 1.000e-12";
  });
}

Criterion dks_unitarity() {
  const double s0 = 0.5;
  const json scen = {{"scenario", "dks"}, {"n", 512}, {"L", 40.0}, {"sigma0_sq", s0}, {"b", {0.0, 1.0}}, {"t_end", 3.0}};
  return timed(9, "DKS unitarity and limits", scen, [&](Criterion& c) {
    const Grid g(512, 40.0, Boundary::periodic);
    const ModelParams free = ModelParams::dilute(0.0, 0.0);
    const auto rho0 = DensityField::clamped(gaussian(g, 20.0, s0), free);
    const OrbitalSet os{g, {orbital_from_density(rho0)}};

    DksSolver solver(free, ScalarField(g));
    auto s = solver.make_state(os);
    double n0 = 0.0, drift_rate = 0.0, worst = 0.0;
    solver.evolve(s, 3.0, 0.25, [&](const Observation& o) {
      if (o.t == 0.0) {
        n0 = o.norms[0];
        return;
      }
      drift_rate = std::max(drift_rate, std::abs(o.norms[0] - n0) / n0 / o.t);
      const double ref = s0 + o.t * o.t / (4.0 * s0);
      worst = std::max(worst, std::abs(o.sigma2 / ref - 1.0));
    });

    ModelParams damped = free;
    damped.b = 1.0;
    DksSolver dsolver(damped, ScalarField(g));
    auto ds = dsolver.make_state(os);
    double prev = std::numeric_limits<double>::infinity(), rise = -std::numeric_limits<double>::infinity();
    bool monotone = true;
    dsolver.evolve(ds, 3.0, 0.01, [&](const Observation& o) {
      const double E = o.energy.total;
      if (std::isfinite(prev)) {
        rise = std::max(rise, (E - prev) / std::abs(prev));
        monotone = monotone && E <= prev + 1e-12 * std::abs(prev);
      }
      prev = E;
    });
    c.passed = drift_rate <= 1e-8 && worst <= 0.01 && monotone;
    c.measured = "norm drift/time " + sci(drift_rate) + ", free sigma2 rel " + sci(worst) +
                 ", max relative energy change (b=1) " + sci(rise);
    c.expected = "<= 1e-8, <= 1e-2, <= 0";
  });
}

Criterion strong_friction() {
  const double L = 16.0, s0 = 2.0, offset = 1.0;
  const std::size_t n = 256;
  const std::vector<double> frictions = {10.0, 30.0, 100.0};
  const std::vector<double> scaled_times = {0.1, 0.25};
  const json scen = {{"scenario", "strong_friction"}, {"n", n}, {"L", L}, {"sigma0_sq", s0}, {"offset", offset},
                     {"b", frictions}, {"t_over_b", scaled_times}};
  return timed(10, "strong-friction correspondence", scen, [&](Criterion& c) {
    const Grid g(n, L, Boundary::periodic);
    const auto U = sample(g, [&](double x) { return 0.5 * (x - 0.5 * L) * (x - 0.5 * L); });
    std::vector<std::future<double>> jobs;
    for (double b : frictions)
      jobs.push_back(std::async(std::launch::async, [&, b] {
        const ModelParams p = ModelParams::dilute(0.0, b);
        const auto rho0 = DensityField::clamped(gaussian(g, 0.5 * L + offset, s0), p);
        DiffusionSolver ds(p, U);
        auto st = ds.make_state(rho0);
        DksSolver ks(p, U);
        auto kt = ks.make_state(OrbitalSet{g, {orbital_from_density(rho0)}});
        const double mass = rho0.mass();
        double worst = 0.0;
        for (double s : scaled_times) {
          ds.advance_to(st, s * b);
          ks.advance_to(kt, s * b);
          worst = std::max(worst, oracles::l1_distance(g, st.rho.values(), density_values(kt.orbitals)) / mass);
        }
        return worst;
      }));
    std::vector<double> l1;
    for (auto& j : jobs) l1.push_back(j.get());
    bool monotone = true;
    for (std::size_t i = 1; i < l1.size(); ++i) monotone = monotone && l1[i] < l1[i - 1];
    c.passed = l1.back() <= 0.05 && monotone;
    c.measured = "L1/mass at b=10,30,100: " + sci(l1[0]) + ", " + sci(l1[1]) + ", " + sci(l1[2]);
    c.expected = "<= 5.000e-02 at b=100, decreasing";
  });
}

Criterion identities() {
  const json scen = {{"scenario", "identities"}, {"n", 256}, {"L", 10.0}};
  return timed(11, "identity checks", scen, [&](Criterion& c) {
    const Grid g(256, 10.0, Boundary::periodic);
    ModelParams p;
    const auto rho = DensityField::checked(smooth_density(g), p);
    const double ew = weizsacker_energy(rho, p);
    const double sf = fisher_entropy(rho);
    const double fisher_err = std::abs(ew - sf / 8.0) / std::abs(ew);

    // Uniform rho = 1 on unit length.
    const Grid unit(16, 1.0, Boundary::periodic);
    ModelParams only_tf;
    only_tf.rho_bar = 2.0;
    only_tf.terms = Terms{.tf = true, .weizsacker = false, .hartree = false, .dirac = false, .entropy = false};
    ModelParams only_d = only_tf;
    only_d.terms = Terms{.tf = false, .weizsacker = false, .hartree = false, .dirac = true, .entropy = false};
    const auto one = DensityField::checked(ScalarField(unit, 1.0), only_tf);
    const ScalarField zero(unit);
    const double e_tf = tf_energy(one, only_tf);
    const double e_d = -dirac_energy(one, only_d);
    const double mu_tf = chemical_potential(one, zero, only_tf)[3];
    const double mu_d = chemical_potential(one, zero, only_d)[3];
    const double closed_err = std::max({std::abs(e_tf - 2.871234000188191), std::abs(e_d - 0.7385587663820223),
                                        std::abs(mu_tf - 4.785390000313652),
                                        std::abs(mu_d + 0.9847450218426964)});
    c.passed = fisher_err <= 1e-6 && closed_err <= 1e-10;
    c.measured = "E_W vs S_F rel " + sci(fisher_err) + ", uniform-gas max abs err " + sci(closed_err);
    c.expected = "<= 1.000e-06, <= 1.000e-10";
  });
}

std::vector<std::function<Criterion()>> all() {
  return {dispersion_law,    zero_temperature_law, classical_limit, harmonic_stationarity,
          [] { return functional_derivative(); }, form_equivalence, conservation, hartree_oracle,
          dks_unitarity,     strong_friction,      identities};
}

Report run_all(bool concurrent) {
  Report r;
  r.environment = environment();
  const auto checks = all();
  if (concurrent) {
    std::vector<std::future<Criterion>> jobs;
    for (const auto& f : checks) jobs.push_back(std::async(std::launch::async, f));
    for (auto& j : jobs) r.criteria.push_back(j.get());
  } else {
    for (const auto& f : checks) r.criteria.push_back(f());
  }
  return r;
}

std::string format_line(const Criterion& c) {
  char head[96];
  std::snprintf(head, sizeof head, "[%s] C%-2d %-32s", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str());
  char tail[64];
  std::snprintf(tail, sizeof tail, " (%.1fs, cfg %s)", c.seconds, c.config_hash.c_str());
  return std::string(head) + c.measured + " | required " + c.expected + tail;
}

json environment() {
  return {{"compiler", __VERSION__},
          {"cplusplus", __cplusplus},
          {"build_type", DTDFT_BUILD_TYPE},
          {"openmp_max_threads", omp_get_max_threads()},
          {"fftw", std::string(fftw_version)},
          {"hardware_threads", std::thread::hardware_concurrency()}};
}

json to_json(const Report& r) {
  json j;
  j["environment"] = r.environment;
  j["environment_hash"] = fnv1a_hex(r.environment.dump());
  j["passed"] = r.all_passed();
  for (const auto& c : r.criteria)
    j["criteria"].push_back({{"id", c.id},
                             {"name", c.name},
                             {"passed", c.passed},
                             {"measured", c.measured},
                             {"expected", c.expected},
                             {"seconds", c.seconds},
                             {"config_hash", c.config_hash}});
  return j;
}

}  // namespace dtdft::verify
