#include "dtdft/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "dtdft/error.hpp"
#include "dtdft/kernels.hpp"
#include "dtdft/oracles.hpp"

namespace dtdft {

namespace {

ModelParams validated(ModelParams p, const Grid& g) {
  p.validate_for(g);
  if (!(p.b > 0.0)) throw std::invalid_argument("model.b must be > 0 for the diffusion engine");
  return p;
}

double energy_scale(const EnergyBreakdown& e) {
  const double parts = std::abs(e.e_kin) + std::abs(e.e_tf) + std::abs(e.e_w) + std::abs(e.e_h) +
                       std::abs(e.e_d) + std::abs(e.e_u) + std::abs(e.minus_TS);
  return std::max(std::abs(e.total), parts);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

DiffusionSolver::DiffusionSolver(ModelParams p, ScalarField U, StepControl control)
    : model_(validated(std::move(p), U.grid), std::move(U)), control_(control) {}

DiffusionState DiffusionSolver::make_state(DensityField rho, double t) const {
  require_same_grid(rho.grid(), model_.grid(), "DiffusionSolver::make_state");
  return DiffusionState{.rho = std::move(rho), .t = t, .params = model_.params(), .U = model_.external(),
                        .cache = std::nullopt};
}

std::vector<double> DiffusionSolver::rhs(std::span<const double> rho, std::span<const double> mu) const {
  const auto& g = model_.grid();
  std::vector<double> out(rho.size());
  kernels::flux_divergence(rho, mu, g.spacing(), g.boundary(), 1.0 / model_.params().b, out);
  return out;
}

double DiffusionSolver::stable_dt(std::span<const double> rho, std::span<const double> mu) const {
  const double bound = model_.jacobian_bound(rho, mu);
  double dt = bound > 0.0 ? control_.safety * 2.0 / bound : std::numeric_limits<double>::infinity();
  if (control_.dt_max > 0.0) dt = std::min(dt, control_.dt_max);
  return dt;
}

const DiffusionState::Cache& DiffusionSolver::ensure_cache(DiffusionState& s) const {
  if (!s.cache) {
    auto ev = model_.evaluate(s.rho.values());
    s.cache = DiffusionState::Cache{ev.energy, ev.entropy, std::move(ev.mu)};
  }
  return *s.cache;
}

// The construction floor is not re-imposed here: a cell sitting on the floor
// may still lose mass.
bool DiffusionSolver::admissible(std::span<const double> rho) const {
  const auto& p = model_.params();
  const bool capped = p.band_limited();
  for (double v : rho) {
    if (!std::isfinite(v) || !(v > 0.0)) return false;
    if (capped && !(v < p.rho_bar)) return false;
  }
  return true;
}

void DiffusionSolver::step(DiffusionState& s, double t_target) const {
  const auto& cache = ensure_cache(s);
  const auto r = rhs(s.rho.values(), cache.mu);
  const double cap = stable_dt(s.rho.values(), cache.mu);
  if (!(s.dt > 0.0)) s.dt = std::isfinite(cap) ? 0.1 * cap : 1.0;
  s.dt = std::min(s.dt, cap);

  const double F0 = cache.energy.total;
  const double allowed = control_.energy_tolerance * energy_scale(cache.energy);
  const double remaining = t_target - s.t;
  const auto rho0 = s.rho.values();
  std::vector<double> trial(rho0.size());

  while (true) {
    if (s.dt < control_.dt_min)
      throw NumericalAbort("diffusion step size " + fmt(s.dt) + " fell below dt_min " + fmt(control_.dt_min),
                           s.t);
    const bool clipped = remaining <= s.dt;
    const double dt = clipped ? remaining : s.dt;
    for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = rho0[i] + dt * r[i];

    std::optional<FreeEnergyModel::Evaluation> ev;
    if (admissible(trial)) {
      ev = model_.evaluate(trial);
      if (!(ev->energy.total - F0 <= allowed)) ev.reset();
    }
    if (!ev) {
      s.dt *= 0.5;
      s.accept_streak = 0;
      ++s.rejections;
      continue;
    }

    s.rho = DensityField::positive(ScalarField(s.rho.grid(), std::move(trial)), model_.params());
    s.cache = DiffusionState::Cache{ev->energy, ev->entropy, std::move(ev->mu)};
    s.t = clipped ? t_target : s.t + dt;
    s.last_dt = dt;
    ++s.steps;
    if (++s.accept_streak >= control_.growth_after) {
      s.accept_streak = 0;
      s.dt *= control_.growth;
    }
    return;
  }
}

void DiffusionSolver::advance_to(DiffusionState& s, double t_target) const {
  const std::size_t start = s.steps;
  while (s.t < t_target) {
    if (s.steps - start >= control_.max_steps)
      throw NumericalAbort("diffusion step budget exhausted before t = " + fmt(t_target), s.t);
    step(s, t_target);
  }
}

Observation DiffusionSolver::observe(DiffusionState& s) const {
  const auto& c = ensure_cache(s);
  Observation o;
  o.t = s.t;
  o.mass = s.rho.mass();
  o.energy = c.energy;
  o.S = c.entropy;
  o.sigma2 = oracles::measure_variance(s.rho);
  const auto [lo, hi] = std::minmax_element(c.mu.begin(), c.mu.end());
  o.mu_spread = *hi - *lo;
  o.dt_used = s.last_dt;
  return o;
}

Trajectory DiffusionSolver::evolve(DiffusionState& s, double t_end, double cadence, const Observer& observer,
                                   bool record_fields) const {
  if (t_end < s.t) throw std::invalid_argument("evolve: t_end precedes the current time");
  if (!(cadence > 0.0)) throw std::invalid_argument("evolve: cadence must be positive");
  Trajectory traj;
  auto emit = [&] {
    traj.observations.push_back(observe(s));
    if (observer) observer(traj.observations.back());
    if (record_fields) traj.snapshots.push_back({s.t, {s.rho.values().begin(), s.rho.values().end()}});
  };
  emit();
  while (s.t < t_end) {
    advance_to(s, std::min(next_cadence_time(s.t, cadence), t_end));
    emit();
  }
  return traj;
}

SteadyStateReport DiffusionSolver::steady_state(DiffusionState& s, const SteadyStateOptions& opt) const {
  SteadyStateReport rep;
  const std::size_t start = s.steps;
  const auto& w = model_.grid().weights();
  while (true) {
    const auto& c = ensure_cache(s);
    const auto r = rhs(s.rho.values(), c.mu);
    double rmax = 0.0, rhomax = 0.0, num = 0.0, den = 0.0;
    const auto rho = s.rho.values();
    for (std::size_t i = 0; i < r.size(); ++i) {
      rmax = std::max(rmax, std::abs(r[i]));
      rhomax = std::max(rhomax, rho[i]);
      num += w[i] * rho[i] * c.mu[i];
      den += w[i] * rho[i];
    }
    const auto [lo, hi] = std::minmax_element(c.mu.begin(), c.mu.end());
    rep.rhs_residual = rmax;
    rep.mu_spread = *hi - *lo;
    rep.mean_mu = num / den;
    rep.steps = s.steps - start;
    // A vanishing mean chemical potential would make the relative spread
    // criterion unreachable; fall back to an absolute one.
    const double mu_scale = std::max(std::abs(rep.mean_mu), 1.0);
    if (rmax <= opt.tol * rhomax / opt.t_char && rep.mu_spread <= opt.tol * mu_scale) {
      rep.converged = true;
      return rep;
    }
    if (rep.steps >= opt.max_steps)
      throw NumericalAbort("steady state not reached within " + std::to_string(opt.max_steps) +
                               " steps (max rhs " + fmt(rmax) + ", mu spread " + fmt(rep.mu_spread) + ")",
                           s.t);
    for (std::size_t k = 0; k < opt.check_every; ++k) step(s);
  }
}

ScalarField rhs_mu_form(const DensityField& rho, const ScalarField& U, const ModelParams& p) {
  require_same_grid(rho.grid(), U.grid, "rhs_mu_form");
  DiffusionSolver solver(p, U);
  const auto mu = solver.model().chemical_potential(rho.values());
  return ScalarField(rho.grid(), solver.rhs(rho.values(), mu));
}

ScalarField rhs_effective_form(const DensityField& rho, const ScalarField& U, const ModelParams& p) {
  require_same_grid(rho.grid(), U.grid, "rhs_effective_form");
  p.validate_for(rho.grid());
  const FreeEnergyModel model(p, U);
  const auto& g = rho.grid();
  const auto r = rho.values();
  const std::size_t n = r.size();

  const auto ueff = model.effective_potential(r);
  std::vector<double> drift(n);
  kernels::flux_divergence(r, ueff, g.spacing(), g.boundary(), 1.0 / p.b, drift);

  auto dr = model.effective_diffusion(r);
  for (std::size_t i = 0; i < n; ++i) dr[i] *= r[i];
  std::vector<double> spread(n);
  kernels::laplacian(dr, g.spacing(), g.boundary(), spread);

  for (std::size_t i = 0; i < n; ++i) drift[i] += spread[i];
  return ScalarField(g, std::move(drift));
}

DiffusionState step(const DiffusionState& s) {
  DiffusionSolver solver(s.params, s.U);
  DiffusionState out = s;
  solver.step(out);
  return out;
}

Trajectory evolve(DiffusionState& s, double t_end, double cadence) {
  return DiffusionSolver(s.params, s.U).evolve(s, t_end, cadence);
}

SteadyStateReport steady_state(DiffusionState& s, double tol) {
  SteadyStateOptions opt;
  opt.tol = tol;
  return DiffusionSolver(s.params, s.U).steady_state(s, opt);
}

double next_cadence_time(double t, double cadence) {
  const double k = std::floor(t / cadence);
  double next = (k + 1.0) * cadence;
  if (next - t <= 1e-12 * cadence) next = (k + 2.0) * cadence;
  return next;
}

}  // namespace dtdft
