#include "dtdft/dks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dtdft/error.hpp"
#include "dtdft/fft.hpp"
#include "dtdft/kernels.hpp"
#include "dtdft/oracles.hpp"

namespace dtdft {

namespace {

// Phase steps closer than this to pi cannot be unwrapped reliably.
constexpr double kAmbiguousStep = 0.9 * std::numbers::pi;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

ModelParams orbital_params(ModelParams p) {
  p.terms.tf = false;
  p.terms.weizsacker = false;
  return p;
}

std::vector<double> modulus_squared(const Orbital& o) {
  std::vector<double> r(o.phi.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::norm(o.phi[i]);
  return r;
}

double weighted_sum(const Grid& g, std::span<const double> f) { return integrate(g, f); }

std::vector<double> floored(std::span<const double> rho, const ModelParams& p) {
  const double lo = p.density_floor();
  const double hi = p.rho_bar - lo;
  std::vector<double> out(rho.begin(), rho.end());
  for (double& v : out) {
    v = std::max(v, lo);
    if (p.band_limited()) v = std::min(v, hi);
  }
  return out;
}

// Theta with node values replaced by the nearest above-threshold value.
std::vector<double> extend_into_nodes(const Grid& g, std::span<const double> theta, std::span<const double> rho,
                                      double threshold) {
  const std::size_t n = theta.size();
  std::vector<double> out(theta.begin(), theta.end());
  std::vector<std::size_t> dist(n, n + 1);
  std::vector<long> src(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if (rho[i] >= threshold) {
      dist[i] = 0;
      src[i] = static_cast<long>(i);
    }
  // Two sweeps in each direction settle nearest sources on a ring; one suffices on a segment.
  const int passes = g.periodic() ? 2 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    for (std::size_t k = 1; k < (g.periodic() ? n + 1 : n); ++k) {
      const std::size_t i = k % n, prev = (k - 1) % n;
      if (src[prev] >= 0 && dist[prev] + 1 < dist[i]) {
        dist[i] = dist[prev] + 1;
        src[i] = src[prev];
      }
    }
    for (std::size_t k = (g.periodic() ? n : n - 1); k-- > 0;) {
      const std::size_t i = k % n, next = (k + 1) % n;
      if (src[next] >= 0 && dist[next] + 1 < dist[i]) {
        dist[i] = dist[next] + 1;
        src[i] = src[next];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (src[i] >= 0) out[i] = theta[static_cast<std::size_t>(src[i])];
  return out;
}

}  // namespace

void OrbitalSet::validate() const {
  if (orbitals.empty()) throw std::invalid_argument("orbital set is empty");
  for (std::size_t k = 0; k < orbitals.size(); ++k) {
    const auto& o = orbitals[k];
    if (o.phi.size() != grid.size())
      throw std::invalid_argument("orbital " + std::to_string(k) + " does not match the grid size");
    if (!(o.occupation > 0.0) || !std::isfinite(o.occupation))
      throw std::invalid_argument("orbital " + std::to_string(k) + " has non-positive occupation");
    const double nrm = orbital_norm(grid, o);
    if (!(nrm > 0.0) || !std::isfinite(nrm))
      throw std::invalid_argument("orbital " + std::to_string(k) + " has zero or non-finite norm");
  }
}

Orbital orbital_from_density(const DensityField& rho) {
  Orbital o;
  o.phi.resize(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) o.phi[i] = std::sqrt(rho[i]);
  return o;
}

double orbital_norm(const Grid& g, const Orbital& o) { return weighted_sum(g, modulus_squared(o)); }

std::string_view to_string(ThermalForm f) {
  return f == ThermalForm::chemical_potential ? "chemical_potential" : "log_density";
}

ThermalForm thermal_form_from_string(std::string_view s) {
  if (s == "chemical_potential") return ThermalForm::chemical_potential;
  if (s == "log_density") return ThermalForm::log_density;
  throw std::invalid_argument("unknown thermal form '" + std::string(s) + "'");
}

double dks_stable_dt(const Grid& g, const UnitSystem& u) {
  const double h = g.spacing();
  return u.m * h * h / (2.0 * std::numbers::pi * u.hbar);
}

std::vector<double> density_values(const OrbitalSet& os) {
  std::vector<double> rho(os.grid.size(), 0.0);
  for (const auto& o : os.orbitals)
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += o.occupation * std::norm(o.phi[i]);
  return rho;
}

DensityField density_from_orbitals(const OrbitalSet& os, const ModelParams& p) {
  os.validate();
  return DensityField::clamped(ScalarField(os.grid, density_values(os)), p);
}

PhaseField phase_field(const Grid& g, const Orbital& o, double rho_threshold) {
  const std::size_t n = g.size();
  if (o.phi.size() != n) throw GridMismatch("phase_field: orbital does not match the grid");
  const auto rho = modulus_squared(o);
  const auto imax = static_cast<std::size_t>(std::max_element(rho.begin(), rho.end()) - rho.begin());
  if (!(rho[imax] > rho_threshold)) throw std::invalid_argument("phase_field: orbital vanishes everywhere");

  std::vector<double> theta(n, 0.0);
  PhaseField out{ScalarField(g), {}};
  theta[imax] = std::arg(o.phi[imax]);
  auto link = [&](std::size_t from, std::size_t to) {
    const double d = std::arg(o.phi[to] * std::conj(o.phi[from]));
    theta[to] = theta[from] + d;
    if (std::abs(d) > kAmbiguousStep && rho[from] >= rho_threshold && rho[to] >= rho_threshold)
      out.flags.push_back(std::min(from, to));
  };
  if (g.periodic()) {
    // The seam goes next to the density minimum.
    const auto imin = static_cast<std::size_t>(std::min_element(rho.begin(), rho.end()) - rho.begin());
    for (std::size_t i = imax; (i + 1) % n != imin && (i + 1) % n != imax; i = (i + 1) % n) link(i, (i + 1) % n);
    for (std::size_t i = imax; i != imin; i = (i + n - 1) % n) link(i, (i + n - 1) % n);
  } else {
    for (std::size_t i = imax; i + 1 < n; ++i) link(i, i + 1);
    for (std::size_t i = imax; i > 0; --i) link(i, i - 1);
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += g.weight(i) * rho[i] * theta[i];
    den += g.weight(i) * rho[i];
  }
  const double mean = num / den;
  for (std::size_t i = 0; i < n; ++i) out.theta[i] = theta[i] - mean;
  return out;
}

ScalarField kostin_potential(const Grid& g, const Orbital& o, const ModelParams& p, double rho_threshold) {
  const auto pf = phase_field(g, o, rho_threshold);
  const auto ext = extend_into_nodes(g, pf.theta.values, modulus_squared(o), rho_threshold);
  ScalarField v(g);
  const double c = p.units.hbar * p.b / p.units.m;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = c * ext[i];
  return v;
}

DksSolver::DksSolver(ModelParams p, ScalarField U, DksOptions opt)
    : p_(std::move(p)), opt_(opt), model_(orbital_params(p_), std::move(U)) {
  p_.validate_for(model_.grid());
  if (!(opt_.norm_tolerance > 0.0)) throw std::invalid_argument("dks: norm_tolerance must be positive");
  if (opt_.dt < 0.0) throw std::invalid_argument("dks: dt must be non-negative");
  const auto& g = model_.grid();
  if (g.periodic()) {
    dft_ = std::make_shared<const ComplexDft>(g.size());
    k2_ = wavenumbers(g.size(), g.length());
    for (double& k : k2_) k *= k;
  }
}

DksState DksSolver::make_state(OrbitalSet os, double t) const {
  require_same_grid(os.grid, grid(), "DksSolver::make_state");
  os.validate();
  DksState s{.orbitals = std::move(os), .t = t};
  return s;
}

std::vector<double> DksSolver::local_potential(std::span<const double> rho_raw) const {
  const auto rho = floored(rho_raw, p_);
  if (opt_.thermal == ThermalForm::chemical_potential) return model_.evaluate(rho).mu;
  auto w = model_.effective_potential(rho);
  if (p_.entropy_active())
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += p_.kT() * std::log(rho[i]);
  return w;
}

EnergyBreakdown DksSolver::energy(const OrbitalSet& os) const {
  const auto& g = grid();
  const auto& u = p_.units;
  const std::size_t n = g.size();
  double kin = 0.0;
  for (const auto& o : os.orbitals) {
    double e = 0.0;
    if (g.periodic()) {
      std::vector<Complex> f = o.phi;
      dft_->forward(f);
      for (std::size_t k = 0; k < n; ++k) e += k2_[k] * std::norm(f[k]);
      e *= g.spacing() / static_cast<double>(n);
    } else {
      for (std::size_t i = 0; i + 1 < n; ++i) e += std::norm(o.phi[i + 1] - o.phi[i]);
      e /= g.spacing();
    }
    kin += o.occupation * u.hbar * u.hbar / (2.0 * u.m) * e;
  }
  const auto rho = floored(density_values(os), p_);
  EnergyBreakdown out = model_.energy(rho);
  out.e_kin = kin;
  if (opt_.thermal == ThermalForm::log_density && p_.entropy_active()) {
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = rho[i] * std::log(rho[i]) - rho[i];
    out.minus_TS = p_.kT() * integrate(g, f);
  }
  out.sum();
  return out;
}

void DksSolver::kinetic(std::vector<Complex>& phi, double tau) const {
  const auto& g = grid();
  const auto& u = p_.units;
  const std::size_t n = phi.size();
  if (g.periodic()) {
    dft_->forward(phi);
    const double c = u.hbar * tau / (2.0 * u.m);
    for (std::size_t k = 0; k < n; ++k) phi[k] *= std::polar(1.0, -c * k2_[k]);
    dft_->inverse(phi);
    return;
  }
  // Crank-Nicolson with the mirror-ghost laplacian, solved by the Thomas algorithm.
  const double h = g.spacing();
  const Complex beta(0.0, u.hbar * tau / (4.0 * u.m * h * h));
  std::vector<Complex> rhs(n), sub(n), diag(n), sup(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Complex l = i == 0 ? phi[1] : phi[i - 1];
    const Complex r = i + 1 == n ? phi[n - 2] : phi[i + 1];
    rhs[i] = phi[i] + beta * (l - 2.0 * phi[i] + r);
    diag[i] = 1.0 + 2.0 * beta;
    sub[i] = i == 0 ? 0.0 : (i + 1 == n ? -2.0 * beta : -beta);
    sup[i] = i + 1 == n ? 0.0 : (i == 0 ? -2.0 * beta : -beta);
  }
  for (std::size_t i = 1; i < n; ++i) {
    const Complex w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  phi[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) phi[i] = (rhs[i] - sup[i] * phi[i + 1]) / diag[i];
}

// Exact flow of i hbar d(phi)/dt = (W + hbar gamma theta_g) phi over tau with
// rho held fixed, gamma = b/m. The gauge-fixed phase relaxes exponentially
// while the mean phase advances with the density-weighted mean of W.
void DksSolver::potential(Orbital& o, std::span<const double> W, double tau) const {
  const auto& g = grid();
  const double hbar = p_.units.hbar;
  const auto r = modulus_squared(o);
  const double threshold = opt_.node_threshold * *std::max_element(r.begin(), r.end());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += g.weight(i) * r[i] * W[i];
    den += g.weight(i) * r[i];
  }
  const double wbar = num / den;
  const double gamma = p_.b / p_.units.m;
  const double decay = std::exp(-gamma * tau);
  const double relax = gamma > 0.0 ? -std::expm1(-gamma * tau) / gamma : tau;

  std::vector<double> theta(r.size(), 0.0);
  if (gamma > 0.0) {
    const auto pf = phase_field(g, o, threshold);
    theta = extend_into_nodes(g, pf.theta.values, r, threshold);
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double dtheta = theta[i] * (decay - 1.0) - (W[i] - wbar) * relax / hbar - wbar * tau / hbar;
    o.phi[i] *= std::polar(1.0, dtheta);
  }
}

void DksSolver::half_potential(OrbitalSet& os, double tau) const {
  const auto rho = density_values(os);
  const auto W = local_potential(rho);
  for (auto& o : os.orbitals) potential(o, W, tau);
}

void DksSolver::step(DksState& s, double t_target) const {
  const double base = opt_.dt > 0.0 ? std::min(opt_.dt, dks_stable_dt(grid(), p_.units))
                                    : dks_stable_dt(grid(), p_.units);
  if (!(s.dt > 0.0) || s.dt > base) s.dt = base;
  const auto& g = grid();
  std::vector<double> before;
  for (const auto& o : s.orbitals.orbitals) before.push_back(orbital_norm(g, o));

  while (true) {
    if (s.dt < opt_.dt_min)
      throw NumericalAbort("dks step size " + fmt(s.dt) + " fell below dt_min " + fmt(opt_.dt_min), s.t);
    const double remaining = t_target - s.t;
    const bool clipped = remaining <= s.dt;
    const double dt = clipped ? remaining : s.dt;

    OrbitalSet trial = s.orbitals;
    half_potential(trial, 0.5 * dt);
    for (auto& o : trial.orbitals) kinetic(o.phi, dt);
    half_potential(trial, 0.5 * dt);

    bool ok = true;
    for (std::size_t k = 0; k < before.size() && ok; ++k) {
      const double after = orbital_norm(g, trial.orbitals[k]);
      ok = std::isfinite(after) && std::abs(after - before[k]) <= opt_.norm_tolerance * before[k];
    }
    if (!ok) {
      s.dt *= 0.5;
      ++s.rejections;
      continue;
    }
    s.orbitals = std::move(trial);
    s.t = clipped ? t_target : s.t + dt;
    s.last_dt = dt;
    ++s.steps;
    if (s.dt < base) s.dt = std::min(base, s.dt * 1.2);
    return;
  }
}

void DksSolver::advance_to(DksState& s, double t_target) const {
  const std::size_t start = s.steps;
  while (s.t < t_target) {
    if (s.steps - start >= opt_.max_steps)
      throw NumericalAbort("dks step budget exhausted before t = " + fmt(t_target), s.t);
    step(s, t_target);
  }
}

Observation DksSolver::observe(const DksState& s) const {
  const auto& g = grid();
  Observation o;
  o.t = s.t;
  const auto rho_raw = density_values(s.orbitals);
  o.mass = integrate(g, rho_raw);
  o.energy = energy(s.orbitals);
  const auto rho = floored(rho_raw, p_);
  o.S = model_.entropy(rho);
  o.sigma2 = oracles::measure_variance(g, rho_raw);
  o.dt_used = s.last_dt;
  for (const auto& orb : s.orbitals.orbitals) o.norms.push_back(orbital_norm(g, orb));

  // Madelung chemical potential Q + W over the non-negligible density.
  std::vector<double> sq(rho.size()), lap(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) sq[i] = std::sqrt(rho[i]);
  kernels::laplacian(sq, g.spacing(), g.boundary(), lap);
  const auto W = local_potential(rho_raw);
  const double threshold = opt_.node_threshold * *std::max_element(rho_raw.begin(), rho_raw.end());
  const auto& u = p_.units;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho_raw[i] < threshold) continue;
    const double mu = -u.hbar * u.hbar / (2.0 * u.m) * lap[i] / sq[i] + W[i];
    lo = std::min(lo, mu);
    hi = std::max(hi, mu);
  }
  o.mu_spread = hi - lo;
  return o;
}

Trajectory DksSolver::evolve(DksState& s, double t_end, double cadence, const Observer& observer,
                             bool record_fields) const {
  if (t_end < s.t) throw std::invalid_argument("evolve: t_end precedes the current time");
  if (!(cadence > 0.0)) throw std::invalid_argument("evolve: cadence must be positive");
  Trajectory traj;
  auto emit = [&] {
    traj.observations.push_back(observe(s));
    if (observer) observer(traj.observations.back());
    if (record_fields) traj.snapshots.push_back({s.t, density_values(s.orbitals)});
  };
  emit();
  while (s.t < t_end) {
    advance_to(s, std::min(next_cadence_time(s.t, cadence), t_end));
    emit();
  }
  return traj;
}

MadelungFields DksSolver::madelung_split(const Orbital& prev, const Orbital& curr, const Orbital& next,
                                         double dt) const {
  const auto& g = grid();
  const auto& u = p_.units;
  const std::size_t n = g.size();
  const double h = g.spacing();
  const auto b = g.boundary();

  auto velocity = [&](const Orbital& o, std::vector<double>& rho) {
    rho = modulus_squared(o);
    std::vector<double> re(n), im(n), dre(n), dim(n), v(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      re[i] = o.phi[i].real();
      im[i] = o.phi[i].imag();
    }
    kernels::gradient(re, h, b, dre);
    kernels::gradient(im, h, b, dim);
    const double threshold = opt_.node_threshold * *std::max_element(rho.begin(), rho.end());
    for (std::size_t i = 0; i < n; ++i)
      if (rho[i] >= threshold) v[i] = u.hbar / u.m * (re[i] * dim[i] - im[i] * dre[i]) / rho[i];
    if (!g.periodic()) v.front() = v.back() = 0.0;
    return v;
  };
  std::vector<double> rp, rc, rn;
  const auto vp = velocity(prev, rp);
  const auto vc = velocity(curr, rc);
  const auto vn = velocity(next, rn);
  const double threshold = opt_.node_threshold * *std::max_element(rc.begin(), rc.end());

  std::vector<double> flux(n), divf(n), dv(n), sq(n), lap(n), phi_total(n), dphi(n);
  for (std::size_t i = 0; i < n; ++i) flux[i] = rc[i] * vc[i];
  kernels::divergence(flux, h, b, divf);
  kernels::gradient(vc, h, b, dv);

  const auto rho = floored(rc, p_);
  for (std::size_t i = 0; i < n; ++i) sq[i] = std::sqrt(rho[i]);
  kernels::laplacian(sq, h, b, lap);
  const auto W = local_potential(rc);
  for (std::size_t i = 0; i < n; ++i) phi_total[i] = -u.hbar * u.hbar / (2.0 * u.m) * lap[i] / sq[i] + W[i];
  kernels::gradient(phi_total, h, b, dphi);

  ScalarField cont(g), force(g), inertial(g), friction(g);
  for (std::size_t i = 0; i < n; ++i) {
    cont[i] = (rn[i] - rp[i]) / (2.0 * dt) + divf[i];
    if (rc[i] < threshold) continue;
    const double inert = u.m * (vn[i] - vp[i]) / (2.0 * dt) + u.m * vc[i] * dv[i];
    inertial[i] = std::abs(inert);
    friction[i] = std::abs(p_.b * vc[i]);
    force[i] = inert + p_.b * vc[i] + dphi[i];
  }
  return MadelungFields{
      .rho = DensityField::clamped(ScalarField(g, rc), p_),
      .V = VectorField(g, vc),
      .theta = phase_field(g, curr, threshold).theta,
      .continuity_residual = std::move(cont),
      .force_residual = std::move(force),
      .inertial = std::move(inertial),
      .friction = std::move(friction),
  };
}

OrbitalSet dks_step(const OrbitalSet& os, const ScalarField& U, double dt, const ModelParams& p,
                    const DksOptions& opt) {
  DksOptions o = opt;
  o.dt = dt;
  DksSolver solver(p, U, o);
  auto s = solver.make_state(os);
  solver.advance_to(s, dt);
  return std::move(s.orbitals);
}

Trajectory dks_evolve(DksState& s, const ScalarField& U, double t_end, double cadence, const ModelParams& p,
                      const DksOptions& opt) {
  return DksSolver(p, U, opt).evolve(s, t_end, cadence);
}

}  // namespace dtdft
