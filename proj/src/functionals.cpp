#include "dtdft/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dtdft/error.hpp"
#include "dtdft/kernels.hpp"

namespace dtdft {

namespace {

constexpr double kThreePiSq = 3.0 * std::numbers::pi * std::numbers::pi;

double cbrt3pi2(double rho) { return std::cbrt(kThreePiSq * rho); }

double tf_energy_density(double rho, const UnitSystem& u) {
  const double c = cbrt3pi2(rho);
  return rho * 3.0 * u.hbar * u.hbar * c * c / (10.0 * u.m);
}

double tf_potential(double rho, const UnitSystem& u) {
  const double c = cbrt3pi2(rho);
  return u.hbar * u.hbar * c * c / (2.0 * u.m);
}

double dirac_energy_density(double rho, const UnitSystem& u) {
  return -rho * 3.0 * u.e2 * cbrt3pi2(rho) / (4.0 * std::numbers::pi);
}

double dirac_potential(double rho, const UnitSystem& u) {
  return -u.e2 * cbrt3pi2(rho) / std::numbers::pi;
}

// rho ln rho + hole(rho); the entropy density is -kB times this.
double neg_entropy_density(double rho, const ModelParams& p) {
  const double rb = p.rho_bar;
  double hole = 0.0;
  if (p.statistics == Statistics::fermi_dirac) {
    const double r = rb - rho;
    hole = r * std::log(r);
  } else {
    hole = rb * std::log(rb) - rho * (1.0 + std::log(rb));
  }
  return rho * std::log(rho) + hole;
}

// T * (-dS/drho): kT ln(rho/(rho_bar - rho)), or kT ln(rho/rho_bar) when dilute.
double entropy_potential(double rho, const ModelParams& p) {
  if (p.statistics == Statistics::fermi_dirac) return p.kT() * std::log(rho / (p.rho_bar - rho));
  return p.kT() * std::log(rho / p.rho_bar);
}

double entropy_potential_slope(double rho, const ModelParams& p) {
  if (p.statistics == Statistics::fermi_dirac) return p.kT() * (1.0 / rho + 1.0 / (p.rho_bar - rho));
  return p.kT() / rho;
}

struct Neighbours {
  std::size_t l, r;
};

// Mirror neighbours at no-flux ends, wrap on periodic grids.
Neighbours neighbours(const Grid& g, std::size_t i) {
  const std::size_t n = g.size();
  if (g.periodic()) return {(i + n - 1) % n, (i + 1) % n};
  return {i == 0 ? 1 : i - 1, i + 1 == n ? n - 2 : i + 1};
}

double weizsacker_energy_span(const Grid& g, std::span<const double> rho, const UnitSystem& u) {
  const std::size_t n = rho.size();
  const std::size_t edges = g.periodic() ? n : n - 1;
  double s = 0.0;
  for (std::size_t e = 0; e < edges; ++e) {
    const std::size_t r = (e + 1) % n;
    s += (rho[r] - rho[e]) * (std::log(rho[r]) - std::log(rho[e]));
  }
  return u.hbar * u.hbar / (8.0 * u.m) * s / g.spacing();
}

std::vector<double> weizsacker_potential_span(const Grid& g, std::span<const double> rho,
                                              const UnitSystem& u) {
  const std::size_t n = rho.size();
  std::vector<double> ln(n), lap_ln(n), lap_rho(n);
  for (std::size_t i = 0; i < n; ++i) ln[i] = std::log(rho[i]);
  kernels::laplacian(ln, g.spacing(), g.boundary(), lap_ln);
  kernels::laplacian(rho, g.spacing(), g.boundary(), lap_rho);
  const double c = -u.hbar * u.hbar / (8.0 * u.m);
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = c * (lap_ln[i] + lap_rho[i] / rho[i]);
  return q;
}

}  // namespace

std::string_view to_string(Statistics s) {
  return s == Statistics::fermi_dirac ? "fermi_dirac" : "boltzmann";
}

Statistics statistics_from_string(std::string_view s) {
  if (s == "fermi_dirac") return Statistics::fermi_dirac;
  if (s == "boltzmann") return Statistics::boltzmann;
  throw std::invalid_argument("unknown statistics '" + std::string(s) + "'");
}

double ModelParams::softening(const Grid& g) const {
  return coulomb_softening.value_or(5.0 * g.spacing());
}

void ModelParams::validate() const {
  units.validate();
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("model.T must be >= 0");
  if (!(b >= 0.0) || !std::isfinite(b)) throw std::invalid_argument("model.b must be >= 0");
  if (!(rho_bar > 0.0) || !std::isfinite(rho_bar))
    throw std::invalid_argument("model.rho_bar must be > 0");
  if (coulomb_softening && !(*coulomb_softening > 0.0))
    throw std::invalid_argument("model.coulomb_softening must be > 0");
}

void ModelParams::validate_for(const Grid& g) const {
  validate();
  if (g.periodic() && hartree_active() && !background_neutralization)
    throw std::invalid_argument(
        "model.background_neutralization: periodic Coulomb sums need a neutralizing background");
}

ModelParams ModelParams::dilute(double T, double b, const UnitSystem& u) {
  ModelParams p;
  p.units = u;
  p.T = T;
  p.b = b;
  p.terms = Terms{.tf = false, .weizsacker = true, .hartree = false, .dirac = false, .entropy = true};
  p.statistics = Statistics::boltzmann;
  return p;
}

void check_band(std::span<const double> rho, const ModelParams& p) {
  const double lo = p.density_floor();
  const double hi = p.rho_bar - lo;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double v = rho[i];
    if (!std::isfinite(v) || v < lo)
      throw BandViolation(i, v, "density " + std::to_string(v) + " below floor at index " + std::to_string(i));
    if (p.band_limited() && v > hi)
      throw BandViolation(i, v, "density " + std::to_string(v) + " above rho_bar at index " + std::to_string(i));
  }
}

DensityField DensityField::clamped(ScalarField f, const ModelParams& p) {
  const double lo = p.density_floor();
  const double hi = p.rho_bar - lo;
  for (double& v : f.values) {
    v = std::max(v, lo);
    if (p.band_limited()) v = std::min(v, hi);
  }
  return DensityField(std::move(f));
}

DensityField DensityField::checked(ScalarField f, const ModelParams& p) {
  check_band(f.values, p);
  return DensityField(std::move(f));
}

DensityField DensityField::positive(ScalarField f, const ModelParams& p) {
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f[i];
    if (!(v > 0.0) || (p.band_limited() && !(v < p.rho_bar)))
      throw BandViolation(i, v, "density " + std::to_string(v) + " outside (0, rho_bar) at index " + std::to_string(i));
  }
  return DensityField(std::move(f));
}

double tf_energy(const DensityField& rho, const ModelParams& p) {
  const auto& g = rho.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += g.weight(i) * tf_energy_density(rho[i], p.units);
  return s;
}

double weizsacker_energy(const DensityField& rho, const ModelParams& p) {
  return weizsacker_energy_span(rho.grid(), rho.values(), p.units);
}

double dirac_energy(const DensityField& rho, const ModelParams& p) {
  const auto& g = rho.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += g.weight(i) * dirac_energy_density(rho[i], p.units);
  return s;
}

double external_energy(const DensityField& rho, const ScalarField& U) {
  require_same_grid(rho.grid(), U.grid, "external_energy");
  const auto& g = rho.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += g.weight(i) * rho[i] * U[i];
  return s;
}

double fd_entropy(const DensityField& rho, const ModelParams& p) {
  if (p.statistics == Statistics::fermi_dirac) {
    for (std::size_t i = 0; i < rho.size(); ++i)
      if (!(rho[i] < p.rho_bar))
        throw BandViolation(i, rho[i], "fd_entropy: density at or above rho_bar");
  }
  const auto& g = rho.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += g.weight(i) * neg_entropy_density(rho[i], p);
  return -p.units.kB * s;
}

double fisher_entropy(const DensityField& rho) {
  const auto& g = rho.grid();
  std::vector<double> ln(rho.size()), lap(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) ln[i] = std::log(rho[i]);
  kernels::laplacian(ln, g.spacing(), g.boundary(), lap);
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += g.weight(i) * rho[i] * lap[i];
  return -s;
}

EnergyBreakdown free_energy(const DensityField& rho, const ScalarField& U, const ModelParams& p) {
  require_same_grid(rho.grid(), U.grid, "free_energy");
  return FreeEnergyModel(p, U).energy(rho.values());
}

ScalarField bohm_potential(const DensityField& rho, const ModelParams& p) {
  const auto& g = rho.grid();
  const std::size_t n = rho.size();
  std::vector<double> amp(n), lap(n);
  for (std::size_t i = 0; i < n; ++i) amp[i] = std::sqrt(rho[i]);
  kernels::laplacian(amp, g.spacing(), g.boundary(), lap);
  const double c = -p.units.hbar * p.units.hbar / (2.0 * p.units.m);
  for (std::size_t i = 0; i < n; ++i) lap[i] = c * lap[i] / amp[i];
  return ScalarField(g, std::move(lap));
}

ScalarField weizsacker_potential(const DensityField& rho, const ModelParams& p) {
  return ScalarField(rho.grid(), weizsacker_potential_span(rho.grid(), rho.values(), p.units));
}

ScalarField chemical_potential(const DensityField& rho, const ScalarField& U, const ModelParams& p) {
  require_same_grid(rho.grid(), U.grid, "chemical_potential");
  if (p.band_limited()) check_band(rho.values(), p);
  return ScalarField(rho.grid(), FreeEnergyModel(p, U).chemical_potential(rho.values()));
}

ScalarField effective_potential(const DensityField& rho, const ScalarField& U, const ModelParams& p) {
  require_same_grid(rho.grid(), U.grid, "effective_potential");
  return ScalarField(rho.grid(), FreeEnergyModel(p, U).effective_potential(rho.values()));
}

DiffusionTensorField effective_diffusion(const DensityField& rho, const ModelParams& p) {
  FreeEnergyModel model(p, ScalarField(rho.grid()));
  return {ScalarField(rho.grid(), model.effective_diffusion(rho.values()))};
}

// ---- FreeEnergyModel -------------------------------------------------------

FreeEnergyModel::FreeEnergyModel(ModelParams p, ScalarField U) : p_(std::move(p)), U_(std::move(U)) {
  p_.validate();
  if (p_.hartree_active())
    kernel_.emplace(U_.grid, p_.units.e2, p_.softening(U_.grid), p_.background_neutralization);
}

void FreeEnergyModel::add_local_terms(std::span<const double> rho, EnergyBreakdown& e) const {
  const auto& g = grid();
  const auto& u = p_.units;
  double tf = 0.0, d = 0.0, ext = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double w = g.weight(i);
    if (p_.terms.tf) tf += w * tf_energy_density(rho[i], u);
    if (p_.terms.dirac) d += w * dirac_energy_density(rho[i], u);
    ext += w * rho[i] * U_[i];
  }
  e.e_tf = tf;
  e.e_d = d;
  e.e_u = ext;
  if (p_.terms.weizsacker) e.e_w = weizsacker_energy_span(g, rho, u);
}

double FreeEnergyModel::entropy(std::span<const double> rho) const {
  if (!p_.entropy_active()) return 0.0;
  const auto& g = grid();
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) s += g.weight(i) * neg_entropy_density(rho[i], p_);
  return -p_.units.kB * s;
}

EnergyBreakdown FreeEnergyModel::energy(std::span<const double> rho) const {
  EnergyBreakdown e;
  add_local_terms(rho, e);
  if (kernel_) {
    const auto v = kernel_->potential(rho);
    e.e_h = kernel_->energy(rho, v);
  }
  if (p_.entropy_active()) e.minus_TS = -p_.T * entropy(rho);
  e.sum();
  return e;
}

FreeEnergyModel::Evaluation FreeEnergyModel::evaluate(std::span<const double> rho) const {
  Evaluation out;
  add_local_terms(rho, out.energy);
  std::vector<double> vh;
  if (kernel_) {
    vh = kernel_->potential(rho);
    out.energy.e_h = kernel_->energy(rho, vh);
  }
  if (p_.entropy_active()) {
    out.entropy = entropy(rho);
    out.energy.minus_TS = -p_.T * out.entropy;
  }
  out.energy.sum();

  const std::size_t n = rho.size();
  out.mu.assign(U_.values.begin(), U_.values.end());
  if (p_.terms.weizsacker) {
    const auto q = weizsacker_potential_span(grid(), rho, p_.units);
    for (std::size_t i = 0; i < n; ++i) out.mu[i] += q[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (p_.terms.tf) out.mu[i] += tf_potential(rho[i], p_.units);
    if (p_.terms.dirac) out.mu[i] += dirac_potential(rho[i], p_.units);
    if (p_.entropy_active()) out.mu[i] += entropy_potential(rho[i], p_);
    if (kernel_) out.mu[i] += vh[i];
  }
  return out;
}

std::vector<double> FreeEnergyModel::chemical_potential(std::span<const double> rho) const {
  return evaluate(rho).mu;
}

std::vector<double> FreeEnergyModel::hartree_potential(std::span<const double> rho) const {
  if (!kernel_) return std::vector<double>(rho.size(), 0.0);
  return kernel_->potential(rho);
}

std::vector<double> FreeEnergyModel::weizsacker_potential(std::span<const double> rho) const {
  return weizsacker_potential_span(grid(), rho, p_.units);
}

std::vector<double> FreeEnergyModel::effective_potential(std::span<const double> rho) const {
  std::vector<double> v = hartree_potential(rho);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    v[i] += U_[i];
    if (p_.terms.dirac) v[i] += dirac_potential(rho[i], p_.units);
  }
  return v;
}

std::vector<double> FreeEnergyModel::effective_diffusion(std::span<const double> rho) const {
  const auto& g = grid();
  const auto& u = p_.units;
  const std::size_t n = rho.size();
  std::vector<double> lap_ln(n, 0.0);
  if (p_.terms.weizsacker) {
    std::vector<double> ln(n);
    for (std::size_t i = 0; i < n; ++i) ln[i] = std::log(rho[i]);
    kernels::laplacian(ln, g.spacing(), g.boundary(), lap_ln);
  }
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    if (p_.terms.tf) {
      const double c = cbrt3pi2(rho[i]);
      v += u.hbar * u.hbar * c * c / (5.0 * u.m);
    }
    if (p_.terms.weizsacker) v -= u.hbar * u.hbar / (4.0 * u.m) * lap_ln[i];
    if (p_.entropy_active()) {
      if (p_.statistics == Statistics::fermi_dirac)
        v -= p_.kT() * (p_.rho_bar / rho[i]) * std::log1p(-rho[i] / p_.rho_bar);
      else
        v += p_.kT();
    }
    d[i] = v / p_.b;
  }
  return d;
}

double FreeEnergyModel::jacobian_bound(std::span<const double> rho, std::span<const double> mu) const {
  const auto& g = grid();
  const auto& u = p_.units;
  const std::size_t n = rho.size();
  const double h = g.spacing();
  const double hartree_row = kernel_ ? kernel_->row_sum() : 0.0;
  const double cw = u.hbar * u.hbar / (8.0 * u.m * h * h);

  // Absolute row sums of d mu_j / d rho_k.
  std::vector<double> row(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r = rho[j];
    double s = hartree_row;
    if (p_.terms.tf) s += u.hbar * u.hbar * std::pow(kThreePiSq, 2.0 / 3.0) / (3.0 * u.m) / std::cbrt(r);
    if (p_.terms.dirac) {
      const double c = std::cbrt(r);
      s += u.e2 * std::cbrt(kThreePiSq) / (3.0 * std::numbers::pi) / (c * c);
    }
    if (p_.entropy_active()) s += std::abs(entropy_potential_slope(r, p_));
    if (p_.terms.weizsacker) {
      const auto [l, rr] = neighbours(g, j);
      s += cw * (4.0 / r + (rho[l] + rho[rr]) / (r * r) + 1.0 / rho[l] + 1.0 / rho[rr]);
    }
    row[j] = s;
  }

  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [l, r] = neighbours(g, i);
    double s = 0.0;
    for (std::size_t k : {l, r}) {
      const double rho_e = 0.5 * (rho[i] + rho[k]);
      s += rho_e * (row[i] + row[k]) + std::abs(mu[k] - mu[i]);
    }
    bound = std::max(bound, s / (p_.b * h * h));
  }
  return bound;
}

}  // namespace dtdft
