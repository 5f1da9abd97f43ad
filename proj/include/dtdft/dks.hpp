#pragma once

// Dissipative Kohn-Sham propagation: orbitals evolve under the kinetic
// operator, the effective potential, a thermal term and the Kostin friction
// potential built from each orbital's phase.

#include <complex>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "dtdft/fft.hpp"
#include "dtdft/functionals.hpp"
#include "dtdft/trajectory.hpp"

namespace dtdft {

using Complex = std::complex<double>;

struct Orbital {
  std::vector<Complex> phi;
  double occupation = 1.0;
};

struct OrbitalSet {
  Grid grid;
  std::vector<Orbital> orbitals;

  /// Throws std::invalid_argument on an empty set, size mismatch, non-positive
  /// occupation or a non-finite / zero norm.
  void validate() const;
};

/// Real orbital sqrt(rho).
Orbital orbital_from_density(const DensityField& rho);
double orbital_norm(const Grid& g, const Orbital& o);

/// Argument of the thermal term in the orbital equation.
enum class ThermalForm {
  chemical_potential,  ///< kT ln(rho / (rho_bar - rho)), or kT ln(rho / rho_bar) under Boltzmann statistics
  log_density,         ///< kT ln(rho)
};

std::string_view to_string(ThermalForm f);
ThermalForm thermal_form_from_string(std::string_view s);

struct DksOptions {
  ThermalForm thermal = ThermalForm::chemical_potential;
  double node_threshold = 1e-10;  ///< relative to max rho
  double dt = 0.0;                ///< 0 selects the kinetic stability bound
  double norm_tolerance = 1e-8;   ///< relative norm drift allowed per step
  double dt_min = 1e-14;
  std::size_t max_steps = 200'000'000;

  bool operator==(const DksOptions&) const = default;
};

/// Kinetic phase advance at the Nyquist mode stays below pi/4: dt <= m h^2 / (2 pi hbar).
double dks_stable_dt(const Grid& g, const UnitSystem& u);

/// Total density sum_k occupation_k |phi_k|^2 (not floored).
std::vector<double> density_values(const OrbitalSet& os);
DensityField density_from_orbitals(const OrbitalSet& os, const ModelParams& p);

struct PhaseField {
  ScalarField theta;               ///< unwrapped, gauge fixed
  std::vector<std::size_t> flags;  ///< above-threshold edges whose phase step is ambiguous
};

/// Unwraps arg(phi) outwards from the density maximum and subtracts the
/// density-weighted mean. `rho_threshold` is absolute.
PhaseField phase_field(const Grid& g, const Orbital& o, double rho_threshold);

/// hbar (b/m) theta with theta extended constantly into nodes (rho below the
/// threshold).
ScalarField kostin_potential(const Grid& g, const Orbital& o, const ModelParams& p, double rho_threshold);

struct DksState {
  OrbitalSet orbitals;
  double t = 0.0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t rejections = 0;
  double last_dt = 0.0;
};

struct MadelungFields {
  DensityField rho;
  VectorField V;
  ScalarField theta;
  ScalarField continuity_residual;  ///< d rho/dt + div(rho V)
  ScalarField force_residual;       ///< m dV/dt + m V dV/dx + b V + d/dx(Q + U_eff + thermal)
  ScalarField inertial;             ///< |m dV/dt + m V dV/dx|
  ScalarField friction;             ///< |b V|
};

class DksSolver {
 public:
  DksSolver(ModelParams p, ScalarField U, DksOptions opt = {});

  const ModelParams& params() const { return p_; }
  const DksOptions& options() const { return opt_; }
  const ScalarField& external() const { return model_.external(); }
  const Grid& grid() const { return model_.grid(); }

  DksState make_state(OrbitalSet os, double t = 0.0) const;

  /// U_eff[rho] plus the thermal term.
  std::vector<double> local_potential(std::span<const double> rho) const;
  /// Kinetic energy plus the density functional terms; TF and Weizsacker are
  /// never included since the orbitals carry the kinetic energy exactly.
  EnergyBreakdown energy(const OrbitalSet& os) const;

  /// One Strang step of length min(s.dt, t_target - s.t); on excessive norm
  /// drift the step is retried at half size.
  void step(DksState& s, double t_target = std::numeric_limits<double>::infinity()) const;
  void advance_to(DksState& s, double t_target) const;
  Observation observe(const DksState& s) const;
  Trajectory evolve(DksState& s, double t_end, double cadence, const Observer& observer = {},
                    bool record_fields = false) const;

  /// Madelung decomposition of the middle of three consecutive single-orbital
  /// states separated by dt.
  MadelungFields madelung_split(const Orbital& prev, const Orbital& curr, const Orbital& next, double dt) const;

 private:
  void kinetic(std::vector<Complex>& phi, double tau) const;
  void potential(Orbital& o, std::span<const double> W, double tau) const;
  void half_potential(OrbitalSet& os, double tau) const;

  ModelParams p_;
  DksOptions opt_;
  FreeEnergyModel model_;  ///< TF and Weizsacker switched off
  std::shared_ptr<const ComplexDft> dft_;
  std::vector<double> k2_;  ///< squared wavenumbers (periodic grids)
};

OrbitalSet dks_step(const OrbitalSet& os, const ScalarField& U, double dt, const ModelParams& p,
                    const DksOptions& opt = {});
Trajectory dks_evolve(DksState& s, const ScalarField& U, double t_end, double cadence, const ModelParams& p,
                      const DksOptions& opt = {});

}  // namespace dtdft
