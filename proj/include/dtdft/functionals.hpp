#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dtdft/grid.hpp"
#include "dtdft/hartree.hpp"

namespace dtdft {

enum class Statistics {
  fermi_dirac,  ///< lattice-gas entropy with saturation density rho_bar
  boltzmann,    ///< dilute limit rho << rho_bar of the same functional
};

std::string_view to_string(Statistics s);
Statistics statistics_from_string(std::string_view s);

/// Which free-energy contributions are switched on. The external potential
/// is always included.
struct Terms {
  bool tf = true;
  bool weizsacker = true;
  bool hartree = true;
  bool dirac = true;
  bool entropy = true;

  bool operator==(const Terms&) const = default;
};

struct ModelParams {
  UnitSystem units;
  double T = 0.0;        ///< temperature
  double b = 1.0;        ///< friction, mass / time
  double rho_bar = 1.0;  ///< saturation density
  Terms terms;
  Statistics statistics = Statistics::fermi_dirac;
  std::optional<double> coulomb_softening;  ///< unset: five grid spacings
  bool background_neutralization = true;

  double kT() const { return units.kB * T; }
  double density_floor() const { return 1e-12 * rho_bar; }
  /// The entropy term only contributes at T > 0.
  bool entropy_active() const { return terms.entropy && T > 0.0; }
  /// Densities must stay strictly below rho_bar.
  bool band_limited() const { return entropy_active() && statistics == Statistics::fermi_dirac; }
  bool hartree_active() const { return terms.hartree && units.e2 > 0.0; }
  double softening(const Grid& g) const;

  void validate() const;
  /// Also rejects periodic Coulomb runs without a neutralizing background.
  void validate_for(const Grid& g) const;

  /// Weizsacker + Boltzmann entropy only: the single-electron regime.
  static ModelParams dilute(double T, double b, const UnitSystem& u = {});

  bool operator==(const ModelParams&) const = default;
};

/// Electron density with rho >= floor (and rho <= rho_bar - floor when the
/// Fermi-Dirac entropy is active).
class DensityField {
 public:
  /// Clamps into the admissible band. Used when building initial conditions.
  static DensityField clamped(ScalarField f, const ModelParams& p);
  /// Throws BandViolation instead of clamping.
  static DensityField checked(ScalarField f, const ModelParams& p);
  /// Only positivity (and rho < rho_bar under the band limit) is required. Used
  /// by the time steppers, which may move a floor cell below the floor.
  static DensityField positive(ScalarField f, const ModelParams& p);

  const ScalarField& field() const { return f_; }
  const Grid& grid() const { return f_.grid; }
  std::span<const double> values() const { return f_.values; }
  std::size_t size() const { return f_.size(); }
  double operator[](std::size_t i) const { return f_[i]; }
  double mass() const { return integrate(f_); }

 private:
  explicit DensityField(ScalarField f) : f_(std::move(f)) {}
  ScalarField f_;
};

/// Throws BandViolation for the first entry outside [floor, rho_bar - floor].
void check_band(std::span<const double> rho, const ModelParams& p);

struct EnergyBreakdown {
  double e_kin = 0.0;  ///< orbital kinetic energy (dissipative Kohn-Sham engine only)
  double e_tf = 0.0;
  double e_w = 0.0;
  double e_h = 0.0;
  double e_d = 0.0;
  double e_u = 0.0;
  double minus_TS = 0.0;
  double total = 0.0;

  void sum() { total = e_kin + e_tf + e_w + e_h + e_d + e_u + minus_TS; }
};

/// Effective diffusion tensor; in 1D one scalar per grid point.
struct DiffusionTensorField {
  ScalarField diagonal;
};

double tf_energy(const DensityField& rho, const ModelParams& p);
/// Discrete Fisher form (hbar^2/8m) sum_edges (d rho)(d ln rho) / h, which
/// equals (hbar^2/8m) * fisher_entropy exactly.
double weizsacker_energy(const DensityField& rho, const ModelParams& p);
double dirac_energy(const DensityField& rho, const ModelParams& p);
double external_energy(const DensityField& rho, const ScalarField& U);
/// Lattice-gas entropy (Boltzmann statistics use the dilute expansion of the hole term).
double fd_entropy(const DensityField& rho, const ModelParams& p);
double fisher_entropy(const DensityField& rho);

/// Needs the Coulomb kernel only when the Hartree term is on; one is built
/// per call. Engines reuse a FreeEnergyModel instead.
EnergyBreakdown free_energy(const DensityField& rho, const ScalarField& U, const ModelParams& p);

/// -(hbar^2/2m) lap(sqrt rho) / sqrt rho.
ScalarField bohm_potential(const DensityField& rho, const ModelParams& p);
/// Exact discrete derivative of weizsacker_energy:
/// -(hbar^2/8m) [lap(ln rho) + lap(rho)/rho]. Agrees with bohm_potential to O(h^2).
ScalarField weizsacker_potential(const DensityField& rho, const ModelParams& p);
ScalarField chemical_potential(const DensityField& rho, const ScalarField& U, const ModelParams& p);
ScalarField effective_potential(const DensityField& rho, const ScalarField& U, const ModelParams& p);
DiffusionTensorField effective_diffusion(const DensityField& rho, const ModelParams& p);

/// Free energy and its derivatives for one grid, parameter set and external
/// potential. Holds the Coulomb kernel so repeated evaluation is cheap.
class FreeEnergyModel {
 public:
  FreeEnergyModel(ModelParams p, ScalarField U);

  struct Evaluation {
    EnergyBreakdown energy;
    double entropy = 0.0;
    std::vector<double> mu;
  };

  const Grid& grid() const { return U_.grid; }
  const ModelParams& params() const { return p_; }
  const ScalarField& external() const { return U_; }
  const CoulombKernel* kernel() const { return kernel_ ? &*kernel_ : nullptr; }

  /// Assumes rho is inside the band; callers check first.
  EnergyBreakdown energy(std::span<const double> rho) const;
  Evaluation evaluate(std::span<const double> rho) const;
  double entropy(std::span<const double> rho) const;
  std::vector<double> chemical_potential(std::span<const double> rho) const;
  std::vector<double> hartree_potential(std::span<const double> rho) const;
  std::vector<double> effective_potential(std::span<const double> rho) const;
  std::vector<double> effective_diffusion(std::span<const double> rho) const;
  std::vector<double> weizsacker_potential(std::span<const double> rho) const;

  /// Infinity-norm bound on the Jacobian of the mu-form right-hand side at
  /// rho; forward Euler is stable for dt < 2 / bound.
  double jacobian_bound(std::span<const double> rho, std::span<const double> mu) const;

 private:
  void add_local_terms(std::span<const double> rho, EnergyBreakdown& e) const;

  ModelParams p_;
  ScalarField U_;
  std::optional<CoulombKernel> kernel_;
};

}  // namespace dtdft
