#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "dtdft/functionals.hpp"
#include "dtdft/trajectory.hpp"

namespace dtdft {

/// Adaptive forward-Euler controller for the density flow.
struct StepControl {
  double dt_min = 1e-14;
  double dt_max = 0.0;  ///< extra cap; 0 means the Jacobian stability bound alone
  double safety = 0.9;  ///< fraction of the forward-Euler limit 2 / ||J||
  double growth = 1.2;
  int growth_after = 10;             ///< consecutive accepts before growing dt
  double energy_tolerance = 1e-12;   ///< allowed relative free-energy increase per step
  std::size_t max_steps = 200'000'000;

  bool operator==(const StepControl&) const = default;
};

struct DiffusionState {
  DensityField rho;
  double t = 0.0;
  ModelParams params;
  ScalarField U;
  double dt = 0.0;  ///< controller step; 0 bootstraps to 0.1 of the stability bound
  int accept_streak = 0;
  std::size_t steps = 0;
  std::size_t rejections = 0;
  double last_dt = 0.0;

  /// Free energy and chemical potential at rho; filled lazily by the solver.
  struct Cache {
    EnergyBreakdown energy;
    double entropy = 0.0;
    std::vector<double> mu;
  };
  std::optional<Cache> cache;
};

struct SteadyStateOptions {
  double tol = 1e-8;
  double t_char = 1.0;
  std::size_t max_steps = 50'000'000;
  std::size_t check_every = 200;
};

struct SteadyStateReport {
  bool converged = false;
  double rhs_residual = 0.0;  ///< max |d rho / dt|
  double mu_spread = 0.0;     ///< max mu - min mu
  double mean_mu = 0.0;       ///< density-weighted mean chemical potential
  std::size_t steps = 0;
};

/// Integrates d rho/dt = div(rho grad mu / b) with mu the exact discrete
/// derivative of the implemented free energy, so every accepted step can be
/// checked for mass conservation and free-energy decrease.
class DiffusionSolver {
 public:
  DiffusionSolver(ModelParams p, ScalarField U, StepControl control = {});

  const FreeEnergyModel& model() const { return model_; }
  const StepControl& control() const { return control_; }

  DiffusionState make_state(DensityField rho, double t = 0.0) const;

  std::vector<double> rhs(std::span<const double> rho, std::span<const double> mu) const;
  double stable_dt(std::span<const double> rho, std::span<const double> mu) const;

  /// Takes one accepted step, never past t_target. Throws NumericalAbort on
  /// step-size underflow; the state is left at the last accepted density.
  void step(DiffusionState& s, double t_target = std::numeric_limits<double>::infinity()) const;
  /// Steps until s.t == t_target.
  void advance_to(DiffusionState& s, double t_target) const;

  Observation observe(DiffusionState& s) const;
  /// Observations at t0 and every multiple of `cadence` up to t_end (inclusive).
  Trajectory evolve(DiffusionState& s, double t_end, double cadence, const Observer& observer = {},
                    bool record_fields = false) const;
  /// Throws NumericalAbort when the step budget runs out.
  SteadyStateReport steady_state(DiffusionState& s, const SteadyStateOptions& opt = {}) const;

  const DiffusionState::Cache& ensure_cache(DiffusionState& s) const;

 private:
  bool admissible(std::span<const double> rho) const;

  FreeEnergyModel model_;
  StepControl control_;
};

/// Finite-volume form of div(rho grad mu / b).
ScalarField rhs_mu_form(const DensityField& rho, const ScalarField& U, const ModelParams& p);
/// div(rho grad U_eff / b) + lap(D rho), built from the effective potential
/// and effective diffusion tensor.
ScalarField rhs_effective_form(const DensityField& rho, const ScalarField& U, const ModelParams& p);

DiffusionState step(const DiffusionState& s);
Trajectory evolve(DiffusionState& s, double t_end, double cadence);
SteadyStateReport steady_state(DiffusionState& s, double tol);

}  // namespace dtdft
