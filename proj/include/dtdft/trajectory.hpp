#pragma once

#include <functional>
#include <vector>

#include "dtdft/functionals.hpp"

namespace dtdft {

struct Observation {
  double t = 0.0;
  double mass = 0.0;
  EnergyBreakdown energy;
  double S = 0.0;
  double sigma2 = 0.0;
  double mu_spread = 0.0;
  double dt_used = 0.0;
  std::vector<double> norms;  ///< per-orbital norms (orbital engine only)
};

struct FieldSnapshot {
  double t = 0.0;
  std::vector<double> rho;
};

struct Trajectory {
  std::vector<Observation> observations;
  std::vector<FieldSnapshot> snapshots;  ///< filled when field recording is requested
};

/// Consumer for observations as they are produced.
using Observer = std::function<void(const Observation&)>;

/// Observation times k * cadence strictly after t (k integer), so that runs
/// restarted mid-way land on the same grid of times.
double next_cadence_time(double t, double cadence);

}  // namespace dtdft
