#pragma once

// Desk-scale acceptance scenarios. Each returns measured values against the
// pinned tolerances; `run_all` executes them concurrently.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dtdft/functionals.hpp"
#include "json.hpp"

namespace dtdft::verify {

struct Criterion {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string measured;
  std::string expected;
  double seconds = 0.0;
  std::string config_hash;  ///< hash of the scenario parameters
};

struct Report {
  std::vector<Criterion> criteria;
  nlohmann::json environment;
  bool all_passed() const;
};

/// Chemical potential under test for the functional-derivative criterion.
using MuProvider = std::function<std::vector<double>(const FreeEnergyModel&, std::span<const double>)>;

Criterion dispersion_law();
Criterion zero_temperature_law();
Criterion classical_limit();
Criterion harmonic_stationarity();
Criterion functional_derivative(const MuProvider& mu = {});
Criterion form_equivalence();
Criterion conservation();
Criterion hartree_oracle();
Criterion dks_unitarity();
Criterion strong_friction();
Criterion identities();

std::vector<std::function<Criterion()>> all();
Report run_all(bool concurrent = true);

std::string format_line(const Criterion& c);
nlohmann::json environment();
nlohmann::json to_json(const Report& r);

}  // namespace dtdft::verify
