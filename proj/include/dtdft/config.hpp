#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "dtdft/dks.hpp"
#include "dtdft/diffusion.hpp"

namespace dtdft {

enum class Engine { diffusion, dks };

std::string_view to_string(Engine e);

struct GaussianProfile {
  std::optional<double> center;  ///< unset: middle of the domain
  double sigma2 = 1.0;
  double mass = 1.0;
  bool operator==(const GaussianProfile&) const = default;
};
struct UniformProfile {
  double value = 0.5;
  bool operator==(const UniformProfile&) const = default;
};
struct SnapshotProfile {
  std::string path;
  bool operator==(const SnapshotProfile&) const = default;
};
using InitialProfile = std::variant<GaussianProfile, UniformProfile, SnapshotProfile>;

struct ZeroPotential {
  bool operator==(const ZeroPotential&) const = default;
};
struct HarmonicPotential {
  double omega = 1.0;
  std::optional<double> center;
  bool operator==(const HarmonicPotential&) const = default;
};
/// One value per grid point.
struct CustomPotential {
  std::vector<double> values;
  bool operator==(const CustomPotential&) const = default;
};
using PotentialSpec = std::variant<ZeroPotential, HarmonicPotential, CustomPotential>;

struct Schedule {
  double t_end = 0.0;
  double cadence = 0.0;  ///< 0: observe only at the start and end
  /// Multiply t_end, cadence and the output cadences by model.b / units.m.
  bool scale_with_friction = false;
  StepControl control;
  bool operator==(const Schedule&) const = default;
};

struct DksConfig {
  DksOptions options;
  /// Co-evolve the dilute diffusion counterpart and report the L1 distance.
  bool compare_diffusion = false;
  bool operator==(const DksConfig&) const = default;
};

struct Outputs {
  std::string series = "series.csv";
  double snapshot_every = 0.0;    ///< 0 disables intermediate snapshots
  double checkpoint_every = 0.0;  ///< 0 disables the rolling checkpoint
  bool operator==(const Outputs&) const = default;
};

struct RunConfig {
  Engine engine = Engine::diffusion;
  std::size_t n = 0;
  double length = 0.0;
  Boundary boundary = Boundary::periodic;
  ModelParams model;
  InitialProfile initial = GaussianProfile{};
  PotentialSpec potential = ZeroPotential{};
  Schedule schedule;
  DksConfig dks;
  Outputs outputs;
  std::uint64_t seed = 0;

  Grid grid() const { return Grid(n, length, boundary); }
  /// Times scale: model.b / units.m when schedule.scale_with_friction, else 1.
  double time_scale() const;
  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the offending key path.
RunConfig parse_config(const nlohmann::json& j);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every field, defaults included; keys sorted.
nlohmann::json to_json(const RunConfig& c);
/// Compact canonical text; stable under parse/serialize round trips.
std::string canonical(const RunConfig& c);
/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const RunConfig& c);
std::string fnv1a_hex(const std::string& text);

/// Replaces the value at a dotted path ("model.b") in the materialized config.
RunConfig with_parameter(const RunConfig& c, const std::string& path, const nlohmann::json& value);

}  // namespace dtdft
