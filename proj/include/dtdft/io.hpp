#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "dtdft/config.hpp"

namespace dtdft {

inline constexpr int kSnapshotSchema = 1;

ScalarField build_potential(const RunConfig& c);
/// Gaussian, uniform or snapshot density, clamped into the band.
DensityField build_initial_density(const RunConfig& c);

/// Diffusion-engine state carried alongside a DKS run for comparison.
struct CompanionState {
  std::vector<double> rho;
  double dt = 0.0;
  int accept_streak = 0;
  std::size_t steps = 0;
  std::size_t rejections = 0;
};

/// Self-describing restart file: a "# key: value" header followed by one
/// row per grid point.
struct Snapshot {
  int schema = kSnapshotSchema;
  Engine engine = Engine::diffusion;
  std::string config_hash;
  std::string config;  ///< canonical config text
  double t = 0.0;
  double dt = 0.0;
  double last_dt = 0.0;  ///< last accepted step, reported in the series
  int accept_streak = 0;
  std::size_t steps = 0;
  std::size_t rejections = 0;
  std::size_t n = 0;
  double length = 0.0;
  Boundary boundary = Boundary::periodic;
  std::vector<double> rho;        ///< diffusion engine
  std::vector<Orbital> orbitals;  ///< dks engine
  std::optional<CompanionState> companion;

  Grid grid() const { return Grid(n, length, boundary); }
};

void write_snapshot(const std::string& path, const Snapshot& s);
/// Throws ConfigError on a malformed or unreadable file.
Snapshot read_snapshot(const std::string& path);

std::string format_double(double v);

/// CSV time series, floats at 17 significant digits.
class SeriesWriter {
 public:
  SeriesWriter(const std::string& path, std::vector<std::string> columns);
  ~SeriesWriter();
  SeriesWriter(const SeriesWriter&) = delete;
  SeriesWriter& operator=(const SeriesWriter&) = delete;

  const std::vector<std::string>& columns() const { return columns_; }
  void write(const std::vector<double>& row);

 private:
  std::FILE* f_ = nullptr;
  std::vector<std::string> columns_;
};

std::vector<std::string> series_columns(Engine e, std::size_t orbitals, bool compare_diffusion);
std::vector<double> series_row(const Observation& o, std::optional<double> l1_vs_diffusion = std::nullopt);

/// Rows of a series file, header excluded.
std::vector<std::vector<double>> read_series(const std::string& path, std::vector<std::string>* header = nullptr);

}  // namespace dtdft
