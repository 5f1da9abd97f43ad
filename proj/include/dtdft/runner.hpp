#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtdft/config.hpp"
#include "dtdft/io.hpp"

namespace dtdft {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_verification = 4 };

/// Overrides the default output directory (the working directory).
inline constexpr const char* kOutDirEnv = "DTDFT_OUT_DIR";

struct RunOptions {
  std::optional<std::string> out_dir;  ///< unset: $DTDFT_OUT_DIR, else "."
  bool quiet = true;
  std::optional<double> snapshot_every;
  std::optional<std::uint64_t> seed;
  bool ignore_hash_mismatch = false;  ///< resume only
};

std::string resolve_out_dir(const RunOptions& o);

struct RunResult {
  int exit_code = exit_ok;
  std::string message;
  std::string out_dir;
  std::optional<Observation> last;
  std::optional<double> l1_vs_diffusion;  ///< last value when the DKS comparison is on
};

/// Writes <out>/config.json, the series file, snapshots and <out>/final.txt.
/// On a numerical abort also <out>/failure.json; the final snapshot then holds
/// the last accepted state.
RunResult run(RunConfig c, const RunOptions& o);
/// Continues from a snapshot using its embedded config. The series restarts
/// at the snapshot time.
RunResult resume(const std::string& snapshot_path, const RunOptions& o);

struct SweepEntry {
  nlohmann::json value;
  RunResult result;
};

/// One run per value in <out>/sweep_<index>/, plus <out>/sweep_summary.csv.
std::vector<SweepEntry> sweep(const RunConfig& c, const std::string& parameter, const std::vector<nlohmann::json>& values,
                              const RunOptions& o);

}  // namespace dtdft
