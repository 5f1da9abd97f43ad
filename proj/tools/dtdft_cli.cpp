// Command-line front end: run, resume, sweep and verify.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dtdft/error.hpp"
#include "dtdft/runner.hpp"
#include "dtdft/verify.hpp"

namespace {

using namespace dtdft;

struct Common {
  std::string out_dir;
  bool quiet = false;
  double snapshot_every = -1.0;
  long long seed = -1;

  RunOptions options() const {
    RunOptions o;
    if (!out_dir.empty()) o.out_dir = out_dir;
    o.quiet = quiet;
    if (snapshot_every >= 0.0) o.snapshot_every = snapshot_every;
    if (seed >= 0) o.seed = static_cast<std::uint64_t>(seed);
    return o;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--out-dir", c.out_dir, std::string("Output directory (default: $") + kOutDirEnv + " or .)");
  cmd->add_flag("--quiet", c.quiet, "Suppress progress output");
  cmd->add_option("--snapshot-every", c.snapshot_every, "Snapshot cadence in simulation time")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", c.seed, "Seed override")->check(CLI::NonNegativeNumber);
}

// Values are read as JSON where possible so "10", "true" and "\"x\"" keep their types.
std::vector<nlohmann::json> parse_values(const std::string& list) {
  std::vector<nlohmann::json> out;
  if (const auto first = list.find_first_not_of(" \t"); first != std::string::npos && list[first] == '[') {
    const auto arr = nlohmann::json::parse(list, nullptr, false);
    if (!arr.is_array()) throw ConfigError("--values: malformed JSON array");
    return arr.get<std::vector<nlohmann::json>>();
  }
  std::string item;
  std::stringstream ss(list);
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(item));
    } catch (const nlohmann::json::parse_error&) {
      out.emplace_back(item);
    }
  }
  return out;
}

int report(const RunResult& r, bool quiet) {
  if (r.exit_code != exit_ok) {
    std::fprintf(stderr, "error: %s\n", r.message.c_str());
  } else if (!quiet && r.last) {
    std::printf("finished at t=%.17g, F=%.17g, outputs in %s\n", r.last->t, r.last->energy.total, r.out_dir.c_str());
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dissipative density-functional dynamics"};
  app.require_subcommand(1);

  Common run_opts, resume_opts, sweep_opts, verify_opts;
  std::string config_path, snapshot_path, sweep_config, param, values;
  bool ignore_hash = false, serial = false;

  auto* run_cmd = app.add_subcommand("run", "Run a simulation from a JSON config");
  run_cmd->add_option("config", config_path, "Config file")->required();
  add_common(run_cmd, run_opts);

  auto* resume_cmd = app.add_subcommand("resume", "Continue a run from a snapshot");
  resume_cmd->add_option("snapshot", snapshot_path, "Snapshot file")->required();
  resume_cmd->add_flag("--ignore-hash", ignore_hash, "Accept a config hash mismatch");
  add_common(resume_cmd, resume_opts);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run one simulation per parameter value");
  sweep_cmd->add_option("config", sweep_config, "Config file")->required();
  sweep_cmd->add_option("--param", param, "Dotted parameter path, e.g. model.b")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values or a JSON array")->required();
  add_common(sweep_cmd, sweep_opts);

  auto* verify_cmd = app.add_subcommand("verify", "Run the acceptance scenarios");
  verify_cmd->add_flag("--serial", serial, "Run scenarios one after another");
  add_common(verify_cmd, verify_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  try {
    if (*run_cmd) return report(run(load_config(config_path), run_opts.options()), run_opts.quiet);

    if (*resume_cmd) {
      auto o = resume_opts.options();
      o.ignore_hash_mismatch = ignore_hash;
      return report(resume(snapshot_path, o), resume_opts.quiet);
    }

    if (*sweep_cmd) {
      const auto o = sweep_opts.options();
      const auto entries = sweep(load_config(sweep_config), param, parse_values(values), o);
      int rc = exit_ok;
      if (!sweep_opts.quiet) std::printf("%-6s %-16s %-5s %-24s %s\n", "index", "value", "exit", "l1_vs_diffusion", "sigma2");
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& r = entries[i].result;
        if (r.exit_code != exit_ok) rc = exit_numerical;
        if (!sweep_opts.quiet)
          std::printf("%-6zu %-16s %-5d %-24s %s\n", i, entries[i].value.dump().c_str(), r.exit_code,
                      r.l1_vs_diffusion ? format_double(*r.l1_vs_diffusion).c_str() : "-",
                      r.last ? format_double(r.last->sigma2).c_str() : r.message.c_str());
      }
      return rc;
    }

    if (*verify_cmd) {
      const auto rep = verify::run_all(!serial);
      for (const auto& c : rep.criteria) std::printf("%s\n", verify::format_line(c).c_str());
      const std::string dir = resolve_out_dir(verify_opts.options());
      std::filesystem::create_directories(dir);
      std::ofstream(dir + "/verify.json") << verify::to_json(rep).dump(2) << "\n";
      if (!verify_opts.quiet)
        std::printf("%s; report written to %s/verify.json\n", rep.all_passed() ? "all criteria passed" : "FAILED",
                    dir.c_str());
      return rep.all_passed() ? exit_ok : exit_verification;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  } catch (const NumericalAbort& e) {
    std::fprintf(stderr, "numerical abort at t=%.17g: %s\n", e.time(), e.what());
    return exit_numerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return exit_config;
  }
  return exit_ok;
}
