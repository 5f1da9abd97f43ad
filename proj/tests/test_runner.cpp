#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dtdft/config.hpp"
#include "dtdft/error.hpp"
#include "dtdft/io.hpp"
#include "dtdft/runner.hpp"
#include "tmpdir.hpp"

using namespace dtdft;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig diffusion_config(double t_end = 0.02) {
  return parse_config(json{
      {"grid", {{"n", 64}, {"length", 10.0}, {"boundary", "no_flux"}}},
      {"model", {{"T", 0.5}, {"b", 1.0}, {"rho_bar", 2.0}, {"coulomb_softening", 0.4}}},
      {"initial", {{"profile", "gaussian"}, {"sigma2", 1.0}, {"mass", 1.5}}},
      {"potential", {{"kind", "harmonic"}, {"omega", 0.5}}},
      {"schedule", {{"t_end", t_end}, {"cadence", 0.005}}},
      {"outputs", {{"snapshot_every", 0.01}}},
  });
}

RunConfig dks_config(double t_end = 0.2) {
  return parse_config(json{
      {"engine", "dks"},
      {"grid", {{"n", 64}, {"length", 16.0}}},
      {"units", {{"e2", 0.0}}},
      {"model", {{"T", 0.1}, {"b", 2.0}, {"statistics", "boltzmann"}, {"terms", {{"tf", false}}}}},
      {"initial", {{"profile", "gaussian"}, {"sigma2", 1.0}, {"center", 7.0}}},
      {"potential", {{"kind", "harmonic"}, {"omega", 1.0}}},
      {"schedule", {{"t_end", t_end}, {"cadence", 0.05}}},
      {"dks", {{"compare_diffusion", true}}},
      {"outputs", {{"snapshot_every", 0.1}}},
  });
}

RunOptions in(const fs::path& p) {
  RunOptions o;
  o.out_dir = p.string();
  return o;
}

void check_rows_match(const std::vector<std::vector<double>>& full, const std::vector<std::vector<double>>& resumed) {
  REQUIRE(!resumed.empty());
  std::size_t k = 0;
  while (k < full.size() && full[k][0] < resumed[0][0]) ++k;
  REQUIRE(full.size() - k == resumed.size());
  for (std::size_t r = 0; r < resumed.size(); ++r)
    for (std::size_t c = 0; c < resumed[r].size(); ++c) {
      const double a = full[k + r][c], b = resumed[r][c];
      CHECK(std::abs(a - b) <= 1e-12 * std::max(std::abs(a), 1e-300));
    }
}

}  // namespace

TEST_SUITE("runner") {
  TEST_CASE("run writes config, series and snapshots") {
    const testing::TempDir tmp("run");
    const auto r = run(diffusion_config(), in(tmp.path));
    CHECK(r.exit_code == exit_ok);
    CHECK(fs::exists(tmp.path / "config.json"));
    CHECK(fs::exists(tmp.path / "final.txt"));
    CHECK(fs::exists(tmp.path / "snapshot_000001.txt"));
    CHECK(fs::exists(tmp.path / "snapshot_000002.txt"));
    CHECK_FALSE(fs::exists(tmp.path / "failure.json"));
    const auto rows = read_series((tmp.path / "series.csv").string());
    REQUIRE(rows.size() == 5);
    CHECK(rows.back()[0] == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(parse_config(json::parse(slurp(tmp.path / "config.json"))) == diffusion_config());
  }

  TEST_CASE("zero-length schedule writes the initial observation only") {
    const testing::TempDir tmp("zero");
    const auto r = run(diffusion_config(0.0), in(tmp.path));
    CHECK(r.exit_code == exit_ok);
    const auto rows = read_series((tmp.path / "series.csv").string());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0] == 0.0);
  }

  TEST_CASE("identical runs give byte-identical series") {
    const testing::TempDir a("det_a"), b("det_b");
    auto o = in(a.path);
    o.seed = 42;
    run(diffusion_config(), o);
    o.out_dir = b.path.string();
    run(diffusion_config(), o);
    CHECK(slurp(a.path / "series.csv") == slurp(b.path / "series.csv"));
    CHECK(slurp(a.path / "final.txt") == slurp(b.path / "final.txt"));
    const testing::TempDir c("det_c"), d("det_d");
    run(dks_config(), in(c.path));
    run(dks_config(), in(d.path));
    CHECK(slurp(c.path / "series.csv") == slurp(d.path / "series.csv"));
  }

  TEST_CASE("restore-then-continue matches the uninterrupted run") {
    {
      const testing::TempDir full("ck_full"), part("ck_part");
      run(diffusion_config(), in(full.path));
      const auto r = resume((full.path / "snapshot_000001.txt").string(), in(part.path));
      CHECK(r.exit_code == exit_ok);
      check_rows_match(read_series((full.path / "series.csv").string()),
                       read_series((part.path / "series.csv").string()));
      CHECK(slurp(full.path / "final.txt") == slurp(part.path / "final.txt"));
    }
    {
      const testing::TempDir full("ckd_full"), part("ckd_part");
      run(dks_config(), in(full.path));
      const auto r = resume((full.path / "snapshot_000001.txt").string(), in(part.path));
      CHECK(r.exit_code == exit_ok);
      check_rows_match(read_series((full.path / "series.csv").string()),
                       read_series((part.path / "series.csv").string()));
    }
  }

  TEST_CASE("tampered snapshot config is rejected unless overridden") {
    const testing::TempDir tmp("hash");
    run(diffusion_config(), in(tmp.path));
    auto snap = read_snapshot((tmp.path / "snapshot_000001.txt").string());
    snap.config_hash = "ffffffffffffffff";
    const auto path = (tmp.path / "tampered.txt").string();
    write_snapshot(path, snap);
    const testing::TempDir out("hash_out");
    CHECK_THROWS_AS(resume(path, in(out.path)), ConfigError);
    auto o = in(out.path);
    o.ignore_hash_mismatch = true;
    CHECK(resume(path, o).exit_code == exit_ok);
  }

  TEST_CASE("numerical abort leaves a failure record") {
    const testing::TempDir tmp("abort");
    auto c = diffusion_config(1.0);
    c.schedule.control.max_steps = 3;
    const auto r = run(c, in(tmp.path));
    CHECK(r.exit_code == exit_numerical);
    REQUIRE(fs::exists(tmp.path / "failure.json"));
    const auto j = json::parse(slurp(tmp.path / "failure.json"));
    CHECK(j["status"] == "numerical_abort");
    CHECK(j["config_hash"] == config_hash(c));
    CHECK(fs::exists(tmp.path / "final.txt"));
  }

  TEST_CASE("output directory falls back to the environment") {
    RunOptions o;
    ::setenv(kOutDirEnv, "/tmp/somewhere", 1);
    CHECK(resolve_out_dir(o) == "/tmp/somewhere");
    ::unsetenv(kOutDirEnv);
    CHECK(resolve_out_dir(o) == ".");
    o.out_dir = "x";
    CHECK(resolve_out_dir(o) == "x");
  }

  TEST_CASE("sweeps") {
    SUBCASE("empty value list") {
      const testing::TempDir tmp("sweep_empty");
      CHECK(sweep(diffusion_config(), "model.T", {}, in(tmp.path)).empty());
      CHECK(fs::exists(tmp.path / "sweep_summary.csv"));
    }
    SUBCASE("temperature including zero") {
      const testing::TempDir tmp("sweep_t");
      const auto out = sweep(diffusion_config(0.01), "model.T", {0.0, 0.5}, in(tmp.path));
      REQUIRE(out.size() == 2);
      for (const auto& e : out) {
        CHECK(e.result.exit_code == exit_ok);
        REQUIRE(e.result.last);
        CHECK(std::isfinite(e.result.last->energy.total));
      }
      CHECK(out[0].result.last->energy.minus_TS == 0.0);
      CHECK(fs::exists(tmp.path / "sweep_1" / "series.csv"));
    }
    SUBCASE("bad values are recorded and the sweep continues") {
      const testing::TempDir tmp("sweep_bad");
      const auto out = sweep(diffusion_config(0.01), "model.rho_bar", {-1.0, 2.0}, in(tmp.path));
      REQUIRE(out.size() == 2);
      CHECK(out[0].result.exit_code == exit_config);
      CHECK(out[1].result.exit_code == exit_ok);
    }
  }
}
