#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "doctest.h"
#include "dtdft/config.hpp"
#include "dtdft/error.hpp"
#include "dtdft/io.hpp"
#include "helpers.hpp"
#include "tmpdir.hpp"

using namespace dtdft;
using nlohmann::json;

namespace {

json minimal() {
  return json::parse(R"({"grid": {"n": 64, "length": 8.0}, "schedule": {"t_end": 0.1}})");
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("minimal config materializes every default") {
    const auto c = parse_config(minimal());
    CHECK(c.engine == Engine::diffusion);
    CHECK(c.boundary == Boundary::periodic);
    CHECK(c.model == ModelParams{});
    CHECK(c.schedule.control == StepControl{});
    const auto j = to_json(c);
    for (const char* key : {"engine", "grid", "units", "model", "initial", "potential", "schedule", "dks", "outputs", "seed"})
      CHECK(j.contains(key));
    CHECK(j["model"]["terms"]["tf"] == true);
    CHECK(j["schedule"]["safety"] == 0.9);
  }

  TEST_CASE("serialization round trip is idempotent") {
    json j = minimal();
    j["engine"] = "dks";
    j["model"] = {{"T", 0.25}, {"b", 3.0}, {"statistics", "boltzmann"}, {"terms", {{"tf", false}}}};
    j["potential"] = {{"kind", "harmonic"}, {"omega", 0.7}};
    j["initial"] = {{"profile", "gaussian"}, {"sigma2", 0.3}, {"center", 2.0}};
    j["dks"] = {{"thermal_form", "log_density"}, {"compare_diffusion", true}};
    j["schedule"]["scale_with_friction"] = true;
    const auto once = parse_config(j);
    const auto twice = parse_config(to_json(once));
    CHECK(once == twice);
    CHECK(canonical(once) == canonical(twice));
    CHECK(config_hash(once) == config_hash(twice));
    CHECK(config_hash(once).size() == 16);
    CHECK(parse_config(canonical(once)) == once);
  }

  TEST_CASE("random configs round trip") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.01, 5.0);
    for (int k = 0; k < 50; ++k) {
      json j = minimal();
      j["model"] = {{"T", u(rng)}, {"b", u(rng)}, {"rho_bar", u(rng)}, {"coulomb_softening", u(rng)}};
      j["units"] = {{"hbar", u(rng)}, {"e2", 0.0}};
      j["schedule"]["cadence"] = u(rng);
      j["initial"] = {{"profile", "uniform"}, {"value", 0.001}};
      const auto c = parse_config(j);
      CHECK(parse_config(to_json(c)) == c);
      CHECK(canonical(parse_config(canonical(c))) == canonical(c));
    }
  }

  TEST_CASE("schema is strict") {
    json j = minimal();
    j["model"] = {{"temperature", 1.0}};
    try {
      parse_config(j);
      FAIL("unknown key accepted");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("model.temperature") != std::string::npos);
    }
    j = minimal();
    j["extra"] = 1;
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j = minimal();
    j["schedule"].erase("t_end");
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("schedule.t_end"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::string("{not json")), ConfigError);
  }

  TEST_CASE("constraint violations name the key") {
    json j = minimal();
    j["model"] = {{"rho_bar", 0.0}};
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("model.rho_bar"), ConfigError);
    j["model"] = {{"rho_bar", -1.0}};
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("model.rho_bar"), ConfigError);
    j = minimal();
    j["grid"]["n"] = 4;
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("grid.n"), ConfigError);
    j = minimal();
    j["model"] = {{"b", 0.0}};
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("model.b"), ConfigError);
    j["engine"] = "dks";
    CHECK_NOTHROW(parse_config(j));
    j = minimal();
    j["potential"] = {{"kind", "custom"}, {"values", {1.0, 2.0}}};
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("potential.values"), ConfigError);
    j = minimal();
    j["model"] = {{"background_neutralization", false}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
  }

  TEST_CASE("dotted parameter override") {
    const auto c = parse_config(minimal());
    const auto d = with_parameter(c, "model.T", 0.5);
    CHECK(d.model.T == 0.5);
    CHECK(with_parameter(c, "grid.n", 128).n == 128);
    CHECK_THROWS_AS(with_parameter(c, "model.nope", 1.0), ConfigError);
    CHECK_THROWS_AS(with_parameter(c, "model.rho_bar", -2.0), ConfigError);
  }

  TEST_CASE("potential and initial density builders") {
    json j = minimal();
    j["potential"] = {{"kind", "harmonic"}, {"omega", 2.0}};
    j["initial"] = {{"profile", "gaussian"}, {"sigma2", 0.5}, {"mass", 2.0}};
    const auto c = parse_config(j);
    const auto U = build_potential(c);
    CHECK(U[32] == 0.0);
    CHECK(U[0] == doctest::Approx(0.5 * 4.0 * 16.0));
    const auto rho = build_initial_density(c);
    CHECK(rho.mass() == doctest::Approx(2.0).epsilon(1e-6));
  }

  TEST_CASE("snapshot round trip") {
    const testing::TempDir tmp("snap");
    Snapshot s;
    s.engine = Engine::dks;
    s.config_hash = "0123456789abcdef";
    s.config = canonical(parse_config(minimal()));
    s.t = 0.125;
    s.dt = 1.0 / 3.0;
    s.steps = 17;
    s.n = 16;
    s.length = 2.0;
    s.boundary = Boundary::no_flux;
    Orbital o;
    for (int i = 0; i < 16; ++i) o.phi.emplace_back(std::sin(i * 0.1), std::cos(i * 0.37) / 3.0);
    o.occupation = 0.5;
    s.orbitals = {o, o};
    s.companion = CompanionState{std::vector<double>(16, 0.2), 1e-3, 4, 9, 1};
    const auto path = (tmp.path / "s.txt").string();
    write_snapshot(path, s);
    const auto r = read_snapshot(path);
    CHECK(r.engine == Engine::dks);
    CHECK(r.config == s.config);
    CHECK(r.config_hash == s.config_hash);
    CHECK(r.t == s.t);
    CHECK(r.dt == s.dt);
    CHECK(r.steps == 17);
    CHECK(r.grid() == s.grid());
    REQUIRE(r.orbitals.size() == 2);
    CHECK(r.orbitals[1].phi == o.phi);
    CHECK(r.orbitals[1].occupation == 0.5);
    REQUIRE(r.companion);
    CHECK(r.companion->rho == s.companion->rho);
    CHECK(r.companion->accept_streak == 4);

    std::ofstream(tmp.path / "bad.txt") << "# schema: 99\n";
    CHECK_THROWS_AS(read_snapshot((tmp.path / "bad.txt").string()), ConfigError);
    CHECK_THROWS_AS(read_snapshot((tmp.path / "missing.txt").string()), ConfigError);
  }

  TEST_CASE("series files") {
    const testing::TempDir tmp("series");
    const auto cols = series_columns(Engine::diffusion, 0, false);
    CHECK(cols == std::vector<std::string>{"t", "mass", "F_total", "F_tf", "F_w", "F_h", "F_d", "F_u", "minus_TS", "S",
                                           "sigma2", "mu_spread", "dt"});
    CHECK(series_columns(Engine::dks, 2, true).size() == cols.size() + 4);
    Observation o;
    o.t = 0.1;
    o.mass = 1.0 / 3.0;
    o.energy.e_w = 2.0;
    o.energy.sum();
    {
      SeriesWriter w((tmp.path / "s.csv").string(), cols);
      w.write(series_row(o));
      CHECK_THROWS(w.write({1.0}));
    }
    std::vector<std::string> header;
    const auto rows = read_series((tmp.path / "s.csv").string(), &header);
    CHECK(header == cols);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][1] == 1.0 / 3.0);
    CHECK(rows[0][2] == 2.0);
    CHECK(format_double(0.1) == "0.10000000000000001");
  }
}
