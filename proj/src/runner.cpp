#include "dtdft/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <thread>

#include "dtdft/error.hpp"
#include "dtdft/oracles.hpp"

namespace dtdft {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Driver {
 public:
  virtual ~Driver() = default;
  virtual double t() const = 0;
  virtual Observation observe() = 0;
  virtual std::optional<double> l1_vs_diffusion() const { return std::nullopt; }
  virtual void advance_to(double t) = 0;
  virtual Snapshot snapshot() const = 0;
  virtual std::size_t orbitals() const { return 0; }
};

Snapshot snapshot_header(const RunConfig& c, Engine e) {
  Snapshot s;
  s.engine = e;
  s.config = canonical(c);
  s.config_hash = fnv1a_hex(s.config);
  s.n = c.n;
  s.length = c.length;
  s.boundary = c.boundary;
  return s;
}

class DiffusionDriver final : public Driver {
 public:
  DiffusionDriver(const RunConfig& c, DensityField rho, double t)
      : c_(c), solver_(c.model, build_potential(c), c.schedule.control), s_(solver_.make_state(std::move(rho), t)) {}

  DiffusionDriver(const RunConfig& c, const Snapshot& snap)
      : DiffusionDriver(c, DensityField::positive(ScalarField(c.grid(), snap.rho), c.model), snap.t) {
    s_.dt = snap.dt;
    s_.last_dt = snap.last_dt;
    s_.accept_streak = snap.accept_streak;
    s_.steps = snap.steps;
    s_.rejections = snap.rejections;
  }

  double t() const override { return s_.t; }
  Observation observe() override { return solver_.observe(s_); }
  void advance_to(double t) override { solver_.advance_to(s_, t); }
  Snapshot snapshot() const override {
    Snapshot snap = snapshot_header(c_, Engine::diffusion);
    snap.t = s_.t;
    snap.dt = s_.dt;
    snap.last_dt = s_.last_dt;
    snap.accept_streak = s_.accept_streak;
    snap.steps = s_.steps;
    snap.rejections = s_.rejections;
    snap.rho.assign(s_.rho.values().begin(), s_.rho.values().end());
    return snap;
  }

 private:
  RunConfig c_;
  DiffusionSolver solver_;
  DiffusionState s_;
};

// Diffusion parameters matching the single-orbital limit of the DKS run.
ModelParams companion_params(ModelParams p) {
  p.terms.tf = false;
  p.terms.weizsacker = true;
  return p;
}

class DksDriver final : public Driver {
 public:
  DksDriver(const RunConfig& c, OrbitalSet os, double t, const std::optional<CompanionState>& comp)
      : c_(c), solver_(c.model, build_potential(c), c.dks.options), s_(solver_.make_state(std::move(os), t)) {
    if (!c.dks.compare_diffusion) return;
    comp_solver_.emplace(companion_params(c.model), build_potential(c), c.schedule.control);
    const auto& p = comp_solver_->model().params();
    if (comp) {
      comp_.emplace(comp_solver_->make_state(DensityField::positive(ScalarField(c.grid(), comp->rho), p), t));
      comp_->dt = comp->dt;
      comp_->accept_streak = comp->accept_streak;
      comp_->steps = comp->steps;
      comp_->rejections = comp->rejections;
    } else {
      comp_.emplace(comp_solver_->make_state(DensityField::clamped(ScalarField(c.grid(), density_values(s_.orbitals)), p), t));
    }
  }

  void restore_controller(const Snapshot& snap) {
    s_.dt = snap.dt;
    s_.last_dt = snap.last_dt;
    s_.steps = snap.steps;
    s_.rejections = snap.rejections;
  }

  double t() const override { return s_.t; }
  std::size_t orbitals() const override { return s_.orbitals.orbitals.size(); }
  Observation observe() override { return solver_.observe(s_); }
  std::optional<double> l1_vs_diffusion() const override {
    if (!comp_) return std::nullopt;
    return oracles::l1_distance(c_.grid(), density_values(s_.orbitals), comp_->rho.values());
  }
  void advance_to(double t) override {
    solver_.advance_to(s_, t);
    if (comp_) comp_solver_->advance_to(*comp_, t);
  }
  Snapshot snapshot() const override {
    Snapshot snap = snapshot_header(c_, Engine::dks);
    snap.t = s_.t;
    snap.dt = s_.dt;
    snap.last_dt = s_.last_dt;
    snap.steps = s_.steps;
    snap.rejections = s_.rejections;
    snap.orbitals = s_.orbitals.orbitals;
    if (comp_) {
      CompanionState cs;
      cs.rho.assign(comp_->rho.values().begin(), comp_->rho.values().end());
      cs.dt = comp_->dt;
      cs.accept_streak = comp_->accept_streak;
      cs.steps = comp_->steps;
      cs.rejections = comp_->rejections;
      snap.companion = std::move(cs);
    }
    return snap;
  }

 private:
  RunConfig c_;
  DksSolver solver_;
  DksState s_;
  std::optional<DiffusionSolver> comp_solver_;
  std::optional<DiffusionState> comp_;
};

OrbitalSet initial_orbitals(const RunConfig& c) {
  if (const auto* sp = std::get_if<SnapshotProfile>(&c.initial)) {
    const Snapshot s = read_snapshot(sp->path);
    if (s.engine == Engine::dks) {
      if (!(s.grid() == c.grid())) throw ConfigError("initial.path: snapshot grid does not match grid");
      return OrbitalSet{c.grid(), s.orbitals};
    }
  }
  return OrbitalSet{c.grid(), {orbital_from_density(build_initial_density(c))}};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw ConfigError(p.string() + ": cannot write");
  out << text;
}

void write_failure(const fs::path& dir, const std::string& kind, const std::string& message, double t,
                   const RunConfig& c) {
  json j = {{"status", kind}, {"message", message}, {"t", t}, {"config_hash", config_hash(c)}};
  write_text(dir / "failure.json", j.dump(2) + "\n");
}

std::string snapshot_name(double t, double every) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "snapshot_%06lld.txt", static_cast<long long>(std::llround(t / every)));
  return buf;
}

void print_observation(const Observation& o) {
  std::printf("t=%-12.6g mass=%-14.10g F=%-16.10g sigma2=%-12.6g mu_spread=%-10.3g dt=%.3g\n", o.t, o.mass,
              o.energy.total, o.sigma2, o.mu_spread, o.dt_used);
}

RunResult drive(const RunConfig& c, Driver& d, const fs::path& dir, const RunOptions& o) {
  RunResult res;
  res.out_dir = dir.string();
  const double scale = c.time_scale();
  const double t_end = c.schedule.t_end * scale;
  const double cadence = c.schedule.cadence * scale;
  const double snap_every = o.snapshot_every.value_or(c.outputs.snapshot_every) * scale;
  const double ckpt_every = c.outputs.checkpoint_every * scale;
  constexpr double inf = std::numeric_limits<double>::infinity();

  SeriesWriter series((dir / c.outputs.series).string(),
                      series_columns(c.engine, d.orbitals(), c.engine == Engine::dks && c.dks.compare_diffusion));
  auto record = [&] {
    const Observation obs = d.observe();
    res.l1_vs_diffusion = d.l1_vs_diffusion();
    series.write(series_row(obs, res.l1_vs_diffusion));
    if (!o.quiet) print_observation(obs);
    res.last = obs;
  };

  try {
    record();
    while (d.t() < t_end) {
      const double t = d.t();
      const double next_obs = cadence > 0.0 ? next_cadence_time(t, cadence) : inf;
      const double next_snap = snap_every > 0.0 ? next_cadence_time(t, snap_every) : inf;
      const double next_ckpt = ckpt_every > 0.0 ? next_cadence_time(t, ckpt_every) : inf;
      const double target = std::min({next_obs, next_snap, next_ckpt, t_end});
      d.advance_to(target);
      if (target == next_obs || target == t_end) record();
      if (target == next_snap) write_snapshot((dir / snapshot_name(target, snap_every)).string(), d.snapshot());
      if (target == next_ckpt) write_snapshot((dir / "checkpoint.txt").string(), d.snapshot());
    }
  } catch (const NumericalAbort& e) {
    res.exit_code = exit_numerical;
    res.message = e.what();
    write_failure(dir, "numerical_abort", e.what(), d.t(), c);
  } catch (const BandViolation& e) {
    res.exit_code = exit_numerical;
    res.message = e.what();
    write_failure(dir, "band_violation", e.what(), d.t(), c);
  }
  write_snapshot((dir / "final.txt").string(), d.snapshot());
  if (!o.quiet && res.exit_code != exit_ok) std::fprintf(stderr, "aborted: %s\n", res.message.c_str());
  return res;
}

fs::path prepare_dir(const RunOptions& o) {
  fs::path dir = resolve_out_dir(o);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(dir.string() + ": cannot create output directory: " + ec.message());
  return dir;
}

}  // namespace

std::string resolve_out_dir(const RunOptions& o) {
  if (o.out_dir) return *o.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return ".";
}

RunResult run(RunConfig c, const RunOptions& o) {
  if (o.seed) c.seed = *o.seed;
  const fs::path dir = prepare_dir(o);
  write_text(dir / "config.json", to_json(c).dump(2) + "\n");
  std::unique_ptr<Driver> d;
  if (c.engine == Engine::diffusion)
    d = std::make_unique<DiffusionDriver>(c, build_initial_density(c), 0.0);
  else
    d = std::make_unique<DksDriver>(c, initial_orbitals(c), 0.0, std::nullopt);
  return drive(c, *d, dir, o);
}

RunResult resume(const std::string& snapshot_path, const RunOptions& o) {
  const Snapshot snap = read_snapshot(snapshot_path);
  RunConfig c = parse_config(snap.config);
  if (config_hash(c) != snap.config_hash && !o.ignore_hash_mismatch)
    throw ConfigError(snapshot_path + ": config hash mismatch (snapshot " + snap.config_hash + ", config " +
                      config_hash(c) + ")");
  if (!(snap.grid() == c.grid())) throw ConfigError(snapshot_path + ": grid metadata disagrees with the config");
  if (snap.engine != c.engine) throw ConfigError(snapshot_path + ": engine disagrees with the config");
  const fs::path dir = prepare_dir(o);
  std::unique_ptr<Driver> d;
  if (c.engine == Engine::diffusion)
    d = std::make_unique<DiffusionDriver>(c, snap);
  else {
    auto dk = std::make_unique<DksDriver>(c, OrbitalSet{c.grid(), snap.orbitals}, snap.t, snap.companion);
    dk->restore_controller(snap);
    d = std::move(dk);
  }
  return drive(c, *d, dir, o);
}

std::vector<SweepEntry> sweep(const RunConfig& c, const std::string& parameter, const std::vector<json>& values,
                              const RunOptions& o) {
  const fs::path dir = prepare_dir(o);
  std::vector<SweepEntry> out(values.size());
  auto member = [&](std::size_t i) {
    SweepEntry e{values[i], {}};
    RunOptions mo = o;
    mo.quiet = true;
    mo.out_dir = (dir / ("sweep_" + std::to_string(i))).string();
    try {
      e.result = run(with_parameter(c, parameter, values[i]), mo);
    } catch (const ConfigError& err) {
      e.result.exit_code = exit_config;
      e.result.message = err.what();
    } catch (const std::exception& err) {
      e.result.exit_code = exit_numerical;
      e.result.message = err.what();
    }
    return e;
  };
  const std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < values.size(); start += workers) {
    std::vector<std::future<SweepEntry>> batch;
    for (std::size_t i = start; i < std::min(values.size(), start + workers); ++i)
      batch.push_back(std::async(std::launch::async, member, i));
    for (std::size_t k = 0; k < batch.size(); ++k) out[start + k] = batch[k].get();
  }

  std::ofstream csv(dir / "sweep_summary.csv");
  csv << "index,parameter,value,exit_code,t,F_total,sigma2,mu_spread,l1_vs_diffusion,message\n";
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& r = out[i].result;
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    csv << i << ',' << parameter << ',' << out[i].value.dump() << ',' << r.exit_code << ',';
    if (r.last)
      csv << format_double(r.last->t) << ',' << format_double(r.last->energy.total) << ','
          << format_double(r.last->sigma2) << ',' << format_double(r.last->mu_spread);
    else
      csv << ",,,";
    csv << ',' << (r.l1_vs_diffusion ? format_double(*r.l1_vs_diffusion) : "") << ',' << msg << '\n';
  }
  return out;
}

}  // namespace dtdft
