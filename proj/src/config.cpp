#include "dtdft/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dtdft/error.hpp"

namespace dtdft {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

// Object reader that records which keys were consumed so leftovers can be
// reported as unknown.
class Node {
 public:
  Node(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  bool has(const std::string& key) const { return j_ && j_->contains(key); }

  Node child(const std::string& key) {
    used_.insert(key);
    return Node(has(key) ? &(*j_)[key] : nullptr, join(path_, key));
  }

  const json* raw(const std::string& key) {
    used_.insert(key);
    return has(key) ? &(*j_)[key] : nullptr;
  }

  double number(const std::string& key, std::optional<double> def = std::nullopt) {
    const json* v = raw(key);
    if (!v) {
      if (!def) fail(join(path_, key), "required key is missing");
      return *def;
    }
    if (!v->is_number()) fail(join(path_, key), "expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) fail(join(path_, key), "must be finite");
    return x;
  }

  std::optional<double> optional_number(const std::string& key) {
    const json* v = raw(key);
    if (!v || v->is_null()) return std::nullopt;
    if (!v->is_number()) fail(join(path_, key), "expected a number or null");
    return v->get<double>();
  }

  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> def = std::nullopt) {
    const json* v = raw(key);
    if (!v) {
      if (!def) fail(join(path_, key), "required key is missing");
      return *def;
    }
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v->get<std::int64_t>());
    if (v->is_number_float()) {
      const double x = v->get<double>();
      if (x >= 0.0 && x == std::floor(x) && x < 1.8e19) return static_cast<std::uint64_t>(x);
    }
    fail(join(path_, key), "expected a non-negative integer");
  }

  bool boolean(const std::string& key, bool def) {
    const json* v = raw(key);
    if (!v) return def;
    if (!v->is_boolean()) fail(join(path_, key), "expected true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> def = std::nullopt) {
    const json* v = raw(key);
    if (!v) {
      if (!def) fail(join(path_, key), "required key is missing");
      return *def;
    }
    if (!v->is_string()) fail(join(path_, key), "expected a string");
    return v->get<std::string>();
  }

  void finish() const {
    if (!j_) return;
    for (const auto& [k, _] : j_->items())
      if (!used_.count(k)) fail(join(path_, k), "unknown key");
  }

 private:
  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

template <class F>
auto convert(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

void require(bool ok, const std::string& path, const char* msg) {
  if (!ok) fail(path, msg);
}

UnitSystem parse_units(Node n) {
  UnitSystem u;
  u.hbar = n.number("hbar", 1.0);
  u.m = n.number("m", 1.0);
  u.e2 = n.number("e2", 1.0);
  u.kB = n.number("kB", 1.0);
  n.finish();
  require(u.hbar > 0.0, join(n.path(), "hbar"), "must be > 0");
  require(u.m > 0.0, join(n.path(), "m"), "must be > 0");
  require(u.e2 >= 0.0, join(n.path(), "e2"), "must be >= 0");
  require(u.kB > 0.0, join(n.path(), "kB"), "must be > 0");
  return u;
}

ModelParams parse_model(Node n, const UnitSystem& u) {
  ModelParams p;
  p.units = u;
  p.T = n.number("T", 0.0);
  p.b = n.number("b", 1.0);
  p.rho_bar = n.number("rho_bar", 1.0);
  const auto stats = n.string("statistics", "fermi_dirac");
  p.statistics = convert(join(n.path(), "statistics"), [&] { return statistics_from_string(stats); });
  p.coulomb_softening = n.optional_number("coulomb_softening");
  p.background_neutralization = n.boolean("background_neutralization", true);
  Node t = n.child("terms");
  p.terms.tf = t.boolean("tf", true);
  p.terms.weizsacker = t.boolean("weizsacker", true);
  p.terms.hartree = t.boolean("hartree", true);
  p.terms.dirac = t.boolean("dirac", true);
  p.terms.entropy = t.boolean("entropy", true);
  t.finish();
  n.finish();
  require(p.T >= 0.0, join(n.path(), "T"), "must be >= 0");
  require(p.b >= 0.0, join(n.path(), "b"), "must be >= 0");
  require(p.rho_bar > 0.0, join(n.path(), "rho_bar"), "must be > 0");
  if (p.coulomb_softening) require(*p.coulomb_softening > 0.0, join(n.path(), "coulomb_softening"), "must be > 0");
  return p;
}

InitialProfile parse_initial(Node n) {
  const auto kind = n.string("profile", "gaussian");
  InitialProfile out;
  if (kind == "gaussian") {
    GaussianProfile g;
    g.center = n.optional_number("center");
    g.sigma2 = n.number("sigma2", 1.0);
    g.mass = n.number("mass", 1.0);
    require(g.sigma2 > 0.0, join(n.path(), "sigma2"), "must be > 0");
    require(g.mass > 0.0, join(n.path(), "mass"), "must be > 0");
    out = g;
  } else if (kind == "uniform") {
    UniformProfile u;
    u.value = n.number("value", 0.5);
    require(u.value > 0.0, join(n.path(), "value"), "must be > 0");
    out = u;
  } else if (kind == "from_snapshot") {
    SnapshotProfile s{n.string("path")};
    require(!s.path.empty(), join(n.path(), "path"), "must not be empty");
    out = s;
  } else {
    fail(join(n.path(), "profile"), "expected gaussian, uniform or from_snapshot");
  }
  n.finish();
  return out;
}

PotentialSpec parse_potential(Node n, std::size_t grid_n) {
  const auto kind = n.string("kind", "zero");
  PotentialSpec out;
  if (kind == "zero") {
    out = ZeroPotential{};
  } else if (kind == "harmonic") {
    HarmonicPotential h;
    h.omega = n.number("omega", 1.0);
    h.center = n.optional_number("center");
    require(h.omega > 0.0, join(n.path(), "omega"), "must be > 0");
    out = h;
  } else if (kind == "custom") {
    const json* v = n.raw("values");
    if (!v || !v->is_array()) fail(join(n.path(), "values"), "expected an array of numbers");
    CustomPotential c;
    for (const auto& x : *v) {
      if (!x.is_number() || !std::isfinite(x.get<double>()))
        fail(join(n.path(), "values"), "entries must be finite numbers");
      c.values.push_back(x.get<double>());
    }
    require(c.values.size() == grid_n, join(n.path(), "values"), "needs one value per grid point");
    out = c;
  } else {
    fail(join(n.path(), "kind"), "expected zero, harmonic or custom");
  }
  n.finish();
  return out;
}

Schedule parse_schedule(Node n) {
  Schedule s;
  auto& c = s.control;
  s.t_end = n.number("t_end");
  s.cadence = n.number("cadence", 0.0);
  s.scale_with_friction = n.boolean("scale_with_friction", false);
  c.dt_min = n.number("dt_min", c.dt_min);
  c.dt_max = n.number("dt_max", c.dt_max);
  c.safety = n.number("safety", c.safety);
  c.growth = n.number("growth", c.growth);
  c.growth_after = static_cast<int>(n.integer("growth_after", static_cast<std::uint64_t>(c.growth_after)));
  c.energy_tolerance = n.number("energy_tolerance", c.energy_tolerance);
  c.max_steps = n.integer("max_steps", c.max_steps);
  n.finish();
  const auto& p = n.path();
  require(s.t_end >= 0.0, join(p, "t_end"), "must be >= 0");
  require(s.cadence >= 0.0, join(p, "cadence"), "must be >= 0");
  require(c.dt_min > 0.0, join(p, "dt_min"), "must be > 0");
  require(c.dt_max >= 0.0, join(p, "dt_max"), "must be >= 0");
  require(c.safety > 0.0 && c.safety <= 1.0, join(p, "safety"), "must lie in (0, 1]");
  require(c.growth >= 1.0, join(p, "growth"), "must be >= 1");
  require(c.growth_after >= 1, join(p, "growth_after"), "must be >= 1");
  require(c.energy_tolerance >= 0.0, join(p, "energy_tolerance"), "must be >= 0");
  require(c.max_steps >= 1, join(p, "max_steps"), "must be >= 1");
  return s;
}

DksConfig parse_dks(Node n) {
  DksConfig d;
  auto& o = d.options;
  const auto form = n.string("thermal_form", "chemical_potential");
  o.thermal = convert(join(n.path(), "thermal_form"), [&] { return thermal_form_from_string(form); });
  o.node_threshold = n.number("node_threshold", o.node_threshold);
  o.dt = n.number("dt", o.dt);
  o.norm_tolerance = n.number("norm_tolerance", o.norm_tolerance);
  o.dt_min = n.number("dt_min", o.dt_min);
  o.max_steps = n.integer("max_steps", o.max_steps);
  d.compare_diffusion = n.boolean("compare_diffusion", false);
  n.finish();
  const auto& p = n.path();
  require(o.node_threshold > 0.0 && o.node_threshold < 1.0, join(p, "node_threshold"), "must lie in (0, 1)");
  require(o.dt >= 0.0, join(p, "dt"), "must be >= 0");
  require(o.norm_tolerance > 0.0, join(p, "norm_tolerance"), "must be > 0");
  require(o.dt_min > 0.0, join(p, "dt_min"), "must be > 0");
  require(o.max_steps >= 1, join(p, "max_steps"), "must be >= 1");
  return d;
}

Outputs parse_outputs(Node n) {
  Outputs o;
  o.series = n.string("series", o.series);
  o.snapshot_every = n.number("snapshot_every", 0.0);
  o.checkpoint_every = n.number("checkpoint_every", 0.0);
  n.finish();
  require(!o.series.empty(), join(n.path(), "series"), "must not be empty");
  require(o.snapshot_every >= 0.0, join(n.path(), "snapshot_every"), "must be >= 0");
  require(o.checkpoint_every >= 0.0, join(n.path(), "checkpoint_every"), "must be >= 0");
  return o;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string_view to_string(Engine e) { return e == Engine::diffusion ? "diffusion" : "dks"; }

double RunConfig::time_scale() const { return schedule.scale_with_friction ? model.b / model.units.m : 1.0; }

RunConfig parse_config(const json& j) {
  Node root(&j, "");
  RunConfig c;
  const auto engine = root.string("engine", "diffusion");
  if (engine == "diffusion")
    c.engine = Engine::diffusion;
  else if (engine == "dks")
    c.engine = Engine::dks;
  else
    fail("engine", "expected diffusion or dks");

  Node g = root.child("grid");
  c.n = g.integer("n");
  c.length = g.number("length");
  const auto boundary = g.string("boundary", "periodic");
  c.boundary = convert("grid.boundary", [&] { return boundary_from_string(boundary); });
  g.finish();
  require(c.n >= 8, "grid.n", "must be >= 8");
  require(c.length > 0.0, "grid.length", "must be > 0");

  const auto units = parse_units(root.child("units"));
  c.model = parse_model(root.child("model"), units);
  c.initial = parse_initial(root.child("initial"));
  c.potential = parse_potential(root.child("potential"), c.n);
  c.schedule = parse_schedule(root.child("schedule"));
  c.dks = parse_dks(root.child("dks"));
  c.outputs = parse_outputs(root.child("outputs"));
  c.seed = root.integer("seed", 0);
  root.finish();

  if (c.engine == Engine::diffusion || c.dks.compare_diffusion)
    require(c.model.b > 0.0, "model.b", "must be > 0 for the diffusion engine");
  if (c.schedule.scale_with_friction) require(c.model.b > 0.0, "model.b", "must be > 0 when times scale with friction");
  if (c.boundary == Boundary::periodic && c.model.hartree_active() && !c.model.background_neutralization)
    fail("model.background_neutralization", "periodic Coulomb sums need a neutralizing background");
  if (const auto* u = std::get_if<UniformProfile>(&c.initial); u && c.model.band_limited())
    require(u->value < c.model.rho_bar, "initial.value", "must be below model.rho_bar");
  return c;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json to_json(const RunConfig& c) {
  json j;
  j["engine"] = std::string(to_string(c.engine));
  j["grid"] = {{"n", c.n}, {"length", c.length}, {"boundary", std::string(to_string(c.boundary))}};
  const auto& u = c.model.units;
  j["units"] = {{"hbar", u.hbar}, {"m", u.m}, {"e2", u.e2}, {"kB", u.kB}};
  const auto& p = c.model;
  j["model"] = {
      {"T", p.T},
      {"b", p.b},
      {"rho_bar", p.rho_bar},
      {"statistics", std::string(to_string(p.statistics))},
      {"coulomb_softening", optional_json(p.coulomb_softening)},
      {"background_neutralization", p.background_neutralization},
      {"terms",
       {{"tf", p.terms.tf},
        {"weizsacker", p.terms.weizsacker},
        {"hartree", p.terms.hartree},
        {"dirac", p.terms.dirac},
        {"entropy", p.terms.entropy}}},
  };
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, GaussianProfile>)
          j["initial"] = {{"profile", "gaussian"},
                          {"center", optional_json(v.center)},
                          {"sigma2", v.sigma2},
                          {"mass", v.mass}};
        else if constexpr (std::is_same_v<V, UniformProfile>)
          j["initial"] = {{"profile", "uniform"}, {"value", v.value}};
        else
          j["initial"] = {{"profile", "from_snapshot"}, {"path", v.path}};
      },
      c.initial);
  std::visit(
      [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, ZeroPotential>)
          j["potential"] = {{"kind", "zero"}};
        else if constexpr (std::is_same_v<V, HarmonicPotential>)
          j["potential"] = {{"kind", "harmonic"}, {"omega", v.omega}, {"center", optional_json(v.center)}};
        else
          j["potential"] = {{"kind", "custom"}, {"values", v.values}};
      },
      c.potential);
  const auto& s = c.schedule;
  j["schedule"] = {{"t_end", s.t_end},
                   {"cadence", s.cadence},
                   {"scale_with_friction", s.scale_with_friction},
                   {"dt_min", s.control.dt_min},
                   {"dt_max", s.control.dt_max},
                   {"safety", s.control.safety},
                   {"growth", s.control.growth},
                   {"growth_after", s.control.growth_after},
                   {"energy_tolerance", s.control.energy_tolerance},
                   {"max_steps", s.control.max_steps}};
  const auto& o = c.dks.options;
  j["dks"] = {{"thermal_form", std::string(to_string(o.thermal))},
              {"node_threshold", o.node_threshold},
              {"dt", o.dt},
              {"norm_tolerance", o.norm_tolerance},
              {"dt_min", o.dt_min},
              {"max_steps", o.max_steps},
              {"compare_diffusion", c.dks.compare_diffusion}};
  j["outputs"] = {{"series", c.outputs.series},
                  {"snapshot_every", c.outputs.snapshot_every},
                  {"checkpoint_every", c.outputs.checkpoint_every}};
  j["seed"] = c.seed;
  return j;
}

std::string canonical(const RunConfig& c) { return to_json(c).dump(); }

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const RunConfig& c) { return fnv1a_hex(canonical(c)); }

RunConfig with_parameter(const RunConfig& c, const std::string& path, const json& value) {
  json j = to_json(c);
  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) fail(path, "empty parameter path");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i])) fail(path, "unknown parameter path");
    node = &(*node)[parts[i]];
  }
  *node = value;
  return parse_config(j);
}

}  // namespace dtdft
