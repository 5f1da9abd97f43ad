#include "dtdft/io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dtdft/error.hpp"

namespace dtdft {

namespace {

double centre_or_middle(const std::optional<double>& c, const Grid& g) { return c.value_or(0.5 * g.length()); }

double displacement(const Grid& g, double x, double c) {
  double d = x - c;
  if (g.periodic()) d -= g.length() * std::round(d / g.length());
  return d;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  const auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("snapshot: bad value for '" + key + "': " + v);
  }
}

std::size_t to_size(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  if (x < 0.0 || x != std::floor(x)) throw ConfigError("snapshot: '" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(x);
}

}  // namespace

ScalarField build_potential(const RunConfig& c) {
  const Grid g = c.grid();
  const double m = c.model.units.m;
  return std::visit(
      [&](const auto& v) -> ScalarField {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, ZeroPotential>) {
          return ScalarField(g);
        } else if constexpr (std::is_same_v<V, HarmonicPotential>) {
          const double x0 = centre_or_middle(v.center, g);
          return sample(g, [&](double x) {
            const double d = displacement(g, x, x0);
            return 0.5 * m * v.omega * v.omega * d * d;
          });
        } else {
          return ScalarField(g, v.values);
        }
      },
      c.potential);
}

DensityField build_initial_density(const RunConfig& c) {
  const Grid g = c.grid();
  return std::visit(
      [&](const auto& v) -> DensityField {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, GaussianProfile>) {
          const double x0 = centre_or_middle(v.center, g);
          const double norm = v.mass / std::sqrt(2.0 * std::numbers::pi * v.sigma2);
          return DensityField::clamped(sample(g,
                                              [&](double x) {
                                                const double d = displacement(g, x, x0);
                                                return norm * std::exp(-d * d / (2.0 * v.sigma2));
                                              }),
                                       c.model);
        } else if constexpr (std::is_same_v<V, UniformProfile>) {
          return DensityField::clamped(ScalarField(g, v.value), c.model);
        } else {
          const Snapshot s = read_snapshot(v.path);
          if (!(s.grid() == g)) throw ConfigError("initial.path: snapshot grid does not match grid");
          std::vector<double> rho = s.rho;
          if (s.engine == Engine::dks) {
            OrbitalSet os{g, s.orbitals};
            rho = density_values(os);
          }
          return DensityField::clamped(ScalarField(g, std::move(rho)), c.model);
        }
      },
      c.initial);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_snapshot(const std::string& path, const Snapshot& s) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError(path + ": cannot write snapshot");
    const Grid g = s.grid();
    out << "# schema: " << s.schema << "\n";
    out << "# engine: " << to_string(s.engine) << "\n";
    out << "# config_hash: " << s.config_hash << "\n";
    out << "# config: " << s.config << "\n";
    out << "# t: " << format_double(s.t) << "\n";
    out << "# dt: " << format_double(s.dt) << "\n";
    out << "# last_dt: " << format_double(s.last_dt) << "\n";
    out << "# accept_streak: " << s.accept_streak << "\n";
    out << "# steps: " << s.steps << "\n";
    out << "# rejections: " << s.rejections << "\n";
    out << "# n: " << s.n << "\n";
    out << "# length: " << format_double(s.length) << "\n";
    out << "# h: " << format_double(g.spacing()) << "\n";
    out << "# boundary: " << to_string(s.boundary) << "\n";
    out << "# orbitals: " << s.orbitals.size() << "\n";
    if (!s.orbitals.empty()) {
      out << "# occupations:";
      for (const auto& o : s.orbitals) out << ' ' << format_double(o.occupation);
      out << "\n";
    }
    if (s.companion) {
      out << "# companion_dt: " << format_double(s.companion->dt) << "\n";
      out << "# companion_accept_streak: " << s.companion->accept_streak << "\n";
      out << "# companion_steps: " << s.companion->steps << "\n";
      out << "# companion_rejections: " << s.companion->rejections << "\n";
    }
    out << "x";
    if (s.engine == Engine::diffusion) out << ",rho";
    for (std::size_t k = 0; k < s.orbitals.size(); ++k) out << ",re_" << k << ",im_" << k;
    if (s.companion) out << ",rho_diffusion";
    out << "\n";
    for (std::size_t i = 0; i < s.n; ++i) {
      out << format_double(g.x(i));
      if (s.engine == Engine::diffusion) out << ',' << format_double(s.rho[i]);
      for (const auto& o : s.orbitals)
        out << ',' << format_double(o.phi[i].real()) << ',' << format_double(o.phi[i].imag());
      if (s.companion) out << ',' << format_double(s.companion->rho[i]);
      out << "\n";
    }
    if (!out) throw ConfigError(path + ": write failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError(path + ": cannot move snapshot into place");
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open snapshot");
  Snapshot s;
  std::string line;
  std::vector<double> occupations;
  bool has_companion = false;
  bool saw_schema = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) != 0) break;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ConfigError(path + ": malformed header line: " + line);
    const std::string key = trim(line.substr(2, colon - 2));
    const std::string val = trim(line.substr(colon + 1));
    if (key == "schema") {
      s.schema = static_cast<int>(to_size(key, val));
      saw_schema = true;
    } else if (key == "engine") {
      if (val == "diffusion")
        s.engine = Engine::diffusion;
      else if (val == "dks")
        s.engine = Engine::dks;
      else
        throw ConfigError(path + ": unknown engine " + val);
    } else if (key == "config_hash") {
      s.config_hash = val;
    } else if (key == "config") {
      s.config = val;
    } else if (key == "t") {
      s.t = to_double(key, val);
    } else if (key == "dt") {
      s.dt = to_double(key, val);
    } else if (key == "last_dt") {
      s.last_dt = to_double(key, val);
    } else if (key == "accept_streak") {
      s.accept_streak = static_cast<int>(to_size(key, val));
    } else if (key == "steps") {
      s.steps = to_size(key, val);
    } else if (key == "rejections") {
      s.rejections = to_size(key, val);
    } else if (key == "n") {
      s.n = to_size(key, val);
    } else if (key == "length") {
      s.length = to_double(key, val);
    } else if (key == "h" || key == "orbitals") {
      // derived, re-checked below
    } else if (key == "boundary") {
      try {
        s.boundary = boundary_from_string(val);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
      }
    } else if (key == "occupations") {
      std::istringstream ss(val);
      std::string tok;
      while (ss >> tok) occupations.push_back(to_double(key, tok));
    } else if (key.rfind("companion_", 0) == 0) {
      if (!s.companion) s.companion.emplace();
      has_companion = true;
      if (key == "companion_dt")
        s.companion->dt = to_double(key, val);
      else if (key == "companion_accept_streak")
        s.companion->accept_streak = static_cast<int>(to_size(key, val));
      else if (key == "companion_steps")
        s.companion->steps = to_size(key, val);
      else if (key == "companion_rejections")
        s.companion->rejections = to_size(key, val);
      else
        throw ConfigError(path + ": unknown header key " + key);
    } else {
      throw ConfigError(path + ": unknown header key " + key);
    }
  }
  if (!saw_schema) throw ConfigError(path + ": not a snapshot (missing schema)");
  if (s.schema != kSnapshotSchema) throw ConfigError(path + ": unsupported snapshot schema " + std::to_string(s.schema));
  if (s.n < 8 || !(s.length > 0.0)) throw ConfigError(path + ": invalid grid metadata");

  // `line` holds the column header.
  std::size_t cols = 1;
  for (char ch : line)
    if (ch == ',') ++cols;
  const std::size_t k = occupations.size();
  const std::size_t expected = 1 + (s.engine == Engine::diffusion ? 1 : 2 * k) + (has_companion ? 1 : 0);
  if (cols != expected || (s.engine == Engine::dks && k == 0))
    throw ConfigError(path + ": column layout does not match the header");

  s.orbitals.assign(k, Orbital{});
  for (std::size_t j = 0; j < k; ++j) {
    s.orbitals[j].occupation = occupations[j];
    s.orbitals[j].phi.reserve(s.n);
  }
  if (has_companion) s.companion->rho.reserve(s.n);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(to_double("row", trim(tok)));
    if (v.size() != cols) throw ConfigError(path + ": row " + std::to_string(rows) + " has the wrong width");
    std::size_t c = 1;
    if (s.engine == Engine::diffusion) s.rho.push_back(v[c++]);
    for (std::size_t j = 0; j < k; ++j, c += 2) s.orbitals[j].phi.emplace_back(v[c], v[c + 1]);
    if (has_companion) s.companion->rho.push_back(v[c]);
    ++rows;
  }
  if (rows != s.n) throw ConfigError(path + ": expected " + std::to_string(s.n) + " rows, found " + std::to_string(rows));
  return s;
}

SeriesWriter::SeriesWriter(const std::string& path, std::vector<std::string> columns) : columns_(std::move(columns)) {
  f_ = std::fopen(path.c_str(), "w");
  if (!f_) throw ConfigError(path + ": cannot open series file for writing");
  for (std::size_t i = 0; i < columns_.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", columns_[i].c_str());
  std::fputc('\n', f_);
}

SeriesWriter::~SeriesWriter() {
  if (f_) std::fclose(f_);
}

void SeriesWriter::write(const std::vector<double>& row) {
  if (row.size() != columns_.size())
    throw std::invalid_argument("series row has " + std::to_string(row.size()) + " values for " +
                                std::to_string(columns_.size()) + " columns");
  for (std::size_t i = 0; i < row.size(); ++i) std::fprintf(f_, "%s%.17g", i ? "," : "", row[i]);
  std::fputc('\n', f_);
  std::fflush(f_);
}

std::vector<std::string> series_columns(Engine e, std::size_t orbitals, bool compare_diffusion) {
  std::vector<std::string> c = {"t", "mass", "F_total", "F_tf", "F_w", "F_h", "F_d", "F_u", "minus_TS",
                                "S", "sigma2", "mu_spread", "dt"};
  if (e == Engine::dks) {
    c.push_back("E_kin");
    for (std::size_t k = 0; k < orbitals; ++k) c.push_back("norm_" + std::to_string(k));
    if (compare_diffusion) c.push_back("l1_vs_diffusion");
  }
  return c;
}

std::vector<double> series_row(const Observation& o, std::optional<double> l1) {
  const auto& e = o.energy;
  std::vector<double> r = {o.t,      o.mass,     e.total, e.e_tf,     e.e_w,    e.e_h, e.e_d,
                           e.e_u,    e.minus_TS, o.S,     o.sigma2,   o.mu_spread, o.dt_used};
  if (!o.norms.empty()) {
    r.push_back(e.e_kin);
    r.insert(r.end(), o.norms.begin(), o.norms.end());
    if (l1) r.push_back(*l1);
  }
  return r;
}

std::vector<std::vector<double>> read_series(const std::string& path, std::vector<std::string>* header) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open series file");
  std::string line;
  std::vector<std::vector<double>> rows;
  if (!std::getline(in, line)) return rows;
  if (header) {
    header->clear();
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) header->push_back(tok);
  }
  while (std::getline(in, line)) {
    std::vector<double> v;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
    rows.push_back(std::move(v));
  }
  return rows;
}

}  // namespace dtdft
