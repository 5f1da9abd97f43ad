#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dtdft {

/// Physical constants. Defaults are dimensionless atomic-style units.
struct UnitSystem {
  double hbar = 1.0;
  double m = 1.0;
  double e2 = 1.0;  ///< Coulomb coupling; 0 switches electrostatics off.
  double kB = 1.0;

  void validate() const;
  bool operator==(const UnitSystem&) const = default;
};

enum class Boundary { periodic, no_flux };

std::string_view to_string(Boundary b);
Boundary boundary_from_string(std::string_view s);

/// Uniform 1D mesh. Periodic grids hold n cells on [0, L) with h = L/n;
/// no-flux grids hold n nodes on [0, L] with h = L/(n-1).
class Grid {
 public:
  Grid(std::size_t n, double length, Boundary boundary);

  std::size_t size() const { return n_; }
  double length() const { return length_; }
  double spacing() const { return h_; }
  Boundary boundary() const { return boundary_; }
  bool periodic() const { return boundary_ == Boundary::periodic; }

  double x(std::size_t i) const { return static_cast<double>(i) * h_; }
  /// Quadrature weight: rectangle rule (periodic) or trapezoid (no-flux).
  double weight(std::size_t i) const;
  std::vector<double> coordinates() const;
  std::vector<double> weights() const;

  bool operator==(const Grid&) const = default;

 private:
  std::size_t n_;
  double length_;
  double h_;
  Boundary boundary_;
};

Grid make_grid(std::size_t n, double length, Boundary boundary);

struct ScalarField {
  Grid grid;
  std::vector<double> values;

  explicit ScalarField(const Grid& g, double fill = 0.0);
  /// Throws std::invalid_argument on size mismatch or non-finite entries.
  ScalarField(const Grid& g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  std::span<const double> view() const { return values; }
};

/// One component in 1D. For no-flux grids the end values are treated as zero
/// by `divergence`.
struct VectorField {
  Grid grid;
  std::vector<double> values;

  explicit VectorField(const Grid& g, double fill = 0.0);
  VectorField(const Grid& g, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double> view() const { return values; }
};

/// Samples f(x) at the grid coordinates.
template <class F>
ScalarField sample(const Grid& g, F&& f) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g.x(i));
  return ScalarField(g, std::move(v));
}

void require_same_grid(const Grid& a, const Grid& b, const char* what);

/// Second-order central differences; one-sided second order at no-flux ends.
VectorField gradient(const ScalarField& f);
/// Three-point stencil; mirror ghost points at no-flux ends.
ScalarField laplacian(const ScalarField& f);
/// Central differences with odd mirror ghosts at no-flux ends, so that
/// sum_i w_i (div v)_i telescopes to zero on both boundary policies.
ScalarField divergence(const VectorField& v);
double integrate(const ScalarField& f);
double integrate(const Grid& g, std::span<const double> f);

}  // namespace dtdft
