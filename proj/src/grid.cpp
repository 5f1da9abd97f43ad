#include "dtdft/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dtdft/error.hpp"
#include "dtdft/kernels.hpp"

namespace dtdft {

void UnitSystem::validate() const {
  if (!(hbar > 0.0) || !(m > 0.0) || !(kB > 0.0))
    throw std::invalid_argument("units: hbar, m and kB must be positive");
  if (!(e2 >= 0.0)) throw std::invalid_argument("units: e2 must be nonnegative");
}

std::string_view to_string(Boundary b) {
  return b == Boundary::periodic ? "periodic" : "no_flux";
}

Boundary boundary_from_string(std::string_view s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "no_flux" || s == "no-flux") return Boundary::no_flux;
  throw std::invalid_argument("unknown boundary policy '" + std::string(s) + "'");
}

Grid::Grid(std::size_t n, double length, Boundary boundary)
    : n_(n), length_(length), h_(0.0), boundary_(boundary) {
  if (n < 8) throw std::invalid_argument("grid: need at least 8 points, got " + std::to_string(n));
  if (!(length > 0.0) || !std::isfinite(length))
    throw std::invalid_argument("grid: length must be positive and finite");
  h_ = periodic() ? length / static_cast<double>(n) : length / static_cast<double>(n - 1);
}

double Grid::weight(std::size_t i) const {
  if (!periodic() && (i == 0 || i + 1 == n_)) return 0.5 * h_;
  return h_;
}

std::vector<double> Grid::coordinates() const {
  std::vector<double> x(n_);
  for (std::size_t i = 0; i < n_; ++i) x[i] = this->x(i);
  return x;
}

std::vector<double> Grid::weights() const {
  std::vector<double> w(n_);
  for (std::size_t i = 0; i < n_; ++i) w[i] = weight(i);
  return w;
}

Grid make_grid(std::size_t n, double length, Boundary boundary) { return Grid(n, length, boundary); }

namespace {

void check_values(const Grid& g, const std::vector<double>& v, const char* what) {
  if (v.size() != g.size())
    throw std::invalid_argument(std::string(what) + ": value count " + std::to_string(v.size()) +
                                " does not match grid size " + std::to_string(g.size()));
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw std::invalid_argument(std::string(what) + ": non-finite value at index " +
                                  std::to_string(i));
}

}  // namespace

ScalarField::ScalarField(const Grid& g, double fill) : grid(g), values(g.size(), fill) {}

ScalarField::ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  check_values(grid, values, "ScalarField");
}

VectorField::VectorField(const Grid& g, double fill) : grid(g), values(g.size(), fill) {}

VectorField::VectorField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  check_values(grid, values, "VectorField");
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw GridMismatch(std::string(what) + ": fields live on different grids");
}

VectorField gradient(const ScalarField& f) {
  VectorField out(f.grid);
  kernels::gradient(f.values, f.grid.spacing(), f.grid.boundary(), out.values);
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  ScalarField out(f.grid);
  kernels::laplacian(f.values, f.grid.spacing(), f.grid.boundary(), out.values);
  return out;
}

ScalarField divergence(const VectorField& v) {
  ScalarField out(v.grid);
  kernels::divergence(v.values, v.grid.spacing(), v.grid.boundary(), out.values);
  return out;
}

double integrate(const Grid& g, std::span<const double> f) {
  if (f.size() != g.size()) throw GridMismatch("integrate: size mismatch");
  double s = 0.0;
  for (double v : f) s += v;
  if (!g.periodic()) s -= 0.5 * (f.front() + f.back());
  return s * g.spacing();
}

double integrate(const ScalarField& f) { return integrate(f.grid, f.values); }

}  // namespace dtdft
