#include "dtdft/hartree.hpp"

#include <cmath>
#include <stdexcept>

#include "dtdft/error.hpp"
#include "dtdft/kernels.hpp"

namespace dtdft {

CoulombKernel::CoulombKernel(const Grid& grid, double e2, double softening, bool neutralize)
    : grid_(grid), e2_(e2), softening_(softening), neutralize_(neutralize) {
  if (!(softening > 0.0)) throw std::invalid_argument("CoulombKernel: softening must be positive");
  if (!(e2 >= 0.0)) throw std::invalid_argument("CoulombKernel: e2 must be nonnegative");
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const double a2 = softening * softening;
  samples_.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    double d = static_cast<double>(m) * h;
    if (grid.periodic()) d = std::min(d, grid.length() - d);
    samples_[m] = e2 / std::sqrt(d * d + a2);
  }

  // Circulant embedding for the fast path: n for periodic, 2n zero-padded otherwise.
  std::vector<double> circ;
  if (grid.periodic()) {
    circ = samples_;
    for (double v : samples_) row_sum_ += v * h;
  } else {
    circ.assign(2 * n, 0.0);
    for (std::size_t m = 0; m < n; ++m) circ[m] = samples_[m];
    for (std::size_t m = 1; m < n; ++m) circ[2 * n - m] = samples_[m];
    for (std::size_t m = 0; m < n; ++m) row_sum_ += samples_[m] * h * (m == 0 ? 1.0 : 2.0);
  }
  fast_.emplace(circ);
}

double CoulombKernel::background(std::span<const double> rho) const {
  if (!neutralize_) return 0.0;
  return integrate(grid_, rho) / grid_.length();
}

std::vector<double> CoulombKernel::weighted_source(std::span<const double> rho) const {
  if (rho.size() != grid_.size()) throw GridMismatch("CoulombKernel: density size mismatch");
  const double bg = background(rho);
  std::vector<double> s(rho.size());
  for (std::size_t j = 0; j < rho.size(); ++j) s[j] = grid_.weight(j) * (rho[j] - bg);
  return s;
}

std::vector<double> CoulombKernel::potential(std::span<const double> rho, Path path) const {
  const auto s = weighted_source(rho);
  std::vector<double> v(rho.size(), 0.0);
  if (e2_ == 0.0) return v;
  if (path == Path::direct) {
    kernels::convolve_direct(samples_, s, grid_.boundary(), v);
  } else {
    fast_->apply(s, v);
  }
  return v;
}

double CoulombKernel::energy(std::span<const double> rho, std::span<const double> v) const {
  const double bg = background(rho);
  double e = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) e += grid_.weight(i) * (rho[i] - bg) * v[i];
  return 0.5 * e;
}

ScalarField hartree_potential(const ScalarField& rho, const CoulombKernel& k, CoulombKernel::Path path) {
  require_same_grid(rho.grid, k.grid(), "hartree_potential");
  return ScalarField(rho.grid, k.potential(rho.values, path));
}

double hartree_energy(const ScalarField& rho, const CoulombKernel& k, CoulombKernel::Path path) {
  require_same_grid(rho.grid, k.grid(), "hartree_energy");
  const auto v = k.potential(rho.values, path);
  return k.energy(rho.values, v);
}

}  // namespace dtdft
