#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dtdft/fft.hpp"
#include "dtdft/grid.hpp"

namespace dtdft {

/// Soft-core Coulomb interaction e2 / sqrt(x^2 + a^2) sampled on a grid.
/// Periodic grids use the minimum-image distance; no-flux grids the plain one.
/// With neutralization the uniform background rho_bg = (1/L) int rho is
/// subtracted from the source before convolving.
class CoulombKernel {
 public:
  enum class Path { direct, fast };

  CoulombKernel(const Grid& grid, double e2, double softening, bool neutralize);

  const Grid& grid() const { return grid_; }
  double e2() const { return e2_; }
  double softening() const { return softening_; }
  bool neutralized() const { return neutralize_; }
  /// Kernel value at an offset of `cells` grid spacings (minimum image on periodic grids).
  double sample(std::size_t cells) const { return samples_[cells]; }
  /// sum_j w_j |k(x_i - x_j)|, the same for every i up to end effects.
  double row_sum() const { return row_sum_; }

  double background(std::span<const double> rho) const;
  std::vector<double> potential(std::span<const double> rho, Path path = Path::fast) const;
  /// 1/2 int (rho - rho_bg) v_H.
  double energy(std::span<const double> rho, std::span<const double> v_hartree) const;

 private:
  std::vector<double> weighted_source(std::span<const double> rho) const;

  Grid grid_;
  double e2_;
  double softening_;
  bool neutralize_;
  std::vector<double> samples_;
  double row_sum_ = 0.0;
  std::optional<CircularConvolution> fast_;
};


ScalarField hartree_potential(const ScalarField& rho, const CoulombKernel& k,
                              CoulombKernel::Path path = CoulombKernel::Path::fast);
double hartree_energy(const ScalarField& rho, const CoulombKernel& k,
                      CoulombKernel::Path path = CoulombKernel::Path::fast);

}  // namespace dtdft
