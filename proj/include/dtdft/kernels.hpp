#pragma once

// Pointwise and stencil kernels over raw spans. Each kernel has a plain
// serial reference and an OpenMP path; the two must agree to round-off and
// are compared in tests/test_kernels.cpp and bench/bench_kernels.cpp.

#include <cstddef>
#include <span>

#include "dtdft/grid.hpp"

namespace dtdft::kernels {

enum class Exec { serial, parallel };

/// Execution path used by the field-level API. Defaults to parallel.
Exec default_exec();
void set_default_exec(Exec e);

void gradient(std::span<const double> f, double h, Boundary b, std::span<double> out,
              Exec exec = default_exec());
void laplacian(std::span<const double> f, double h, Boundary b, std::span<double> out,
               Exec exec = default_exec());
void divergence(std::span<const double> v, double h, Boundary b, std::span<double> out,
                Exec exec = default_exec());

/// Finite-volume divergence of the flux (rho_{i+1/2} / b) (mu_{i+1} - mu_i) / h
/// with arithmetic-mean interface density. End fluxes vanish on no-flux grids
/// and the end cells have half volume.
void flux_divergence(std::span<const double> rho, std::span<const double> mu, double h,
                     Boundary b, double inv_friction, std::span<double> out,
                     Exec exec = default_exec());

/// out_i = sum_j kernel[d(i, j)] * source_j, where d is the minimum-image offset
/// (periodic, kernel has n samples indexed by (i - j) mod n) or |i - j| (no-flux).
void convolve_direct(std::span<const double> kernel, std::span<const double> source, Boundary b,
                     std::span<double> out, Exec exec = default_exec());

}  // namespace dtdft::kernels
