#include "dtdft/kernels.hpp"

#include <atomic>
#include <cassert>
#include <vector>

namespace dtdft::kernels {

namespace {

// Below these sizes the fork/join cost dominates the loop body.
constexpr std::ptrdiff_t kStencilThreshold = 4096;
constexpr std::ptrdiff_t kConvolutionThreshold = 64;

std::atomic<Exec> g_default{Exec::parallel};

inline double edge_flux(double rho_l, double rho_r, double mu_l, double mu_r, double inv_h,
                        double inv_friction) {
  return inv_friction * (0.5 * (rho_l + rho_r)) * ((mu_r - mu_l) * inv_h);
}

// Ghost-padded copy: p[0] and p[n+1] are the ghosts.
enum class Mirror { even, odd };

std::vector<double> padded(std::span<const double> f, Boundary b, Mirror mirror) {
  const std::size_t n = f.size();
  std::vector<double> p(n + 2);
  for (std::size_t i = 0; i < n; ++i) p[i + 1] = f[i];
  if (b == Boundary::periodic) {
    p[0] = f[n - 1];
    p[n + 1] = f[0];
  } else {
    const double s = mirror == Mirror::even ? 1.0 : -1.0;
    p[0] = s * f[1];
    p[n + 1] = s * f[n - 2];
  }
  return p;
}

// ---- serial reference ------------------------------------------------------

void gradient_serial(std::span<const double> f, double h, Boundary b, std::span<double> out) {
  const std::size_t n = f.size();
  const auto p = padded(f, b, Mirror::even);
  for (std::size_t i = 0; i < n; ++i) out[i] = (p[i + 2] - p[i]) / (2.0 * h);
  if (b == Boundary::no_flux) {
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  }
}

void laplacian_serial(std::span<const double> f, double h, Boundary b, std::span<double> out) {
  const auto p = padded(f, b, Mirror::even);
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = (p[i] - 2.0 * p[i + 1] + p[i + 2]) / (h * h);
}

void divergence_serial(std::span<const double> v, double h, Boundary b, std::span<double> out) {
  const auto p = padded(v, b, Mirror::odd);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (p[i + 2] - p[i]) / (2.0 * h);
}

void flux_divergence_serial(std::span<const double> rho, std::span<const double> mu, double h,
                            Boundary b, double inv_friction, std::span<double> out) {
  const std::size_t n = rho.size();
  const double inv_h = 1.0 / h;
  // flux[e] sits between cells e and e+1.
  std::vector<double> flux(n, 0.0);
  const std::size_t edges = b == Boundary::periodic ? n : n - 1;
  for (std::size_t e = 0; e < edges; ++e) {
    const std::size_t r = (e + 1) % n;
    flux[e] = edge_flux(rho[e], rho[r], mu[e], mu[r], inv_h, inv_friction);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double left = 0.0;
    if (i > 0) left = flux[i - 1];
    else if (b == Boundary::periodic) left = flux[n - 1];
    const double right = flux[i];
    out[i] = (right - left) * inv_h;
  }
  if (b == Boundary::no_flux) {
    out[0] = 2.0 * (flux[0] * inv_h);
    out[n - 1] = 2.0 * (-flux[n - 2] * inv_h);
  }
}

void convolve_serial(std::span<const double> kernel, std::span<const double> source, Boundary b,
                     std::span<double> out) {
  const std::size_t n = source.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t d = b == Boundary::periodic ? (i + n - j) % n : (i > j ? i - j : j - i);
      s += kernel[d] * source[j];
    }
    out[i] = s;
  }
}

// ---- OpenMP path -----------------------------------------------------------

void gradient_parallel(std::span<const double> f, double h, Boundary b, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(f.size());
  const double* x = f.data();
  double* y = out.data();
#pragma omp parallel for schedule(static) if (n >= kStencilThreshold)
  for (std::ptrdiff_t i = 1; i < n - 1; ++i) y[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
  if (b == Boundary::periodic) {
    y[0] = (x[1] - x[n - 1]) / (2.0 * h);
    y[n - 1] = (x[0] - x[n - 2]) / (2.0 * h);
  } else {
    y[0] = (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h);
    y[n - 1] = (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h);
  }
}

void laplacian_parallel(std::span<const double> f, double h, Boundary b, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(f.size());
  const double* x = f.data();
  double* y = out.data();
  const double h2 = h * h;
#pragma omp parallel for schedule(static) if (n >= kStencilThreshold)
  for (std::ptrdiff_t i = 1; i < n - 1; ++i) y[i] = (x[i - 1] - 2.0 * x[i] + x[i + 1]) / h2;
  if (b == Boundary::periodic) {
    y[0] = (x[n - 1] - 2.0 * x[0] + x[1]) / h2;
    y[n - 1] = (x[n - 2] - 2.0 * x[n - 1] + x[0]) / h2;
  } else {
    y[0] = (x[1] - 2.0 * x[0] + x[1]) / h2;
    y[n - 1] = (x[n - 2] - 2.0 * x[n - 1] + x[n - 2]) / h2;
  }
}

void divergence_parallel(std::span<const double> v, double h, Boundary b, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  const double* x = v.data();
  double* y = out.data();
#pragma omp parallel for schedule(static) if (n >= kStencilThreshold)
  for (std::ptrdiff_t i = 1; i < n - 1; ++i) y[i] = (x[i + 1] - x[i - 1]) / (2.0 * h);
  if (b == Boundary::periodic) {
    y[0] = (x[1] - x[n - 1]) / (2.0 * h);
    y[n - 1] = (x[0] - x[n - 2]) / (2.0 * h);
  } else {
    y[0] = (x[1] - -x[1]) / (2.0 * h);
    y[n - 1] = (-x[n - 2] - x[n - 2]) / (2.0 * h);
  }
}

void flux_divergence_parallel(std::span<const double> rho, std::span<const double> mu, double h,
                              Boundary b, double inv_friction, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(rho.size());
  const double inv_h = 1.0 / h;
  const double* r = rho.data();
  const double* m = mu.data();
  double* y = out.data();
#pragma omp parallel for schedule(static) if (n >= kStencilThreshold)
  for (std::ptrdiff_t i = 1; i < n - 1; ++i) {
    const double right = edge_flux(r[i], r[i + 1], m[i], m[i + 1], inv_h, inv_friction);
    const double left = edge_flux(r[i - 1], r[i], m[i - 1], m[i], inv_h, inv_friction);
    y[i] = (right - left) * inv_h;
  }
  const double f0 = edge_flux(r[0], r[1], m[0], m[1], inv_h, inv_friction);
  const double fl = edge_flux(r[n - 2], r[n - 1], m[n - 2], m[n - 1], inv_h, inv_friction);
  if (b == Boundary::periodic) {
    const double wrap = edge_flux(r[n - 1], r[0], m[n - 1], m[0], inv_h, inv_friction);
    y[0] = (f0 - wrap) * inv_h;
    y[n - 1] = (wrap - fl) * inv_h;
  } else {
    y[0] = 2.0 * (f0 * inv_h);
    y[n - 1] = 2.0 * (-fl * inv_h);
  }
}

void convolve_parallel(std::span<const double> kernel, std::span<const double> source, Boundary b,
                       std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(source.size());
  const double* k = kernel.data();
  const double* s = source.data();
  double* y = out.data();
  const bool periodic = b == Boundary::periodic;
#pragma omp parallel for schedule(static) if (n >= kConvolutionThreshold)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const std::ptrdiff_t d = periodic ? (i - j + n) % n : (i > j ? i - j : j - i);
      acc += k[d] * s[j];
    }
    y[i] = acc;
  }
}

}  // namespace

Exec default_exec() { return g_default.load(std::memory_order_relaxed); }
void set_default_exec(Exec e) { g_default.store(e, std::memory_order_relaxed); }

void gradient(std::span<const double> f, double h, Boundary b, std::span<double> out, Exec exec) {
  assert(out.size() == f.size() && f.size() >= 3);
  exec == Exec::serial ? gradient_serial(f, h, b, out) : gradient_parallel(f, h, b, out);
}

void laplacian(std::span<const double> f, double h, Boundary b, std::span<double> out, Exec exec) {
  assert(out.size() == f.size() && f.size() >= 3);
  exec == Exec::serial ? laplacian_serial(f, h, b, out) : laplacian_parallel(f, h, b, out);
}

void divergence(std::span<const double> v, double h, Boundary b, std::span<double> out, Exec exec) {
  assert(out.size() == v.size() && v.size() >= 3);
  exec == Exec::serial ? divergence_serial(v, h, b, out) : divergence_parallel(v, h, b, out);
}

void flux_divergence(std::span<const double> rho, std::span<const double> mu, double h, Boundary b,
                     double inv_friction, std::span<double> out, Exec exec) {
  assert(rho.size() == mu.size() && out.size() == rho.size() && rho.size() >= 3);
  exec == Exec::serial ? flux_divergence_serial(rho, mu, h, b, inv_friction, out)
                       : flux_divergence_parallel(rho, mu, h, b, inv_friction, out);
}

void convolve_direct(std::span<const double> kernel, std::span<const double> source, Boundary b,
                     std::span<double> out, Exec exec) {
  assert(kernel.size() >= source.size() && out.size() == source.size());
  exec == Exec::serial ? convolve_serial(kernel, source, b, out)
                       : convolve_parallel(kernel, source, b, out);
}

}  // namespace dtdft::kernels
