#include "dtdft/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace dtdft {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct AlignedBuffer {
  void* ptr = nullptr;
  explicit AlignedBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~AlignedBuffer() { fftw_free(ptr); }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
  double* real() { return static_cast<double*>(ptr); }
  fftw_complex* cplx() { return static_cast<fftw_complex*>(ptr); }
};

}  // namespace

struct CircularConvolution::Impl {
  std::size_t n = 0;
  std::vector<std::complex<double>> spectrum;  // kernel DFT divided by n
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

CircularConvolution::CircularConvolution(std::span<const double> kernel)
    : impl_(std::make_unique<Impl>()) {
  const std::size_t n = kernel.size();
  if (n == 0) throw std::invalid_argument("CircularConvolution: empty kernel");
  impl_->n = n;
  const std::size_t m = n / 2 + 1;
  AlignedBuffer in(sizeof(double) * n);
  AlignedBuffer out(sizeof(fftw_complex) * m);
  {
    std::lock_guard lock(planner_mutex());
    impl_->r2c = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.real(), out.cplx(), FFTW_ESTIMATE);
    impl_->c2r = fftw_plan_dft_c2r_1d(static_cast<int>(n), out.cplx(), in.real(), FFTW_ESTIMATE);
  }
  std::memcpy(in.real(), kernel.data(), sizeof(double) * n);
  fftw_execute_dft_r2c(impl_->r2c, in.real(), out.cplx());
  impl_->spectrum.resize(m);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < m; ++k)
    impl_->spectrum[k] = std::complex<double>(out.cplx()[k][0], out.cplx()[k][1]) * scale;
}

CircularConvolution::~CircularConvolution() = default;
CircularConvolution::CircularConvolution(CircularConvolution&&) noexcept = default;
CircularConvolution& CircularConvolution::operator=(CircularConvolution&&) noexcept = default;

std::size_t CircularConvolution::size() const { return impl_->n; }

void CircularConvolution::apply(std::span<const double> source, std::span<double> out) const {
  const std::size_t n = impl_->n;
  if (source.size() > n || out.size() > n)
    throw std::invalid_argument("CircularConvolution: span longer than transform");
  const std::size_t m = n / 2 + 1;
  AlignedBuffer re(sizeof(double) * n);
  AlignedBuffer sp(sizeof(fftw_complex) * m);
  std::memset(re.real(), 0, sizeof(double) * n);
  std::memcpy(re.real(), source.data(), sizeof(double) * source.size());
  fftw_execute_dft_r2c(impl_->r2c, re.real(), sp.cplx());
  for (std::size_t k = 0; k < m; ++k) {
    const std::complex<double> v =
        std::complex<double>(sp.cplx()[k][0], sp.cplx()[k][1]) * impl_->spectrum[k];
    sp.cplx()[k][0] = v.real();
    sp.cplx()[k][1] = v.imag();
  }
  fftw_execute_dft_c2r(impl_->c2r, sp.cplx(), re.real());
  std::memcpy(out.data(), re.real(), sizeof(double) * out.size());
}

struct ComplexDft::Impl {
  std::size_t n = 0;
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

ComplexDft::ComplexDft(std::size_t n) : impl_(std::make_unique<Impl>()) {
  if (n == 0) throw std::invalid_argument("ComplexDft: zero length");
  impl_->n = n;
  AlignedBuffer buf(sizeof(fftw_complex) * n);
  std::lock_guard lock(planner_mutex());
  impl_->fwd = fftw_plan_dft_1d(static_cast<int>(n), buf.cplx(), buf.cplx(), FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_1d(static_cast<int>(n), buf.cplx(), buf.cplx(), FFTW_BACKWARD, FFTW_ESTIMATE);
}

ComplexDft::~ComplexDft() = default;
ComplexDft::ComplexDft(ComplexDft&&) noexcept = default;
ComplexDft& ComplexDft::operator=(ComplexDft&&) noexcept = default;

std::size_t ComplexDft::size() const { return impl_->n; }

void ComplexDft::forward(std::span<std::complex<double>> data) const {
  if (data.size() != impl_->n) throw std::invalid_argument("ComplexDft: length mismatch");
  AlignedBuffer buf(sizeof(fftw_complex) * impl_->n);
  std::memcpy(buf.ptr, data.data(), sizeof(fftw_complex) * impl_->n);
  fftw_execute_dft(impl_->fwd, buf.cplx(), buf.cplx());
  std::memcpy(data.data(), buf.ptr, sizeof(fftw_complex) * impl_->n);
}

void ComplexDft::inverse(std::span<std::complex<double>> data) const {
  if (data.size() != impl_->n) throw std::invalid_argument("ComplexDft: length mismatch");
  AlignedBuffer buf(sizeof(fftw_complex) * impl_->n);
  std::memcpy(buf.ptr, data.data(), sizeof(fftw_complex) * impl_->n);
  fftw_execute_dft(impl_->inv, buf.cplx(), buf.cplx());
  const double scale = 1.0 / static_cast<double>(impl_->n);
  for (std::size_t i = 0; i < impl_->n; ++i)
    data[i] = std::complex<double>(buf.cplx()[i][0], buf.cplx()[i][1]) * scale;
}

std::vector<double> wavenumbers(std::size_t n, double length) {
  std::vector<double> k(n);
  const double dk = 2.0 * std::numbers::pi / length;
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = static_cast<double>(i);
    k[i] = (i <= n / 2 ? j : j - static_cast<double>(n)) * dk;
  }
  return k;
}

}  // namespace dtdft
