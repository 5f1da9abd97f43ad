#pragma once

// Thin RAII wrappers over FFTW. Plans are created under a process-wide lock
// and executed through the new-array interface on per-call buffers, so a
// single plan object may be shared read-only between threads.

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace dtdft {

/// Circular convolution of length N with a fixed real kernel.
class CircularConvolution {
 public:
  explicit CircularConvolution(std::span<const double> kernel);
  ~CircularConvolution();
  CircularConvolution(CircularConvolution&&) noexcept;
  CircularConvolution& operator=(CircularConvolution&&) noexcept;
  CircularConvolution(const CircularConvolution&) = delete;
  CircularConvolution& operator=(const CircularConvolution&) = delete;

  std::size_t size() const;
  /// out_i = sum_j kernel[(i - j) mod N] * source_j. `source` is zero-padded to
  /// N; only the first out.size() outputs are written.
  void apply(std::span<const double> source, std::span<double> out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Unnormalized forward / normalized inverse complex DFT of fixed length.
class ComplexDft {
 public:
  explicit ComplexDft(std::size_t n);
  ~ComplexDft();
  ComplexDft(ComplexDft&&) noexcept;
  ComplexDft& operator=(ComplexDft&&) noexcept;
  ComplexDft(const ComplexDft&) = delete;
  ComplexDft& operator=(const ComplexDft&) = delete;

  std::size_t size() const;
  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Angular wavenumbers in FFT order for a periodic grid of n cells and length L.
std::vector<double> wavenumbers(std::size_t n, double length);

}  // namespace dtdft
