#pragma once

#include <complex>
#include <span>

namespace phaseflow {

/// In-place 1D complex DFT of fixed length backed by FFTW.
/// forward: X_k = sum_j x_j e^{-2 pi i jk/N}; inverse is unnormalized.
/// Plans use FFTW_ESTIMATE so results are reproducible run to run.
class Fft {
 public:
  explicit Fft(int n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&& other) noexcept;
  Fft& operator=(Fft&& other) noexcept;

  int size() const { return n_; }
  void forward(std::span<std::complex<double>> data) const;
  void inverse(std::span<std::complex<double>> data) const;

 private:
  void release();

  int n_ = 0;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Signed frequency index of DFT bin k: 0, 1, ..., N/2-1, -N/2, ..., -1.
inline int signed_frequency(int k, int n) { return k < n / 2 ? k : k - n; }

}  // namespace phaseflow
