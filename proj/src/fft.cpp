#include "phaseflow/fft.hpp"

#include <fftw3.h>

#include <stdexcept>
#include <utility>
#include <vector>

namespace phaseflow {

namespace {

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

Fft::Fft(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("FFT length must be positive");
  std::vector<std::complex<double>> scratch(static_cast<std::size_t>(n));
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_1d(n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_FORWARD, flags);
  inverse_plan_ = fftw_plan_dft_1d(n, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD, flags);
  if (!forward_plan_ || !inverse_plan_) throw std::runtime_error("FFTW planning failed");
}

Fft::~Fft() { release(); }

void Fft::release() {
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
  forward_plan_ = nullptr;
  inverse_plan_ = nullptr;
}

Fft::Fft(Fft&& other) noexcept
    : n_(other.n_),
      forward_plan_(std::exchange(other.forward_plan_, nullptr)),
      inverse_plan_(std::exchange(other.inverse_plan_, nullptr)) {}

Fft& Fft::operator=(Fft&& other) noexcept {
  if (this != &other) {
    release();
    n_ = other.n_;
    forward_plan_ = std::exchange(other.forward_plan_, nullptr);
    inverse_plan_ = std::exchange(other.inverse_plan_, nullptr);
  }
  return *this;
}

void Fft::forward(std::span<std::complex<double>> data) const {
  if (static_cast<int>(data.size()) != n_) throw std::invalid_argument("FFT length mismatch");
  fftw_execute_dft(static_cast<fftw_plan>(forward_plan_), as_fftw(data.data()), as_fftw(data.data()));
}

void Fft::inverse(std::span<std::complex<double>> data) const {
  if (static_cast<int>(data.size()) != n_) throw std::invalid_argument("FFT length mismatch");
  fftw_execute_dft(static_cast<fftw_plan>(inverse_plan_), as_fftw(data.data()), as_fftw(data.data()));
}

}  // namespace phaseflow
