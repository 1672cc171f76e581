/*
 * Copyright 2026 The gpscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "gpscore/fft.hpp"

#include <cstring>
#include <mutex>

#include <fftw3.h>

#include "gpscore/error.hpp"

namespace gpscore {

namespace {

// The FFTW planner is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::size_t next_fast_size(std::size_t n) {
  if (n <= 1) return 1;
  for (std::size_t m = n;; ++m) {
    std::size_t r = m;
    for (std::size_t f : {2u, 3u, 5u, 7u})
      while (r % f == 0) r /= f;
    if (r == 1) return m;
  }
}

template <typename T>
FftBuffer<T>::FftBuffer(std::size_t n) : size_(n) {
  data_ = static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n)));
  if (data_ == nullptr) fail(ErrorCategory::numeric, "FFT buffer allocation failed");
  zero();
}

template <typename T>
FftBuffer<T>::~FftBuffer() {
  if (data_ != nullptr) fftw_free(data_);
}

template <typename T>
void FftBuffer<T>::zero() {
  std::memset(static_cast<void*>(data_), 0, sizeof(T) * size_);
}

template class FftBuffer<double>;
template class FftBuffer<std::complex<double>>;

RealFft::RealFft(std::vector<int> dims) : dims_(std::move(dims)) {
  require(!dims_.empty(), ErrorCategory::shape, "RealFft: empty dimension list");
  real_size_ = 1;
  for (int m : dims_) {
    require(m > 0, ErrorCategory::shape, "RealFft: dimensions must be positive");
    real_size_ *= static_cast<std::size_t>(m);
  }
  complex_size_ = real_size_ / static_cast<std::size_t>(dims_[0]) *
                  (static_cast<std::size_t>(dims_[0]) / 2 + 1);

  // FFTW is row-major: its last dimension is our axis 0.
  std::vector<int> n(dims_.rbegin(), dims_.rend());
  FftBuffer<double> real(real_size_);
  FftBuffer<std::complex<double>> cplx(complex_size_);
  auto* c = reinterpret_cast<fftw_complex*>(cplx.data());

  std::lock_guard<std::mutex> lock(planner_mutex());
  forward_plan_ = fftw_plan_dft_r2c(static_cast<int>(n.size()), n.data(), real.data(), c,
                                    FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  inverse_plan_ = fftw_plan_dft_c2r(static_cast<int>(n.size()), n.data(), c, real.data(),
                                    FFTW_ESTIMATE);
  if (forward_plan_ == nullptr || inverse_plan_ == nullptr)
    fail(ErrorCategory::numeric, "FFTW planning failed");
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

void RealFft::forward(double* in, std::complex<double>* out) const {
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), in,
                       reinterpret_cast<fftw_complex*>(out));
}

void RealFft::inverse(std::complex<double>* in, double* out) const {
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(in),
                       out);
}

}  // namespace gpscore
