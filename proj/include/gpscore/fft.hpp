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

#pragma once

// Thin RAII layer over FFTW real-to-complex transforms. Plans are created
// once; execution is reentrant as long as every call supplies its own
// buffers (allocated with FftBuffer so alignment matches the plan).

#include <complex>
#include <cstddef>
#include <vector>

namespace gpscore {

/// Smallest 2^a 3^b 5^c 7^d that is >= n.
std::size_t next_fast_size(std::size_t n);

template <typename T>
class FftBuffer {
 public:
  explicit FftBuffer(std::size_t n);
  ~FftBuffer();
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;
  FftBuffer(FftBuffer&& other) noexcept : data_(other.data_), size_(other.size_) {
    other.data_ = nullptr;
    other.size_ = 0;
  }

  T* data() { return data_; }
  const T* data() const { return data_; }
  std::size_t size() const { return size_; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  void zero();

 private:
  T* data_ = nullptr;
  std::size_t size_ = 0;
};

extern template class FftBuffer<double>;
extern template class FftBuffer<std::complex<double>>;

/// Multi-dimensional real transform over an array whose axis 0 varies
/// fastest. The complex half-spectrum halves axis 0.
class RealFft {
 public:
  explicit RealFft(std::vector<int> dims);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  const std::vector<int>& dims() const { return dims_; }
  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }

  /// Unnormalized forward transform; `in` is preserved.
  void forward(double* in, std::complex<double>* out) const;
  /// Unnormalized inverse transform (scaled by real_size()); `in` is destroyed.
  void inverse(std::complex<double>* in, double* out) const;

 private:
  std::vector<int> dims_;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

}  // namespace gpscore
