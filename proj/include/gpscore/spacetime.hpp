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

// Latitude band observed once per day at local noon. Every latitude carries
// one sequence indexed by k: longitude k * lon_step and absolute time
// k / steps_per_day. Covariances depend on k only through differences, so
// the full covariance is block circulant with one block per latitude pair.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gpscore/fft.hpp"
#include "gpscore/grid.hpp"
#include "gpscore/kernels.hpp"
#include "gpscore/operators.hpp"

namespace gpscore {

class SpaceTimeLayout {
 public:
  /// `mask` is indexed by k * L + a (a = latitude index, south to north).
  SpaceTimeLayout(std::vector<double> latitudes, int steps_per_day, int num_steps,
                  std::vector<char> mask);

  std::size_t num_latitudes() const { return latitudes_.size(); }
  const std::vector<double>& latitudes() const { return latitudes_; }
  int steps_per_day() const { return steps_per_day_; }
  int num_steps() const { return num_steps_; }
  double lon_step() const { return 360.0 / steps_per_day_; }

  std::size_t num_observed() const { return observed_.size(); }
  /// Observed points ordered by time, then latitude south to north.
  std::size_t step_of(std::size_t i) const { return observed_[i] / latitudes_.size(); }
  std::size_t latitude_of(std::size_t i) const { return observed_[i] % latitudes_.size(); }
  double longitude(std::size_t i) const { return lon_step() * static_cast<double>(step_of(i)); }
  double time(std::size_t i) const {
    return static_cast<double>(step_of(i)) / steps_per_day_;
  }

 private:
  std::vector<double> latitudes_;
  int steps_per_day_;
  int num_steps_;
  std::vector<char> mask_;
  std::vector<std::size_t> observed_;  // k * L + a
};

/// Observations in longitudes [0, lon_window) on each of `days` days.
SpaceTimeLayout band_layout(std::vector<double> latitudes, int lon_window, int days,
                            int steps_per_day = 360);

/// Per-day zigzag: within each day, latitude stripes of width floor(sqrt(N))
/// are traversed in alternating longitude direction and cut into runs of N.
/// Blocks never span two days; each day's remainder is left over.
BlockAssignment spacetime_blocking(const SpaceTimeLayout& layout, std::size_t N);

/// Covariance (and partials when grad is non-empty) between latitude a at
/// step k + d and latitude b at step k.
double spacetime_lag_cov(const KernelModel& model, const SpaceTimeLayout& layout, std::size_t a,
                         std::size_t b, long d, std::span<double> grad);

class SpaceTimeOperator final : public CovOperator {
 public:
  SpaceTimeOperator(const KernelModel& model, const SpaceTimeLayout& layout);

  Eigen::Index size() const override { return static_cast<Eigen::Index>(lat_.size()); }
  std::size_t num_params() const override { return num_params_; }
  Backend backend() const override { return Backend::block_circulant; }
  void apply(Component which, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const override;
  std::vector<Eigen::MatrixXd> apply_all(const Eigen::MatrixXd& x) const override;
  double entry(Component which, Eigen::Index i, Eigen::Index j) const override;

  std::size_t embedding_size() const { return period_; }

 private:
  void transform_apply(const Eigen::MatrixXd& x, std::span<const std::size_t> slots,
                       std::vector<Eigen::MatrixXd>& out) const;
  std::size_t pair_index(std::size_t a, std::size_t b) const;

  KernelModel model_;
  std::size_t num_params_;
  std::size_t num_lat_;
  std::size_t period_;
  std::vector<std::size_t> lat_;
  std::vector<std::size_t> step_;
  std::vector<double> latitudes_;
  int steps_per_day_;
  std::unique_ptr<RealFft> fft_;
  // slot -> pair (a <= b) -> half spectrum of c_ab
  std::vector<std::vector<std::vector<std::complex<double>>>> spectra_;
};

std::unique_ptr<DenseOperator> build_dense_spacetime_operator(const KernelModel& model,
                                                              const SpaceTimeLayout& layout);

}  // namespace gpscore
