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

// Gaussian process simulation by circulant embedding. Power-law models are
// simulated through their filtered (positive definite) lattice kernel.

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "gpscore/fft.hpp"
#include "gpscore/grid.hpp"
#include "gpscore/operators.hpp"
#include "gpscore/spacetime.hpp"

namespace gpscore {

/// Negative eigenvalues above this fraction of the largest are clipped.
inline constexpr double kEmbeddingTolerance = 1e-8;

class LatticeSampler {
 public:
  LatticeSampler(const LatticeKernel& kernel, std::vector<int> dims,
                 std::vector<std::vector<int>> points);

  Eigen::VectorXd draw(std::uint64_t seed) const;
  const std::vector<int>& embedding_dims() const { return embed_dims_; }
  /// Most negative eigenvalue relative to the largest, before clipping.
  double min_relative_eigenvalue() const { return min_relative_; }

 private:
  std::vector<int> embed_dims_;
  std::vector<std::size_t> positions_;
  std::unique_ptr<RealFft> fft_;
  std::vector<double> sqrt_spectrum_;
  double min_relative_ = 0.0;
};

class SpaceTimeSampler {
 public:
  SpaceTimeSampler(const KernelModel& model, const SpaceTimeLayout& layout);

  Eigen::VectorXd draw(std::uint64_t seed) const;
  std::size_t embedding_size() const { return period_; }
  double min_relative_eigenvalue() const { return min_relative_; }

 private:
  std::size_t num_lat_ = 0;
  std::size_t period_ = 0;
  std::vector<std::size_t> lat_;
  std::vector<std::size_t> step_;
  std::unique_ptr<RealFft> fft_;
  std::vector<Eigen::MatrixXcd> sqrt_blocks_;  // per frequency, L x L
  double min_relative_ = 0.0;
};

/// Draw at the filter plan's retained points: the filtered process when
/// plan.tau > 0 and the raw process when plan.tau == 0.
Eigen::VectorXd simulate_gp(const KernelModel& model, const OccludedGrid& grid,
                            const FilterPlan& plan, std::uint64_t seed);

Eigen::VectorXd simulate_spacetime(const KernelModel& model, const SpaceTimeLayout& layout,
                                   std::uint64_t seed);

}  // namespace gpscore
