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

// Occluded regular grids, discrete Laplacian filtering and zigzag blocking.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gpscore {

struct DiscOcclusion {
  std::vector<double> center;
  double radius = 0.0;

  bool operator==(const DiscOcclusion&) const = default;
};

/// Regular lattice with spacing per axis and an availability mask. Axis 0
/// (x) varies fastest in the full-grid linear index.
class OccludedGrid {
 public:
  OccludedGrid(std::vector<int> dims, std::vector<double> spacing, std::vector<char> mask,
               std::optional<DiscOcclusion> occlusion = std::nullopt);

  std::size_t dim() const { return dims_.size(); }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<double>& spacing() const { return spacing_; }
  const std::optional<DiscOcclusion>& occlusion() const { return occlusion_; }

  std::size_t full_size() const { return mask_.size(); }
  std::size_t num_observed() const { return observed_.size(); }
  bool available(std::size_t full_index) const { return mask_[full_index] != 0; }

  /// Full-grid index of the k-th observed point.
  std::size_t full_index(std::size_t observed_index) const { return observed_[observed_index]; }
  /// Observed index of a full-grid point, or -1 when it is masked out.
  long observed_index(std::size_t full_index) const { return full_to_observed_[full_index]; }

  std::vector<int> coords(std::size_t full_index) const;
  std::size_t linear_index(const std::vector<int>& coords) const;
  bool in_bounds(const std::vector<int>& coords) const;
  std::vector<double> position(std::size_t full_index) const;

 private:
  std::vector<int> dims_;
  std::vector<double> spacing_;
  std::vector<char> mask_;
  std::optional<DiscOcclusion> occlusion_;
  std::vector<std::size_t> observed_;
  std::vector<long> full_to_observed_;
};

/// Spacing that places `points` nodes on [0, extent] with both ends included.
double spacing_for_extent(double extent, int points);

/// Grid with origin 0; points whose distance to `center` is < `radius` are
/// masked. Throws a geometry error when nothing is left.
OccludedGrid build_disc_occluded_grid(const std::vector<int>& dims, double spacing,
                                      const std::vector<double>& center, double radius);

/// Unoccluded grid.
OccludedGrid build_full_grid(const std::vector<int>& dims, double spacing);

/// Result of planning tau applications of the discrete Laplacian. Only points
/// whose whole tau-step neighbourhood is observed are retained.
struct FilterPlan {
  int tau = 0;
  std::vector<std::size_t> retained;  // full-grid indices, ascending
  std::vector<long> full_to_filtered;  // -1 when not retained

  std::size_t size() const { return retained.size(); }
};

FilterPlan build_filter_plan(const OccludedGrid& grid, int tau);

/// tau-fold discrete Laplacian of an observed-point field, evaluated at the
/// retained points.
Eigen::VectorXd apply_laplacian(const OccludedGrid& grid, const FilterPlan& plan,
                                const Eigen::VectorXd& field);

/// Explicit n_f x n matrix of apply_laplacian.
Eigen::SparseMatrix<double> filter_matrix(const OccludedGrid& grid, const FilterPlan& plan);

/// round((alpha + d) / 4), raised to ceil(alpha / 2) when that is needed for
/// the filtered power-law covariance to be defined.
int choose_tau(double alpha, std::size_t d);

/// Weights of the (2 tau)-fold Laplacian stencil on integer offsets; used to
/// filter stationary kernels directly.
std::map<std::vector<int>, double> laplacian_power_stencil(std::size_t d, int power);

struct BlockAssignment {
  std::size_t block_size = 1;                 // N
  std::vector<long> block_of;                 // per filtered index; -1 = leftover
  std::vector<std::vector<std::size_t>> blocks;  // filtered indices, zigzag order
  std::vector<std::size_t> leftover;
  int stripe_width = 1;

  std::size_t num_blocks() const { return blocks.size(); }
  std::size_t size() const { return block_of.size(); }
};

/// Horizontal stripes of width floor(sqrt(N)) (some one wider), bottom to top;
/// the first stripe is ordered by (x, y), the next by (-x, y) and so on.
/// Consecutive runs of N points form blocks. d = 1 grids are ordered by x.
BlockAssignment zigzag_blocking(const OccludedGrid& grid, const FilterPlan& plan, std::size_t N);

/// Blocks of N consecutive points in a caller supplied order.
BlockAssignment sequential_blocking(std::size_t n, std::size_t N);

/// Key-value description of a grid and filter used in run reports.
std::string describe_grid(const OccludedGrid& grid, const FilterPlan& plan);

}  // namespace gpscore
