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

#include "gpscore/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gpscore/error.hpp"

namespace gpscore {

OccludedGrid::OccludedGrid(std::vector<int> dims, std::vector<double> spacing,
                           std::vector<char> mask, std::optional<DiscOcclusion> occlusion)
    : dims_(std::move(dims)),
      spacing_(std::move(spacing)),
      mask_(std::move(mask)),
      occlusion_(std::move(occlusion)) {
  require(!dims_.empty(), ErrorCategory::geometry, "grid needs at least one axis");
  require(spacing_.size() == dims_.size(), ErrorCategory::shape,
          "grid spacing must have one entry per axis");
  std::size_t total = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    require(dims_[k] > 0, ErrorCategory::geometry, "grid dimensions must be positive");
    require(spacing_[k] > 0.0, ErrorCategory::geometry, "grid spacing must be positive");
    total *= static_cast<std::size_t>(dims_[k]);
  }
  require(mask_.size() == total, ErrorCategory::shape, "grid mask has the wrong size");
  full_to_observed_.assign(total, -1);
  for (std::size_t i = 0; i < total; ++i) {
    if (mask_[i]) {
      full_to_observed_[i] = static_cast<long>(observed_.size());
      observed_.push_back(i);
    }
  }
  require(!observed_.empty(), ErrorCategory::geometry, "grid has no observed points");
}

std::vector<int> OccludedGrid::coords(std::size_t full_index) const {
  std::vector<int> c(dims_.size());
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    c[k] = static_cast<int>(full_index % static_cast<std::size_t>(dims_[k]));
    full_index /= static_cast<std::size_t>(dims_[k]);
  }
  return c;
}

std::size_t OccludedGrid::linear_index(const std::vector<int>& c) const {
  std::size_t index = 0;
  for (std::size_t k = dims_.size(); k-- > 0;)
    index = index * static_cast<std::size_t>(dims_[k]) + static_cast<std::size_t>(c[k]);
  return index;
}

bool OccludedGrid::in_bounds(const std::vector<int>& c) const {
  for (std::size_t k = 0; k < dims_.size(); ++k)
    if (c[k] < 0 || c[k] >= dims_[k]) return false;
  return true;
}

std::vector<double> OccludedGrid::position(std::size_t full_index) const {
  const auto c = coords(full_index);
  std::vector<double> x(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) x[k] = spacing_[k] * c[k];
  return x;
}

double spacing_for_extent(double extent, int points) {
  require(points >= 2 && extent > 0.0, ErrorCategory::geometry,
          "spacing_for_extent: need at least two points and a positive extent");
  return extent / (points - 1);
}

OccludedGrid build_disc_occluded_grid(const std::vector<int>& dims, double spacing,
                                      const std::vector<double>& center, double radius) {
  require(center.size() == dims.size(), ErrorCategory::shape,
          "disc center must have one coordinate per axis");
  require(radius >= 0.0, ErrorCategory::geometry, "disc radius must be nonnegative");
  std::size_t total = 1;
  for (int m : dims) {
    require(m > 0, ErrorCategory::geometry, "grid dimensions must be positive");
    total *= static_cast<std::size_t>(m);
  }
  std::vector<char> mask(total, 1);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    double d2 = 0.0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const double x = spacing * static_cast<double>(rest % static_cast<std::size_t>(dims[k]));
      rest /= static_cast<std::size_t>(dims[k]);
      d2 += (x - center[k]) * (x - center[k]);
    }
    if (std::sqrt(d2) < radius) mask[i] = 0;
  }
  require(std::any_of(mask.begin(), mask.end(), [](char c) { return c != 0; }),
          ErrorCategory::geometry, "occlusion removes every grid point");
  return OccludedGrid(dims, std::vector<double>(dims.size(), spacing), std::move(mask),
                      DiscOcclusion{center, radius});
}

OccludedGrid build_full_grid(const std::vector<int>& dims, double spacing) {
  std::size_t total = 1;
  for (int m : dims) total *= static_cast<std::size_t>(std::max(m, 0));
  return OccludedGrid(dims, std::vector<double>(dims.size(), spacing), std::vector<char>(total, 1));
}

FilterPlan build_filter_plan(const OccludedGrid& grid, int tau) {
  require(tau >= 0, ErrorCategory::config, "filter: tau must be nonnegative");
  const std::size_t total = grid.full_size();
  const std::size_t d = grid.dim();
  std::vector<char> avail(total);
  for (std::size_t i = 0; i < total; ++i) avail[i] = grid.available(i) ? 1 : 0;

  std::vector<std::size_t> stride(d, 1);
  for (std::size_t k = 1; k < d; ++k) stride[k] = stride[k - 1] * grid.dims()[k - 1];

  for (int stage = 0; stage < tau; ++stage) {
    std::vector<char> next(total, 0);
    for (std::size_t i = 0; i < total; ++i) {
      if (!avail[i]) continue;
      const auto c = grid.coords(i);
      bool ok = true;
      for (std::size_t k = 0; k < d && ok; ++k) {
        if (c[k] == 0 || c[k] == grid.dims()[k] - 1) {
          ok = false;
          break;
        }
        ok = avail[i - stride[k]] && avail[i + stride[k]];
      }
      next[i] = ok ? 1 : 0;
    }
    avail.swap(next);
  }

  FilterPlan plan;
  plan.tau = tau;
  plan.full_to_filtered.assign(total, -1);
  for (std::size_t i = 0; i < total; ++i) {
    if (avail[i]) {
      plan.full_to_filtered[i] = static_cast<long>(plan.retained.size());
      plan.retained.push_back(i);
    }
  }
  require(!plan.retained.empty(), ErrorCategory::geometry,
          "filtering leaves no points; use a smaller tau or a larger grid");
  return plan;
}

std::map<std::vector<int>, double> laplacian_power_stencil(std::size_t d, int power) {
  std::map<std::vector<int>, double> stencil{{std::vector<int>(d, 0), 1.0}};
  for (int step = 0; step < power; ++step) {
    std::map<std::vector<int>, double> next;
    for (const auto& [offset, w] : stencil) {
      next[offset] += -2.0 * static_cast<double>(d) * w;
      for (std::size_t k = 0; k < d; ++k) {
        auto lo = offset;
        auto hi = offset;
        --lo[k];
        ++hi[k];
        next[lo] += w;
        next[hi] += w;
      }
    }
    stencil.swap(next);
  }
  return stencil;
}

Eigen::VectorXd apply_laplacian(const OccludedGrid& grid, const FilterPlan& plan,
                                const Eigen::VectorXd& field) {
  require(static_cast<std::size_t>(field.size()) == grid.num_observed(), ErrorCategory::shape,
          "apply_laplacian: field length differs from the number of observed points");
  const std::size_t total = grid.full_size();
  const std::size_t d = grid.dim();
  std::vector<std::size_t> stride(d, 1);
  for (std::size_t k = 1; k < d; ++k) stride[k] = stride[k - 1] * grid.dims()[k - 1];

  std::vector<double> cur(total, 0.0);
  for (std::size_t k = 0; k < grid.num_observed(); ++k) cur[grid.full_index(k)] = field(k);

  std::vector<double> next(total);
  for (int stage = 0; stage < plan.tau; ++stage) {
    for (std::size_t i = 0; i < total; ++i) {
      const auto c = grid.coords(i);
      double acc = -2.0 * static_cast<double>(d) * cur[i];
      for (std::size_t k = 0; k < d; ++k) {
        if (c[k] > 0) acc += cur[i - stride[k]];
        if (c[k] + 1 < grid.dims()[k]) acc += cur[i + stride[k]];
      }
      next[i] = acc;
    }
    cur.swap(next);
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(plan.size()));
  for (std::size_t r = 0; r < plan.size(); ++r) out(static_cast<Eigen::Index>(r)) = cur[plan.retained[r]];
  return out;
}

Eigen::SparseMatrix<double> filter_matrix(const OccludedGrid& grid, const FilterPlan& plan) {
  const auto stencil = laplacian_power_stencil(grid.dim(), plan.tau);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(plan.size() * stencil.size());
  for (std::size_t r = 0; r < plan.size(); ++r) {
    const auto base = grid.coords(plan.retained[r]);
    for (const auto& [offset, w] : stencil) {
      if (w == 0.0) continue;
      auto c = base;
      for (std::size_t k = 0; k < c.size(); ++k) c[k] += offset[k];
      require(grid.in_bounds(c), ErrorCategory::geometry, "filter stencil leaves the grid");
      const long col = grid.observed_index(grid.linear_index(c));
      require(col >= 0, ErrorCategory::geometry, "filter stencil touches an occluded point");
      triplets.emplace_back(static_cast<int>(r), static_cast<int>(col), w);
    }
  }
  Eigen::SparseMatrix<double> f(static_cast<Eigen::Index>(plan.size()),
                                static_cast<Eigen::Index>(grid.num_observed()));
  f.setFromTriplets(triplets.begin(), triplets.end());
  return f;
}

int choose_tau(double alpha, std::size_t d) {
  require(alpha > 0.0, ErrorCategory::domain, "choose_tau: alpha must be positive");
  int tau = static_cast<int>(std::lround((alpha + static_cast<double>(d)) / 4.0));
  if (tau < alpha / 2.0) tau = static_cast<int>(std::ceil(alpha / 2.0));
  return tau;
}

namespace {

BlockAssignment assign_in_order(const std::vector<std::size_t>& order, std::size_t n,
                                std::size_t N) {
  BlockAssignment a;
  a.block_size = N;
  a.block_of.assign(n, -1);
  const std::size_t full_blocks = N <= order.size() ? order.size() / N : 0;
  for (std::size_t b = 0; b < full_blocks; ++b) {
    std::vector<std::size_t> members(order.begin() + static_cast<long>(b * N),
                                     order.begin() + static_cast<long>((b + 1) * N));
    for (std::size_t idx : members) a.block_of[idx] = static_cast<long>(b);
    a.blocks.push_back(std::move(members));
  }
  a.leftover.assign(order.begin() + static_cast<long>(full_blocks * N), order.end());
  return a;
}

}  // namespace

BlockAssignment zigzag_blocking(const OccludedGrid& grid, const FilterPlan& plan, std::size_t N) {
  require(N >= 1, ErrorCategory::design, "zigzag_blocking: block size must be positive");
  require(grid.dim() <= 2, ErrorCategory::geometry, "zigzag_blocking supports 1D and 2D grids");
  const std::size_t n = plan.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  int width = 1;
  if (grid.dim() == 1) {
    // retained indices are already ascending in x
  } else {
    width = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(N)))));
    const int rows = grid.dims()[1];
    const int nstripes = std::max(1, rows / width);
    std::vector<int> stripe_of_row(static_cast<std::size_t>(rows));
    int row = 0;
    for (int s = 0; s < nstripes; ++s) {
      const int w = rows / nstripes + (s < rows % nstripes ? 1 : 0);
      for (int k = 0; k < w; ++k) stripe_of_row[static_cast<std::size_t>(row++)] = s;
    }
    std::vector<std::array<int, 3>> keys(n);  // stripe, signed x, y
    for (std::size_t f = 0; f < n; ++f) {
      const auto c = grid.coords(plan.retained[f]);
      const int s = stripe_of_row[static_cast<std::size_t>(c[1])];
      keys[f] = {s, (s % 2 == 0) ? c[0] : -c[0], c[1]};
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  }
  BlockAssignment a = assign_in_order(order, n, N);
  a.stripe_width = width;
  return a;
}

BlockAssignment sequential_blocking(std::size_t n, std::size_t N) {
  require(N >= 1, ErrorCategory::design, "sequential_blocking: block size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  return assign_in_order(order, n, N);
}

std::string describe_grid(const OccludedGrid& grid, const FilterPlan& plan) {
  std::ostringstream out;
  out << "grid.dims =";
  for (int m : grid.dims()) out << ' ' << m;
  out << "\ngrid.spacing =";
  for (double s : grid.spacing()) out << ' ' << s;
  out << "\ngrid.observed = " << grid.num_observed() << '\n';
  if (grid.occlusion()) {
    out << "grid.occlusion = disc";
    for (double c : grid.occlusion()->center) out << ' ' << c;
    out << ' ' << grid.occlusion()->radius << '\n';
  } else {
    out << "grid.occlusion = none\n";
  }
  out << "filter.tau = " << plan.tau << "\nfilter.size = " << plan.size() << '\n';
  return out.str();
}

}  // namespace gpscore
