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

#include "gpscore/operators.hpp"

#include <array>
#include <cmath>

#include "gpscore/error.hpp"

namespace gpscore {

const char* to_string(Backend backend) {
  switch (backend) {
    case Backend::dense: return "dense";
    case Backend::circulant: return "circulant";
    case Backend::block_circulant: return "block-circulant";
  }
  return "unknown";
}

Backend parse_backend(const std::string& name) {
  if (name == "dense") return Backend::dense;
  if (name == "circulant" || name == "fft") return Backend::circulant;
  if (name == "block-circulant") return Backend::block_circulant;
  fail(ErrorCategory::config, "unknown backend '" + name + "'");
}

// --- CovOperator -----------------------------------------------------------

std::vector<Eigen::MatrixXd> CovOperator::apply_all(const Eigen::MatrixXd& x) const {
  std::vector<Eigen::MatrixXd> out(num_params() + 1);
  apply(Component::cov(), x, out[0]);
  for (std::size_t i = 0; i < num_params(); ++i) apply(Component::partial(i), x, out[i + 1]);
  return out;
}

Eigen::MatrixXd CovOperator::matvec(Component which, const Eigen::MatrixXd& x) const {
  require(x.rows() == size(), ErrorCategory::shape, "matvec: input has the wrong length");
  require(which.is_cov() || which.param() < num_params(), ErrorCategory::shape,
          "matvec: parameter index out of range");
  require(x.allFinite(), ErrorCategory::numeric, "matvec: input contains non-finite values");
  Eigen::MatrixXd y;
  apply(which, x, y);
  return y;
}

Eigen::MatrixXd CovOperator::to_dense(Component which) const {
  const Eigen::Index n = size();
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) m(i, j) = entry(which, i, j);
  return m;
}

// --- DenseOperator ---------------------------------------------------------

DenseOperator::DenseOperator(Eigen::MatrixXd k, std::vector<Eigen::MatrixXd> partials)
    : k_(std::move(k)), partials_(std::move(partials)) {
  require(k_.rows() == k_.cols(), ErrorCategory::shape, "DenseOperator: K must be square");
  for (const auto& p : partials_)
    require(p.rows() == k_.rows() && p.cols() == k_.cols(), ErrorCategory::shape,
            "DenseOperator: derivative matrices must match K");
}

const Eigen::MatrixXd& DenseOperator::matrix(Component which) const {
  return which.is_cov() ? k_ : partials_.at(which.param());
}

void DenseOperator::apply(Component which, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const {
  y.noalias() = matrix(which) * x;
}

double DenseOperator::entry(Component which, Eigen::Index i, Eigen::Index j) const {
  return matrix(which)(i, j);
}

// --- LatticeKernel ---------------------------------------------------------

LatticeKernel::LatticeKernel(KernelModel model, std::vector<double> spacing, int tau)
    : model_(std::move(model)), spacing_(std::move(spacing)), tau_(tau) {
  require(model_.kind() != KernelKind::space_time, ErrorCategory::config,
          "lattice kernels take power-law or Matern models");
  require(model_.lag_dim() == spacing_.size(), ErrorCategory::shape,
          "kernel dimension does not match the grid dimension");
  require(tau_ >= 0, ErrorCategory::config, "tau must be nonnegative");
  if (model_.kind() == KernelKind::power_law) {
    const double alpha = model_.power_law_params().alpha;
    require(alpha < 4.0 * tau_, ErrorCategory::domain,
            "power-law kernel needs alpha < 4 tau for the filtered covariance to exist");
  }
  for (const auto& [offset, w] : laplacian_power_stencil(spacing_.size(), 2 * tau_))
    if (w != 0.0) stencil_.emplace_back(offset, w);
}

double LatticeKernel::evaluate(std::span<const int> offset, std::span<double> grad) const {
  const std::size_t d = spacing_.size();
  const std::size_t p = model_.num_params();
  std::array<double, 8> lag{};
  std::array<double, 8> g{};
  const bool want_grad = !grad.empty();
  if (want_grad) std::fill(grad.begin(), grad.end(), 0.0);
  double value = 0.0;
  for (const auto& [o, w] : stencil_) {
    for (std::size_t k = 0; k < d; ++k) lag[k] = spacing_[k] * (offset[k] + o[k]);
    if (want_grad) {
      value += w * model_.evaluate(std::span<const double>(lag.data(), d), 0.0,
                                   std::span<double>(g.data(), p));
      for (std::size_t i = 0; i < p; ++i) grad[i] += w * g[i];
    } else {
      value += w * model_.value(std::span<const double>(lag.data(), d));
    }
  }
  return value;
}

std::vector<std::vector<double>> tabulate_lags(const LatticeKernel& kernel,
                                               const std::vector<int>& dims) {
  const std::size_t d = dims.size();
  const std::size_t p = kernel.num_params();
  std::size_t total = 1;
  for (int m : dims) total *= static_cast<std::size_t>(2 * m - 1);
  std::vector<std::vector<double>> table(p + 1, std::vector<double>(total));
  std::vector<int> lag(d);
  std::vector<double> grad(p);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t k = 0; k < d; ++k) {
      const auto e = static_cast<std::size_t>(2 * dims[k] - 1);
      lag[k] = static_cast<int>(rest % e) - (dims[k] - 1);
      rest /= e;
    }
    table[0][idx] = kernel.evaluate(lag, grad);
    for (std::size_t i = 0; i < p; ++i) table[i + 1][idx] = grad[i];
  }
  for (const auto& slot : table)
    for (double v : slot)
      require(std::isfinite(v), ErrorCategory::numeric,
              "kernel produced non-finite values on the lattice");
  return table;
}

// --- LatticeOperator -------------------------------------------------------

LatticeOperator::LatticeOperator(const LatticeKernel& kernel, std::vector<int> dims,
                                 std::vector<std::vector<int>> points)
    : num_params_(kernel.num_params()), dims_(std::move(dims)), points_(std::move(points)) {
  const std::size_t d = dims_.size();
  require(d == kernel.dim(), ErrorCategory::shape, "LatticeOperator: dimension mismatch");
  lag_table_ = tabulate_lags(kernel, dims_);
  lag_extent_.resize(d);
  embed_dims_.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    lag_extent_[k] = 2 * dims_[k] - 1;
    embed_dims_[k] = static_cast<int>(next_fast_size(static_cast<std::size_t>(lag_extent_[k])));
  }
  positions_.reserve(points_.size());
  for (const auto& pt : points_) {
    require(pt.size() == d, ErrorCategory::shape, "LatticeOperator: point has wrong dimension");
    std::size_t pos = 0;
    for (std::size_t k = d; k-- > 0;) {
      require(pt[k] >= 0 && pt[k] < dims_[k], ErrorCategory::geometry,
              "LatticeOperator: point outside the lattice box");
      pos = pos * static_cast<std::size_t>(embed_dims_[k]) + static_cast<std::size_t>(pt[k]);
    }
    positions_.push_back(pos);
  }

  fft_ = std::make_unique<RealFft>(embed_dims_);
  FftBuffer<double> embedded(fft_->real_size());
  FftBuffer<std::complex<double>> spectrum(fft_->complex_size());
  spectra_.resize(num_params_ + 1);
  std::vector<int> j(d);
  for (std::size_t slot = 0; slot <= num_params_; ++slot) {
    embedded.zero();
    for (std::size_t idx = 0; idx < fft_->real_size(); ++idx) {
      std::size_t rest = idx;
      std::size_t table_index = 0;
      std::size_t table_stride = 1;
      bool inside = true;
      for (std::size_t k = 0; k < d; ++k) {
        const int m = embed_dims_[k];
        const int jk = static_cast<int>(rest % static_cast<std::size_t>(m));
        rest /= static_cast<std::size_t>(m);
        const int lag = jk <= m / 2 ? jk : jk - m;
        if (std::abs(lag) > dims_[k] - 1) {
          inside = false;
          break;
        }
        table_index += static_cast<std::size_t>(lag + dims_[k] - 1) * table_stride;
        table_stride *= static_cast<std::size_t>(lag_extent_[k]);
      }
      if (inside) embedded[idx] = lag_table_[slot][table_index];
    }
    fft_->forward(embedded.data(), spectrum.data());
    spectra_[slot].assign(spectrum.data(), spectrum.data() + fft_->complex_size());
  }
}

LatticeOperator::Workspace::Workspace(const RealFft& fft)
    : in(fft.real_size()), out(fft.real_size()), xhat(fft.complex_size()), prod(fft.complex_size()) {}

void LatticeOperator::transform_apply(const Eigen::MatrixXd& x,
                                      std::span<const std::size_t> slots,
                                      std::vector<Eigen::MatrixXd>& out) const {
  const Eigen::Index n = size();
  require(x.rows() == n, ErrorCategory::shape, "LatticeOperator: input has the wrong length");
  out.resize(slots.size());
  for (auto& o : out) o.resize(n, x.cols());
  std::unique_lock<std::mutex> lock(workspace_mutex_, std::try_to_lock);
  std::unique_ptr<Workspace> local;
  Workspace* ws = nullptr;
  if (lock.owns_lock()) {
    if (!workspace_) workspace_ = std::make_unique<Workspace>(*fft_);
    ws = workspace_.get();
  } else {
    local = std::make_unique<Workspace>(*fft_);
    ws = local.get();
  }
  const double scale = 1.0 / static_cast<double>(fft_->real_size());
  const std::size_t nc = fft_->complex_size();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) ws->in[positions_[static_cast<std::size_t>(i)]] = x(i, c);
    fft_->forward(ws->in.data(), ws->xhat.data());
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto& spec = spectra_[slots[s]];
      // the inverse transform destroys its input, so keep xhat while other slots remain
      auto* prod = s + 1 == slots.size() ? ws->xhat.data() : ws->prod.data();
      for (std::size_t f = 0; f < nc; ++f) prod[f] = ws->xhat[f] * spec[f];
      fft_->inverse(prod, ws->out.data());
      for (Eigen::Index i = 0; i < n; ++i)
        out[s](i, c) = ws->out[positions_[static_cast<std::size_t>(i)]] * scale;
    }
  }
}

void LatticeOperator::apply(Component which, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const {
  const std::size_t slot = which.slot();
  std::vector<Eigen::MatrixXd> out;
  transform_apply(x, std::span<const std::size_t>(&slot, 1), out);
  y = std::move(out[0]);
}

std::vector<Eigen::MatrixXd> LatticeOperator::apply_all(const Eigen::MatrixXd& x) const {
  std::vector<std::size_t> slots(num_params_ + 1);
  for (std::size_t s = 0; s <= num_params_; ++s) slots[s] = s;
  std::vector<Eigen::MatrixXd> out;
  transform_apply(x, slots, out);
  return out;
}

double LatticeOperator::entry(Component which, Eigen::Index i, Eigen::Index j) const {
  const auto& a = points_[static_cast<std::size_t>(i)];
  const auto& b = points_[static_cast<std::size_t>(j)];
  std::size_t index = 0;
  std::size_t stride = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    index += static_cast<std::size_t>(a[k] - b[k] + dims_[k] - 1) * stride;
    stride *= static_cast<std::size_t>(lag_extent_[k]);
  }
  return lag_table_[which.slot()][index];
}

// --- builders --------------------------------------------------------------

std::unique_ptr<CovOperator> build_operator(const KernelModel& model, const OccludedGrid& grid,
                                            const FilterPlan& plan, Backend backend) {
  LatticeKernel kernel(model, grid.spacing(), plan.tau);
  std::vector<std::vector<int>> points;
  points.reserve(plan.size());
  for (std::size_t f : plan.retained) points.push_back(grid.coords(f));
  switch (backend) {
    case Backend::circulant:
      return std::make_unique<LatticeOperator>(kernel, grid.dims(), std::move(points));
    case Backend::dense: {
      const auto table = tabulate_lags(kernel, grid.dims());
      const auto n = static_cast<Eigen::Index>(points.size());
      const std::size_t d = grid.dim();
      std::vector<Eigen::MatrixXd> mats(table.size(), Eigen::MatrixXd(n, n));
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          std::size_t index = 0;
          std::size_t stride = 1;
          for (std::size_t k = 0; k < d; ++k) {
            const int m = grid.dims()[k];
            index += static_cast<std::size_t>(points[static_cast<std::size_t>(i)][k] -
                                              points[static_cast<std::size_t>(j)][k] + m - 1) *
                     stride;
            stride *= static_cast<std::size_t>(2 * m - 1);
          }
          for (std::size_t s = 0; s < table.size(); ++s) mats[s](i, j) = table[s][index];
        }
      }
      Eigen::MatrixXd k = std::move(mats[0]);
      mats.erase(mats.begin());
      return std::make_unique<DenseOperator>(std::move(k), std::move(mats));
    }
    case Backend::block_circulant:
      fail(ErrorCategory::config,
           "the block-circulant backend needs a space-time grid; use build_spacetime_operator");
  }
  return nullptr;
}

std::unique_ptr<DenseOperator> build_dense_operator(
    const KernelModel& model, const std::vector<std::vector<double>>& sites) {
  require(model.kind() != KernelKind::space_time, ErrorCategory::config,
          "build_dense_operator: use the space-time builder for space-time kernels");
  const auto n = static_cast<Eigen::Index>(sites.size());
  const std::size_t p = model.num_params();
  const std::size_t d = model.lag_dim();
  Eigen::MatrixXd k(n, n);
  std::vector<Eigen::MatrixXd> partials(p, Eigen::MatrixXd(n, n));
  std::vector<double> lag(d), grad(p);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& a = sites[static_cast<std::size_t>(i)];
      const auto& b = sites[static_cast<std::size_t>(j)];
      require(a.size() == d && b.size() == d, ErrorCategory::shape,
              "build_dense_operator: site dimension mismatch");
      for (std::size_t q = 0; q < d; ++q) lag[q] = a[q] - b[q];
      k(i, j) = model.evaluate(lag, 0.0, grad);
      for (std::size_t s = 0; s < p; ++s) partials[s](i, j) = grad[s];
    }
  }
  return std::make_unique<DenseOperator>(std::move(k), std::move(partials));
}

}  // namespace gpscore
