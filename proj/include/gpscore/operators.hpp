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

// Matrix-free symmetric covariance operators K(theta) and dK/dtheta_i.

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gpscore/fft.hpp"
#include "gpscore/grid.hpp"
#include "gpscore/kernels.hpp"

namespace gpscore {

/// Selects K itself or one of its parameter derivatives.
class Component {
 public:
  static constexpr Component cov() { return Component(0); }
  static constexpr Component partial(std::size_t i) { return Component(i + 1); }

  bool is_cov() const { return slot_ == 0; }
  std::size_t param() const { return slot_ - 1; }
  /// 0 for K, i + 1 for K_i.
  std::size_t slot() const { return slot_; }

 private:
  constexpr explicit Component(std::size_t slot) : slot_(slot) {}
  std::size_t slot_;
};

enum class Backend { dense, circulant, block_circulant };

const char* to_string(Backend backend);
Backend parse_backend(const std::string& name);

class CovOperator {
 public:
  virtual ~CovOperator() = default;

  virtual Eigen::Index size() const = 0;
  virtual std::size_t num_params() const = 0;
  virtual Backend backend() const = 0;

  /// y = A x for every column of x.
  virtual void apply(Component which, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const = 0;
  /// K x, K_1 x, ..., K_p x.
  virtual std::vector<Eigen::MatrixXd> apply_all(const Eigen::MatrixXd& x) const;
  virtual double entry(Component which, Eigen::Index i, Eigen::Index j) const = 0;

  /// apply() with shape and finiteness checks.
  Eigen::MatrixXd matvec(Component which, const Eigen::MatrixXd& x) const;
  /// Explicit matrix; intended for small operators.
  Eigen::MatrixXd to_dense(Component which) const;
};

/// Explicit matrices. Also the oracle backend for the FFT operators.
class DenseOperator final : public CovOperator {
 public:
  DenseOperator(Eigen::MatrixXd k, std::vector<Eigen::MatrixXd> partials);

  Eigen::Index size() const override { return k_.rows(); }
  std::size_t num_params() const override { return partials_.size(); }
  Backend backend() const override { return Backend::dense; }
  void apply(Component which, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const override;
  double entry(Component which, Eigen::Index i, Eigen::Index j) const override;

  const Eigen::MatrixXd& matrix(Component which) const;

 private:
  Eigen::MatrixXd k_;
  std::vector<Eigen::MatrixXd> partials_;
};

/// A stationary kernel sampled on integer lattice offsets, optionally after
/// tau applications of the discrete Laplacian to both arguments.
class LatticeKernel {
 public:
  LatticeKernel(KernelModel model, std::vector<double> spacing, int tau);

  const KernelModel& model() const { return model_; }
  std::size_t dim() const { return spacing_.size(); }
  std::size_t num_params() const { return model_.num_params(); }
  int tau() const { return tau_; }

  /// Filtered kernel value at an integer offset; partials go into grad
  /// (size num_params()) when it is non-empty.
  double evaluate(std::span<const int> offset, std::span<double> grad) const;

 private:
  KernelModel model_;
  std::vector<double> spacing_;
  int tau_ = 0;
  std::vector<std::pair<std::vector<int>, double>> stencil_;
};

/// Stationary covariance on a subset of lattice points; matvec by circulant
/// embedding and FFT in O(n log n).
class LatticeOperator final : public CovOperator {
 public:
  /// `points` are lattice coordinates inside a box of size `dims`.
  LatticeOperator(const LatticeKernel& kernel, std::vector<int> dims,
                  std::vector<std::vector<int>> points);

  Eigen::Index size() const override { return static_cast<Eigen::Index>(positions_.size()); }
  std::size_t num_params() const override { return num_params_; }
  Backend backend() const override { return Backend::circulant; }
  void apply(Component which, const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const override;
  std::vector<Eigen::MatrixXd> apply_all(const Eigen::MatrixXd& x) const override;
  double entry(Component which, Eigen::Index i, Eigen::Index j) const override;

  const std::vector<int>& embedding_dims() const { return embed_dims_; }

 private:
  void transform_apply(const Eigen::MatrixXd& x, std::span<const std::size_t> slots,
                       std::vector<Eigen::MatrixXd>& out) const;

  std::size_t num_params_;
  std::vector<int> dims_;
  std::vector<int> embed_dims_;
  std::vector<std::vector<int>> points_;
  std::vector<std::size_t> positions_;  // linear index inside the embedding
  std::unique_ptr<RealFft> fft_;
  // Reused transform buffers; a concurrent caller falls back to its own.
  struct Workspace {
    explicit Workspace(const RealFft& fft);
    FftBuffer<double> in;  // zero off the observed positions
    FftBuffer<double> out;
    FftBuffer<std::complex<double>> xhat;
    FftBuffer<std::complex<double>> prod;
  };
  mutable std::mutex workspace_mutex_;
  mutable std::unique_ptr<Workspace> workspace_;
  std::vector<std::vector<std::complex<double>>> spectra_;  // slot -> half spectrum
  std::vector<std::vector<double>> lag_table_;              // slot -> value by lag
  std::vector<int> lag_extent_;                             // 2m - 1 per axis
};

/// Kernel values of all components for every lag in [-(m-1), m-1]^d.
/// Entry of slot s at lag l is table[s][linear index of l + m - 1].
std::vector<std::vector<double>> tabulate_lags(const LatticeKernel& kernel,
                                               const std::vector<int>& dims);

/// Covariance of the filtered process at the retained points of `plan`
/// (tau is taken from the plan).
std::unique_ptr<CovOperator> build_operator(const KernelModel& model, const OccludedGrid& grid,
                                            const FilterPlan& plan, Backend backend);

/// Dense operator from a kernel evaluated between arbitrary sites.
std::unique_ptr<DenseOperator> build_dense_operator(
    const KernelModel& model, const std::vector<std::vector<double>>& sites);

}  // namespace gpscore
