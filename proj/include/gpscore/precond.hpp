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

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "gpscore/operators.hpp"

namespace gpscore {

/// Symmetric positive definite action approximating K^{-1}.
class Preconditioner {
 public:
  virtual ~Preconditioner() = default;
  virtual Eigen::Index size() const = 0;
  virtual void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const = 0;
};

class IdentityPreconditioner final : public Preconditioner {
 public:
  explicit IdentityPreconditioner(Eigen::Index n) : n_(n) {}
  Eigen::Index size() const override { return n_; }
  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const override { y = x; }

 private:
  Eigen::Index n_;
};

class DensePreconditioner final : public Preconditioner {
 public:
  explicit DensePreconditioner(Eigen::MatrixXd m);
  Eigen::Index size() const override { return m_.rows(); }
  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const override;

 private:
  Eigen::MatrixXd m_;
};

/// Banded approximate inverse Cholesky factor: in the given order, row i of
/// L holds -b / s on its `depth` predecessors and 1 / s on the diagonal,
/// where b are the conditional-mean coefficients and s the conditional sd.
/// M = L^T L.
class BandedInverseCholesky final : public Preconditioner {
 public:
  using CovEntry = std::function<double(Eigen::Index, Eigen::Index)>;

  /// `order[r]` is the original index placed at position r.
  BandedInverseCholesky(const CovEntry& cov, std::vector<Eigen::Index> order, int depth);

  Eigen::Index size() const override { return static_cast<Eigen::Index>(order_.size()); }
  int depth() const { return depth_; }
  void apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const override;

  /// L in the permuted order (dense; small problems only).
  Eigen::MatrixXd factor() const;
  /// Coefficients of row r on positions r - k, k = 1..; diagonal excluded.
  const Eigen::VectorXd& row_coefficients(Eigen::Index r) const { return coef_[static_cast<std::size_t>(r)]; }
  double row_diagonal(Eigen::Index r) const { return diag_[static_cast<std::size_t>(r)]; }

 private:
  int depth_;
  std::vector<Eigen::Index> order_;
  std::vector<Eigen::VectorXd> coef_;  // entries of L at (r, r - w .. r - 1)
  std::vector<double> diag_;
};

/// Factor for an operator's covariance in the operator's own index order.
BandedInverseCholesky build_banded_inverse_cholesky(const CovOperator& op, int depth);
BandedInverseCholesky build_banded_inverse_cholesky(const CovOperator& op,
                                                    std::vector<Eigen::Index> order, int depth);

}  // namespace gpscore
