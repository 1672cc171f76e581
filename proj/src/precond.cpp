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

#include "gpscore/precond.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "gpscore/error.hpp"

namespace gpscore {

DensePreconditioner::DensePreconditioner(Eigen::MatrixXd m) : m_(std::move(m)) {
  require(m_.rows() == m_.cols(), ErrorCategory::shape, "preconditioner must be square");
}

void DensePreconditioner::apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const {
  y.noalias() = m_ * x;
}

BandedInverseCholesky::BandedInverseCholesky(const CovEntry& cov, std::vector<Eigen::Index> order,
                                             int depth)
    : depth_(depth), order_(std::move(order)) {
  require(depth_ >= 0, ErrorCategory::config, "conditioning depth must be nonnegative");
  const auto n = static_cast<Eigen::Index>(order_.size());
  coef_.resize(order_.size());
  diag_.resize(order_.size());
  Eigen::MatrixXd local;
  Eigen::VectorXd rhs;
  for (Eigen::Index r = 0; r < n; ++r) {
    const Eigen::Index w = std::min<Eigen::Index>(depth_, r);
    const Eigen::Index i = order_[static_cast<std::size_t>(r)];
    const double kii = cov(i, i);
    double cond_var = kii;
    Eigen::VectorXd b;
    if (w > 0) {
      local.resize(w, w);
      rhs.resize(w);
      for (Eigen::Index q = 0; q < w; ++q) {
        const Eigen::Index jq = order_[static_cast<std::size_t>(r - w + q)];
        rhs(q) = cov(jq, i);
        for (Eigen::Index s = 0; s <= q; ++s) {
          const Eigen::Index js = order_[static_cast<std::size_t>(r - w + s)];
          local(q, s) = local(s, q) = cov(jq, js);
        }
      }
      Eigen::LLT<Eigen::MatrixXd> llt(local);
      if (llt.info() != Eigen::Success)
        fail(ErrorCategory::numeric,
             "banded inverse Cholesky: singular local covariance for observation " +
                 std::to_string(i) + " and its predecessors at positions " +
                 std::to_string(r - w) + ".." + std::to_string(r - 1));
      b = llt.solve(rhs);
      cond_var = kii - rhs.dot(b);
    }
    if (!(cond_var > 0.0) || !std::isfinite(cond_var))
      fail(ErrorCategory::numeric,
           "banded inverse Cholesky: nonpositive conditional variance for observation " +
               std::to_string(i) + " (position " + std::to_string(r) + ")");
    const double sd = std::sqrt(cond_var);
    diag_[static_cast<std::size_t>(r)] = 1.0 / sd;
    coef_[static_cast<std::size_t>(r)] = w > 0 ? Eigen::VectorXd(-b / sd) : Eigen::VectorXd();
  }
}

void BandedInverseCholesky::apply(const Eigen::MatrixXd& x, Eigen::MatrixXd& y) const {
  const auto n = size();
  require(x.rows() == n, ErrorCategory::shape, "preconditioner input has the wrong length");
  Eigen::MatrixXd t(n, x.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& c = coef_[static_cast<std::size_t>(r)];
    Eigen::RowVectorXd row = diag_[static_cast<std::size_t>(r)] * x.row(order_[static_cast<std::size_t>(r)]);
    for (Eigen::Index q = 0; q < c.size(); ++q)
      row += c(q) * x.row(order_[static_cast<std::size_t>(r - c.size() + q)]);
    t.row(r) = row;
  }
  y.setZero(n, x.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& c = coef_[static_cast<std::size_t>(r)];
    y.row(order_[static_cast<std::size_t>(r)]) += diag_[static_cast<std::size_t>(r)] * t.row(r);
    for (Eigen::Index q = 0; q < c.size(); ++q)
      y.row(order_[static_cast<std::size_t>(r - c.size() + q)]) += c(q) * t.row(r);
  }
}

Eigen::MatrixXd BandedInverseCholesky::factor() const {
  const auto n = size();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& c = coef_[static_cast<std::size_t>(r)];
    l(r, r) = diag_[static_cast<std::size_t>(r)];
    for (Eigen::Index q = 0; q < c.size(); ++q) l(r, r - c.size() + q) = c(q);
  }
  return l;
}

BandedInverseCholesky build_banded_inverse_cholesky(const CovOperator& op, int depth) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(op.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  return build_banded_inverse_cholesky(op, std::move(order), depth);
}

BandedInverseCholesky build_banded_inverse_cholesky(const CovOperator& op,
                                                    std::vector<Eigen::Index> order, int depth) {
  require(static_cast<Eigen::Index>(order.size()) == op.size(), ErrorCategory::shape,
          "ordering length does not match the operator");
  return BandedInverseCholesky(
      [&op](Eigen::Index i, Eigen::Index j) { return op.entry(Component::cov(), i, j); },
      std::move(order), depth);
}

}  // namespace gpscore
