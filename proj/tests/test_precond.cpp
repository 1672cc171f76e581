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

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gpscore/error.hpp"
#include "gpscore/linsolve.hpp"
#include "gpscore/operators.hpp"
#include "gpscore/precond.hpp"
#include "gpscore/spacetime.hpp"
#include "generators.hpp"

using namespace gpscore;

TEST(BandedInverseCholesky, FullDepthIsTheExactInverse) {
  testgen::Gen gen(51);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = gen.integer(3, 30);
    const Eigen::MatrixXd k = gen.spd(n, 0.05);
    const DenseOperator op(k, {});
    const auto pre = build_banded_inverse_cholesky(op, static_cast<int>(n));
    Eigen::MatrixXd y;
    pre.apply(Eigen::MatrixXd::Identity(n, n), y);
    EXPECT_LT((y - k.inverse()).cwiseAbs().maxCoeff() / k.inverse().cwiseAbs().maxCoeff(), 1e-9);
    // L K L' = I
    const Eigen::MatrixXd l = pre.factor();
    EXPECT_LT((l * k * l.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(BandedInverseCholesky, FullDepthGivesOneIterationCg) {
  testgen::Gen gen(52);
  const Eigen::MatrixXd k = gen.spd(40, 0.01);
  const DenseOperator op(k, {});
  const auto pre = build_banded_inverse_cholesky(op, 40);
  SolveOptions opts;
  opts.preconditioner = &pre;
  const auto res = cg_solve(op, gen.vector(40), opts);
  EXPECT_EQ(res.report.iterations, 1);
}

TEST(BandedInverseCholesky, RowsUseOnlyPredecessorsInTheOrder) {
  testgen::Gen gen(53);
  const Eigen::MatrixXd k = gen.spd(12, 0.2);
  const DenseOperator op(k, {});
  std::vector<Eigen::Index> order{5, 2, 9, 0, 1, 3, 4, 6, 7, 8, 10, 11};
  const auto pre = build_banded_inverse_cholesky(op, order, 3);
  for (Eigen::Index r = 0; r < 12; ++r) {
    EXPECT_EQ(pre.row_coefficients(r).size(), std::min<Eigen::Index>(r, 3));
    EXPECT_GT(pre.row_diagonal(r), 0.0);
  }
  // row r of L is the conditional regression of Z_{order r} on its predecessors
  const Eigen::Index r = 6;
  const std::vector<Eigen::Index> prev{order[3], order[4], order[5]};
  Eigen::MatrixXd kk(3, 3);
  Eigen::VectorXd kc(3);
  for (int a = 0; a < 3; ++a) {
    kc(a) = k(prev[static_cast<std::size_t>(a)], order[static_cast<std::size_t>(r)]);
    for (int b = 0; b < 3; ++b) kk(a, b) = k(prev[static_cast<std::size_t>(a)], prev[static_cast<std::size_t>(b)]);
  }
  const Eigen::VectorXd beta = kk.ldlt().solve(kc);
  const double cond_var = k(order[6], order[6]) - kc.dot(beta);
  EXPECT_NEAR(pre.row_diagonal(r), 1.0 / std::sqrt(cond_var), 1e-10);
  EXPECT_LT((pre.row_coefficients(r) + beta / std::sqrt(cond_var)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(BandedInverseCholesky, SingularLocalCovarianceIsReported) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Ones(4, 4);
  const DenseOperator op(k, {});
  try {
    build_banded_inverse_cholesky(op, 2);
    FAIL() << "expected a numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::numeric);
  }
}

TEST(BandedInverseCholesky, ReducesIterationsOnSpaceTime) {
  std::vector<double> lats{-2.0, -1.0, 0.0, 1.0, 2.0};
  const auto layout = band_layout(lats, 20, 3, 72);
  const SpaceTimeOperator op(KernelModel::space_time({1.0, 1.9, 11.5, -8.2}), layout);
  const auto pre = build_banded_inverse_cholesky(op, 20);
  testgen::Gen gen(54);
  const Eigen::MatrixXd b = gen.matrix(op.size(), 2);
  SolveOptions opts;
  opts.preconditioner = &pre;
  opts.max_iter = 5000;
  SolveOptions plain;
  plain.max_iter = 5000;
  const auto with = block_cg_solve(op, b, opts);
  const auto without = block_cg_solve(op, b, plain);
  ASSERT_TRUE(with.report.all_converged());
  ASSERT_TRUE(without.report.all_converged());
  EXPECT_LT(with.report.iterations, without.report.iterations);
  EXPECT_LT((with.x - without.x).norm() / without.x.norm(), 1e-7);
}
