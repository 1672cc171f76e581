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
#include "gpscore/precond.hpp"
#include "generators.hpp"

using namespace gpscore;

namespace {

DenseOperator dense(const Eigen::MatrixXd& k) { return DenseOperator(k, {}); }

}  // namespace

TEST(Cg, IdentityConvergesInOneIteration) {
  const auto op = dense(Eigen::MatrixXd::Identity(20, 20));
  testgen::Gen gen(41);
  const auto res = cg_solve(op, gen.vector(20), {});
  EXPECT_EQ(res.report.iterations, 1);
  EXPECT_TRUE(res.report.all_converged());
}

TEST(Cg, SolvesRandomSpdSystems) {
  testgen::Gen gen(42);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = gen.integer(5, 60);
    const Eigen::MatrixXd k = gen.spd(n, 0.1);
    const Eigen::VectorXd b = gen.vector(n);
    const auto res = cg_solve(dense(k), b, {});
    ASSERT_TRUE(res.report.all_converged());
    EXPECT_LE((k * res.x - b).norm() / b.norm(), 1e-10);
    EXPECT_NEAR(res.report.residuals(0), (k * res.x - b).norm() / b.norm(), 1e-12);
  }
}

TEST(Cg, IterationCapReportsNotConverged) {
  testgen::Gen gen(43);
  const Eigen::MatrixXd k = gen.spd(50, 1e-4);
  SolveOptions opts;
  opts.max_iter = 3;
  const auto res = cg_solve(dense(k), gen.vector(50), opts);
  EXPECT_FALSE(res.report.all_converged());
  EXPECT_EQ(res.report.iterations, 3);
}

TEST(Cg, IndefiniteMatrixIsANumericError) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(4, 4);
  k(2, 2) = -1.0;
  try {
    cg_solve(dense(k), Eigen::VectorXd::Ones(4), {});
    FAIL() << "expected a numeric error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::numeric);
  }
}

TEST(BlockCg, SingleColumnMatchesCgIterates) {
  // converges long before n steps, so rounding cannot separate the recurrences
  testgen::Gen gen(44);
  const Eigen::MatrixXd k = gen.spd(150, 0.5);
  const Eigen::VectorXd b = gen.vector(150);
  std::vector<double> cg_trace, block_trace;
  SolveOptions a;
  a.trace = [&](int, const Eigen::VectorXd& r) { cg_trace.push_back(r(0)); };
  SolveOptions c;
  c.trace = [&](int, const Eigen::VectorXd& r) { block_trace.push_back(r(0)); };
  const auto x1 = cg_solve(dense(k), b, a);
  const auto x2 = block_cg_solve(dense(k), b, c);
  EXPECT_EQ(x1.report.iterations, x2.report.iterations);
  ASSERT_EQ(cg_trace.size(), block_trace.size());
  for (std::size_t i = 0; i < cg_trace.size(); ++i)
    EXPECT_NEAR(block_trace[i], cg_trace[i], 1e-8 * std::max(1.0, cg_trace[i])) << "iteration " << i;
  EXPECT_LT((x1.x - x2.x).norm() / x1.x.norm(), 1e-9);
}

TEST(BlockCg, SolvesManyColumns) {
  testgen::Gen gen(45);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index n = gen.integer(10, 80);
    const Eigen::MatrixXd k = gen.spd(n, 0.05);
    const Eigen::MatrixXd b = gen.matrix(n, gen.integer(1, 12));
    const auto res = block_cg_solve(dense(k), b, {});
    ASSERT_TRUE(res.report.all_converged());
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      EXPECT_LE((k * res.x.col(j) - b.col(j)).norm() / b.col(j).norm(), 1e-10);
  }
}

TEST(BlockCg, DependentColumnsAreDeflated) {
  testgen::Gen gen(46);
  const Eigen::MatrixXd k = gen.spd(30, 0.1);
  Eigen::MatrixXd b(30, 3);
  b.col(0) = gen.vector(30);
  b.col(1) = 2.0 * b.col(0);
  b.col(2) = gen.vector(30);
  const auto res = block_cg_solve(dense(k), b, {});
  ASSERT_TRUE(res.report.all_converged());
  EXPECT_GE(res.report.deflations, 1);
  EXPECT_LE((k * res.x - b).norm() / b.norm(), 1e-10);
}

TEST(BlockCg, ZeroColumnGivesZeroSolution) {
  testgen::Gen gen(47);
  const Eigen::MatrixXd k = gen.spd(10, 0.2);
  Eigen::MatrixXd b = gen.matrix(10, 2);
  b.col(1).setZero();
  const auto res = block_cg_solve(dense(k), b, {});
  EXPECT_TRUE(res.report.all_converged());
  EXPECT_EQ(res.x.col(1).norm(), 0.0);
}

TEST(Preconditioned, ExactInverseConvergesInOneIteration) {
  testgen::Gen gen(48);
  const Eigen::MatrixXd k = gen.spd(25, 0.01);
  const DensePreconditioner pre(k.inverse());
  SolveOptions opts;
  opts.preconditioner = &pre;
  const auto res = block_cg_solve(dense(k), gen.matrix(25, 3), opts);
  EXPECT_EQ(res.report.iterations, 1);
  EXPECT_TRUE(res.report.all_converged());
}

TEST(Preconditioned, AgreesWithUnpreconditioned) {
  testgen::Gen gen(49);
  const Eigen::MatrixXd k = gen.spd(60, 0.01);
  const auto op = dense(k);
  std::vector<Eigen::Index> order(60);
  for (Eigen::Index i = 0; i < 60; ++i) order[static_cast<std::size_t>(i)] = i;
  const auto pre = build_banded_inverse_cholesky(op, order, 5);
  SolveOptions opts;
  opts.preconditioner = &pre;
  const Eigen::MatrixXd b = gen.matrix(60, 4);
  const auto with = block_cg_solve(op, b, opts);
  const auto without = block_cg_solve(op, b, {});
  ASSERT_TRUE(with.report.all_converged());
  ASSERT_TRUE(without.report.all_converged());
  EXPECT_LT((with.x - without.x).norm() / without.x.norm(), 1e-8);
  EXPECT_EQ(with.report.precond_residuals.size(), 4);
}
