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

#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gpscore/error.hpp"
#include "gpscore/score.hpp"
#include "gpscore/spacetime.hpp"
#include "gpscore/studies.hpp"
#include "generators.hpp"

using namespace gpscore;

namespace {

ProbeSet as_probes(const Eigen::MatrixXd& u) {
  ProbeSet p;
  p.u = u;
  return p;
}

std::unique_ptr<DenseOperator> small_lattice(const KernelModel& model, std::vector<int> dims, int tau) {
  const auto grid = build_full_grid(dims, 1.0);
  const auto plan = build_filter_plan(grid, tau);
  auto op = build_operator(model, grid, plan, Backend::dense);
  return std::unique_ptr<DenseOperator>(static_cast<DenseOperator*>(op.release()));
}

}  // namespace

TEST(ExactScore, MatchesLoglikGradient) {
  testgen::Gen gen(71);
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = trial % 2 ? gen.power_law(1, 1) : gen.matern(1);
    const int tau = trial % 2 ? 1 : 0;
    const auto op = small_lattice(model, {12}, tau);
    const Eigen::VectorXd z = gen.vector(op->size());
    const Eigen::VectorXd g = exact_score(*op, z);
    const Eigen::VectorXd theta = model.params();
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(theta(i)));
      Eigen::VectorXd up = theta, dn = theta;
      up(i) += h;
      dn(i) -= h;
      const double fd = (exact_loglik(*small_lattice(model.with_params(up), {12}, tau), z) -
                         exact_loglik(*small_lattice(model.with_params(dn), {12}, tau), z)) /
                        (2.0 * h);
      EXPECT_NEAR(g(i), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "trial " << trial << " param " << i;
    }
  }
}

TEST(ExactScore, FisherIsTheScoreCovariance) {
  // Monte Carlo over data draws
  testgen::Gen gen(72);
  const Eigen::MatrixXd k = gen.spd(5, 0.3);
  const Eigen::MatrixXd a = gen.matrix(5, 5), b = gen.matrix(5, 5);
  const DenseOperator op(k, {a + a.transpose(), b + b.transpose()});
  const Eigen::MatrixXd l = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
  const int draws = 40000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2);
  for (int s = 0; s < draws; ++s) {
    const Eigen::VectorXd g = exact_score(op, l * gen.vector(5));
    acc += g * g.transpose();
    mean += g;
  }
  mean /= draws;
  const Eigen::MatrixXd cov = acc / draws - mean * mean.transpose();
  const Eigen::MatrixXd info = exact_fisher(op);
  EXPECT_LT((cov - info).cwiseAbs().maxCoeff() / info.cwiseAbs().maxCoeff(), 0.05);
}

TEST(ApproximateScore, EnumeratedMeanIsTheExactScore) {
  testgen::Gen gen(73);
  ScoreOptions direct;
  direct.strategy = SolveStrategy::direct;
  for (int trial = 0; trial < 4; ++trial) {
    const auto op = small_lattice(gen.power_law(1, 1), {8}, 1);  // 6 points
    const Eigen::VectorXd z = gen.vector(op->size());
    const Eigen::VectorXd exact = exact_score(*op, z);
    for (Design design : {Design::independent, Design::dependent}) {
      const std::size_t N = 2;
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(exact.size());
      double count = 0.0;
      auto visit = [&](const Eigen::MatrixXd& u) {
        sum += eval_g(*op, z, as_probes(u), direct).g;
        count += 1.0;
      };
      if (design == Design::independent)
        enumerate_independent(op->size(), N, visit);
      else
        enumerate_dependent(sequential_blocking(static_cast<std::size_t>(op->size()), N), build_factorial_basis(N),
                            visit);
      EXPECT_LT((sum / count - exact).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, exact.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(ApproximateScore, IterativeAndDirectAgree) {
  const auto grid = build_disc_occluded_grid({20, 20}, 1.0, {9.0, 9.0}, 3.0);
  const auto plan = build_filter_plan(grid, 1);
  const auto op = build_operator(KernelModel::power_law({1.5, {3.0, 4.0}}), grid, plan, Backend::circulant);
  testgen::Gen gen(74);
  const Eigen::VectorXd z = gen.vector(op->size());
  const auto probes = sample_independent_probes(op->size(), 8, 3);
  ScoreOptions direct;
  direct.strategy = SolveStrategy::direct;
  const auto a = eval_g(*op, z, probes);
  const auto b = eval_g(*op, z, probes, direct);
  EXPECT_LT((a.g - b.g).cwiseAbs().maxCoeff() / b.g.cwiseAbs().maxCoeff(), 1e-7);
  EXPECT_GT(a.report.iterations, 0);
}

TEST(ApproximateScore, SolverFailureIsAConvergenceError) {
  const auto grid = build_full_grid({20, 20}, 1.0);
  const auto plan = build_filter_plan(grid, 1);
  const auto op = build_operator(KernelModel::power_law({1.5, {3.0, 4.0}}), grid, plan, Backend::circulant);
  ScoreOptions opts;
  opts.solve.max_iter = 2;
  try {
    eval_g(*op, Eigen::VectorXd::Ones(op->size()), sample_independent_probes(op->size(), 2, 1), opts);
    FAIL() << "expected a convergence error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::convergence);
  }
}

TEST(Symmetrized, EnumeratedMeanIsTheExactScore) {
  testgen::Gen gen(75);
  const Eigen::MatrixXd k = gen.spd(6, 0.3);
  const Eigen::MatrixXd a = gen.matrix(6, 6);
  const DenseOperator op(k, {a + a.transpose()});
  const Eigen::VectorXd z = gen.vector(6);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(1);
  double count = 0.0;
  enumerate_independent(6, 2, [&](const Eigen::MatrixXd& u) {
    sum += eval_h_symmetrized(op, z, as_probes(u));
    count += 1.0;
  });
  EXPECT_NEAR(sum(0) / count, exact_score(op, z)(0), 1e-10);
}

TEST(Information, ProductEstimateIsUnbiasedForFisher) {
  testgen::Gen gen(76);
  const Eigen::MatrixXd k = gen.spd(6, 0.3);
  const Eigen::MatrixXd a = gen.matrix(6, 6), b = gen.matrix(6, 6);
  const DenseOperator op(k, {a + a.transpose(), b + b.transpose()});
  const auto w = score_matrices(op);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
  double count = 0.0;
  enumerate_independent(6, 2, [&](const Eigen::MatrixXd& u) {
    std::vector<Eigen::MatrixXd> A, B;
    for (std::size_t i = 0; i < 2; ++i) {
      A.push_back(w[i] * u);
      B.push_back(w[i].transpose() * u);
    }
    sum += information_from_products(u, A, B, 4).i_hat;
    count += 1.0;
  });
  EXPECT_LT((sum / count - exact_fisher(op)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Information, ScaleShortcutMatchesGeneralPath) {
  const auto grid = build_full_grid({40}, 1.0);
  const auto plan = build_filter_plan(grid, 0);
  const auto model = KernelModel::matern({1.0, 2.0, 4.0});
  const auto op = build_operator(model, grid, plan, Backend::circulant);
  const auto u = sample_independent_probes(op->size(), 16, 9).u;
  const auto general = estimate_information(*op, u, 8);
  const auto shortcut = estimate_information(*op, u, 8, {}, std::make_pair(std::size_t{0}, 2.0));
  EXPECT_LT((general.i_hat - shortcut.i_hat).cwiseAbs().maxCoeff() / general.i_hat.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((general.j_hat - shortcut.j_hat).cwiseAbs().maxCoeff() / general.j_hat.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Information, EstimateIsCloseToExactForManyProbes) {
  const auto op = small_lattice(KernelModel::power_law({1.5, {3.0, 4.0}}), {12, 12}, 1);
  const auto u = sample_independent_probes(op->size(), 400, 5).u;
  const auto est = estimate_information(*op, u, 16);
  const Eigen::MatrixXd exact = exact_fisher(*op);
  EXPECT_LT((est.i_hat - exact).cwiseAbs().maxCoeff() / exact.cwiseAbs().maxCoeff(), 0.1);
  const Eigen::MatrixXd j = exact_j(*op);
  EXPECT_LT((est.j_sym - j).cwiseAbs().maxCoeff() / j.cwiseAbs().maxCoeff(), 0.25);
}

TEST(Information, GodambeReducesToFisherWithoutProbeNoise) {
  testgen::Gen gen(77);
  const Eigen::MatrixXd f = gen.spd(3, 0.5);
  EXPECT_LT((godambe(f, Eigen::MatrixXd::Zero(3, 3), 4) - f).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd j = gen.spd(3, 0.1);
  // G^-1 = I^-1 + I^-1 (J / 4N) I^-1 dominates I^-1
  const Eigen::MatrixXd excess = godambe(f, j, 4).inverse() - f.inverse();
  EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(excess).eigenvalues().minCoeff(), -1e-12);
}

TEST(Information, EfficiencyBoundValues) {
  EXPECT_DOUBLE_EQ(efficiency_bound(5.0, 180), 0.01);
  EXPECT_DOUBLE_EQ(efficiency_bound(5.0, 18), 0.1);
  EXPECT_DOUBLE_EQ(efficiency_bound(1.0, 1), 1.0);
}

TEST(SpaceTimeProfile, ScaleScoreVanishesAtProfiledScale) {
  const auto layout = band_layout({-1.0, 0.0, 1.0}, 6, 2, 36);
  testgen::Gen gen(78);
  const auto unit = build_dense_spacetime_operator(KernelModel::space_time({1.0, 1.5, 9.0, -4.0}), layout);
  const Eigen::VectorXd z = 0.03 * gen.vector(unit->size());
  const Eigen::MatrixXd m = unit->matrix(Component::cov());
  const double scale = z.dot(m.ldlt().solve(z)) / static_cast<double>(z.size());
  const auto op = build_dense_spacetime_operator(KernelModel::space_time({scale, 1.5, 9.0, -4.0}), layout);
  EXPECT_NEAR(exact_score(*op, z)(0), 0.0, 1e-8 * static_cast<double>(z.size()) / scale);
}
