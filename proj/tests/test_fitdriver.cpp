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
#include <string>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gpscore/error.hpp"
#include "gpscore/fit.hpp"
#include "gpscore/simulate.hpp"
#include "gpscore/spacetime.hpp"

using namespace gpscore;

namespace {

/// g(x) = atan(target - x) componentwise with unit information, so long
/// Newton steps overshoot and need halving.
class AtanFunction final : public EstimatingFunction {
 public:
  explicit AtanFunction(Eigen::VectorXd target) : target_(std::move(target)) {}
  std::size_t num_params() const override { return static_cast<std::size_t>(target_.size()); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& theta) override {
    last_ = (target_ - theta).array().atan().matrix();
    norms.push_back(last_.norm());
    return last_;
  }
  Eigen::MatrixXd information() override {
    accepted.push_back(norms.back());
    return Eigen::MatrixXd::Identity(target_.size(), target_.size());
  }
  std::vector<double> norms;
  std::vector<double> accepted;

 private:
  Eigen::VectorXd target_;
  Eigen::VectorXd last_;
};

struct Problem {
  OccludedGrid grid;
  FilterPlan plan;
  Eigen::VectorXd z;
};

Problem power_law_problem(int m, std::uint64_t seed) {
  auto grid = build_full_grid({m, m}, spacing_for_extent(100.0, m));
  auto plan = build_filter_plan(grid, 1);
  auto z = simulate_gp(KernelModel::power_law({1.5, {7.0, 10.0}}), grid, plan, seed);
  return {std::move(grid), std::move(plan), std::move(z)};
}

}  // namespace

TEST(Zeroin, FindsRoots) {
  auto f = [](double x) { return std::cos(x) - x; };
  const double r = zeroin(f, 0.0, 1.0, 1e-12, f(0.0), f(1.0));
  EXPECT_NEAR(r, 0.7390851332151607, 1e-11);
  auto g = [](double x) { return (x - 0.3) * (x * x + 1.0); };
  EXPECT_NEAR(zeroin(g, -2.0, 5.0, 1e-10, g(-2.0), g(5.0)), 0.3, 1e-9);
}

TEST(Zeroin, RequiresSignChange) {
  auto f = [](double x) { return x * x + 1.0; };
  EXPECT_THROW(zeroin(f, -1.0, 1.0, 1e-8, 2.0, 2.0), Error);
}

TEST(FisherScoring, StepHalvingNeverIncreasesTheNorm) {
  Eigen::VectorXd target(2);
  target << 1.0, -2.0;
  AtanFunction f(target);
  Eigen::VectorXd start(2);
  start << 12.0, 9.0;
  const auto res = fisher_scoring(f, start, {0, 1}, {false, false}, 1e-10, 0.0, 100);
  EXPECT_TRUE(res.converged);
  EXPECT_LT((res.theta - target).norm(), 1e-8);
  for (std::size_t i = 1; i < f.accepted.size(); ++i) EXPECT_LT(f.accepted[i], f.accepted[i - 1]);
}

TEST(FisherScoring, PositiveParametersAreClipped) {
  Eigen::VectorXd target(1);
  target << 0.01;
  AtanFunction f(target);
  Eigen::VectorXd start(1);
  start << 3.0;
  std::vector<double> seen;
  const auto res = fisher_scoring(f, start, {0}, {true}, 1e-12, 0.0, 200);
  EXPECT_TRUE(res.converged);
  EXPECT_GT(res.theta(0), 0.0);
}

TEST(InitialValues, PowerLawMomentsAreNearTruth) {
  const auto p = power_law_problem(24, 5);
  const Eigen::VectorXd theta0 = initial_power_law(p.grid, p.plan, p.z);
  EXPECT_GT(theta0(0), 0.8);
  EXPECT_LT(theta0(0), 2.2);
  EXPECT_GT(theta0(1), 1.0);
  EXPECT_GT(theta0(2), 1.0);
}

TEST(ExactFit, PowerLawScoreVanishesAndLikelihoodPeaks) {
  const auto p = power_law_problem(16, 7);
  FitOptions opts;
  opts.exact = true;
  const auto fam = KernelModel::power_law({1.5, {7.0, 10.0}});
  const auto rep = solve_fit(fam, p.grid, p.plan, p.z, opts);
  EXPECT_TRUE(rep.converged);
  ExactEstimatingFunction f(fam, p.grid, p.plan, p.z);
  const Eigen::VectorXd g = f.evaluate(rep.theta_hat);
  const double ll = f.loglik();
  const Eigen::MatrixXd info = f.information();
  // the score is small on the scale of its standard deviation
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_LT(std::abs(g(i)) / std::sqrt(info(i, i)), 1e-3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (double s : {-1.0, 1.0}) {
      Eigen::VectorXd t = rep.theta_hat;
      t(i) += s * 0.05 * rep.sd_fisher(i);
      f.evaluate(t);
      EXPECT_LE(f.loglik(), ll + 1e-9);
    }
  }
  EXPECT_LT((rep.sd_ratio.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(ExactFit, MaternJointScoring) {
  const auto grid = build_full_grid({14, 14}, 1.0);
  const auto plan = build_filter_plan(grid, 0);
  const auto truth = KernelModel::matern({1.0, 1.5, 2.5}, 2);
  const auto z = simulate_gp(truth, grid, plan, 3);
  FitOptions opts;
  opts.exact = true;
  const auto rep = solve_fit(truth, grid, plan, z, opts);
  EXPECT_TRUE(rep.converged);
  for (Eigen::Index i = 0; i < 2; ++i)
    EXPECT_LT(std::abs(rep.theta_hat(i) - truth.params()(i)), 4.0 * rep.sd_fisher(i));
}

TEST(StochasticFit, AgreesWithExactFitForManyProbes) {
  const auto p = power_law_problem(16, 9);
  const auto fam = KernelModel::power_law({1.5, {7.0, 10.0}});
  FitOptions ex;
  ex.exact = true;
  const auto exact = solve_fit(fam, p.grid, p.plan, p.z, ex);
  for (Design design : {Design::independent, Design::dependent}) {
    FitOptions opts;
    opts.probes = 64;
    opts.design = design;
    opts.seed = 4;
    const auto rep = solve_fit(fam, p.grid, p.plan, p.z, opts);
    EXPECT_TRUE(rep.converged);
    ASSERT_TRUE(rep.info.has_value());
    for (Eigen::Index i = 0; i < 3; ++i)
      EXPECT_LT(std::abs(rep.theta_hat(i) - exact.theta_hat(i)), exact.sd_fisher(i)) << to_string(design);
    for (Eigen::Index i = 0; i < 3; ++i) {
      EXPECT_GT(rep.sd_ratio(i), 0.97);
      EXPECT_LT(rep.sd_ratio(i), 1.1);
    }
  }
}

TEST(StochasticFit, FreshProbesGiveScoreNoiseOfPredictedSize) {
  const auto p = power_law_problem(16, 10);
  const auto fam = KernelModel::power_law({1.5, {7.0, 10.0}});
  FitOptions opts;
  opts.probes = 16;
  opts.seed = 21;
  const auto rep = solve_fit(fam, p.grid, p.plan, p.z, opts);
  ASSERT_TRUE(rep.info.has_value());
  LatticeEstimatingFunction fresh(fam, p.grid, p.plan, p.z,
                                  sample_independent_probes(static_cast<Eigen::Index>(p.plan.size()), 16, 999),
                                  Eigen::MatrixXd::Zero(0, 0), Backend::circulant, {});
  const Eigen::VectorXd g = fresh.evaluate(rep.theta_hat);
  // g(fresh) - g(fit) has covariance 2 J / (4N) under independent probe sets
  const Eigen::MatrixXd& j = rep.info->j_sym;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double sd = std::sqrt(2.0 * j(i, i) / (4.0 * 16.0));
    EXPECT_LT(std::abs(g(i) - rep.g(i)), 4.0 * sd) << "parameter " << i;
  }
}

TEST(Fit, NoSignChangeReportsProfileSamples) {
  const auto p = power_law_problem(12, 11);
  FitOptions opts;
  opts.exact = true;
  opts.bracket = std::make_pair(3.3, 3.4);
  opts.theta0 = Eigen::Vector3d(1.5, 7.0, 10.0);
  try {
    solve_fit(KernelModel::power_law({1.5, {7.0, 10.0}}), p.grid, p.plan, p.z, opts);
    FAIL() << "expected a convergence error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::convergence);
    EXPECT_NE(std::string(e.what()).find("profile samples"), std::string::npos);
  }
}

TEST(Fit, BracketFallsBackToAdjacentSamplesWithASignChange) {
  // widening this bracket skips the root between 0.425 and 1.1
  const auto grid = build_full_grid({16, 16}, spacing_for_extent(100.0, 16));
  const auto plan = build_filter_plan(grid, 1);
  const auto fam = KernelModel::power_law({1.5, {7.0, 10.0}});
  const Eigen::VectorXd z = simulate_gp(fam, grid, plan, 12799774309421649199ull);
  FitOptions opts;
  opts.probes = 2;
  opts.seed = 12690998038707861165ull;
  opts.compute_info = false;
  opts.score.strategy = SolveStrategy::direct;
  opts.theta0 = initial_power_law(grid, plan, z);
  const auto r = solve_fit(fam, grid, plan, z, opts);
  EXPECT_TRUE(r.converged);
  EXPECT_GT(r.theta_hat(0), 0.425);
  EXPECT_LT(r.theta_hat(0), 1.1);
}

TEST(Fit, RunsAreReproducible) {
  const auto p = power_law_problem(12, 12);
  const auto fam = KernelModel::power_law({1.5, {7.0, 10.0}});
  FitOptions opts;
  opts.probes = 8;
  opts.design = Design::dependent;
  opts.seed = 3;
  const auto a = solve_fit(fam, p.grid, p.plan, p.z, opts);
  const auto b = solve_fit(fam, p.grid, p.plan, p.z, opts);
  EXPECT_EQ(a.theta_hat, b.theta_hat);
  EXPECT_EQ(a.sd_ratio, b.sd_ratio);
}

TEST(SpaceTimeFit, InitialValuesArePositive) {
  std::vector<double> lats{-2.0, -1.0, 0.0, 1.0, 2.0};
  const auto layout = band_layout(lats, 30, 10);
  const auto z = simulate_spacetime(KernelModel::space_time({1.3e-3, 1.9, 11.5, -8.2}), layout, 4);
  const Eigen::VectorXd t = initial_spacetime(layout, z);
  EXPECT_GT(t(0), 0.0);
  EXPECT_GT(t(1), 0.0);
  EXPECT_GT(t(2), 0.0);
  EXPECT_NEAR(t(0), z.squaredNorm() / static_cast<double>(z.size()), 1e-12);
}

TEST(SpaceTimeFit, DependentDesignRunsAndIsReproducible) {
  std::vector<double> lats{-2.0, -1.0, 0.0, 1.0, 2.0};
  const auto layout = band_layout(lats, 10, 10);
  const auto z = simulate_spacetime(KernelModel::space_time({1.3e-3, 1.9, 11.5, -8.2}), layout, 4);
  SpaceTimeFitOptions opts;
  opts.probes = 8;
  opts.design = Design::dependent;
  opts.n2 = 20;
  opts.depth = 5;
  opts.seed = 2;
  const auto a = solve_fit_spacetime(layout, z, opts);
  const auto b = solve_fit_spacetime(layout, z, opts);
  EXPECT_EQ(a.design, Design::dependent);
  EXPECT_TRUE(a.theta_hat.allFinite());
  EXPECT_EQ(a.theta_hat, b.theta_hat);
}
