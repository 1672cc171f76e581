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

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gpscore/grid.hpp"
#include "gpscore/kernels.hpp"
#include "gpscore/operators.hpp"
#include "gpscore/probes.hpp"
#include "gpscore/score.hpp"
#include "gpscore/spacetime.hpp"

namespace gpscore {

/// Root of f on [a, b] by the Forsythe-Malcolm-Moler zeroin method.
/// f(a) and f(b) must differ in sign (or one of them be zero).
double zeroin(const std::function<double(double)>& f, double a, double b, double tol,
              double fa, double fb, int max_iter = 100);

/// A function theta -> g(theta) of estimating equations together with an
/// information matrix used as the Jacobian surrogate.
class EstimatingFunction {
 public:
  virtual ~EstimatingFunction() = default;
  virtual std::size_t num_params() const = 0;
  virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& theta) = 0;
  /// Information at the most recently evaluated theta.
  virtual Eigen::MatrixXd information() = 0;
  /// Solver iterations and matvecs spent so far.
  virtual long solver_iterations() const { return 0; }
  virtual long matvecs() const { return 0; }
};

/// Filtered lattice data with probes fixed at construction (common random
/// numbers across theta).
class LatticeEstimatingFunction final : public EstimatingFunction {
 public:
  LatticeEstimatingFunction(KernelModel family, const OccludedGrid& grid, FilterPlan plan,
                            Eigen::VectorXd z, ProbeSet probes, Eigen::MatrixXd info_probes,
                            Backend backend, ScoreOptions opts);

  std::size_t num_params() const override { return family_.num_params(); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& theta) override;
  Eigen::MatrixXd information() override;
  long solver_iterations() const override { return iterations_; }
  long matvecs() const override { return matvecs_; }

  const CovOperator& last_operator() const { return *op_; }

 private:
  KernelModel family_;
  const OccludedGrid& grid_;
  FilterPlan plan_;
  Eigen::VectorXd z_;
  ProbeSet probes_;
  Eigen::MatrixXd info_probes_;
  Backend backend_;
  ScoreOptions opts_;
  std::unique_ptr<CovOperator> op_;
  long iterations_ = 0;
  long matvecs_ = 0;
};

/// Exact score equations with exact Fisher information (dense).
class ExactEstimatingFunction final : public EstimatingFunction {
 public:
  ExactEstimatingFunction(KernelModel family, const OccludedGrid& grid, FilterPlan plan,
                          Eigen::VectorXd z);

  std::size_t num_params() const override { return family_.num_params(); }
  Eigen::VectorXd evaluate(const Eigen::VectorXd& theta) override;
  Eigen::MatrixXd information() override;
  double loglik();

 private:
  KernelModel family_;
  const OccludedGrid& grid_;
  FilterPlan plan_;
  Eigen::VectorXd z_;
  std::unique_ptr<DenseOperator> op_;
};

struct ScoringResult {
  Eigen::VectorXd theta;
  Eigen::VectorXd g;  // full estimating-function vector at theta
  int iterations = 0;
  bool converged = false;
};

/// Fisher scoring on the components `free` of theta (others fixed) with
/// step halving on the norm of the free part of g. Positive components are
/// kept positive by clipping steps to half the current value.
ScoringResult fisher_scoring(EstimatingFunction& f, Eigen::VectorXd theta,
                             const std::vector<Eigen::Index>& free,
                             const std::vector<bool>& positive, double abs_tol,
                             double decrement_tol, int max_iter);

struct FitOptions {
  std::size_t probes = 64;
  Design design = Design::independent;
  std::uint64_t seed = 1;
  std::size_t n2 = 100;        // information probes at the estimate
  std::size_t n2_inner = 32;   // probes for the scoring Jacobian
  bool exact = false;          // dense exact score equations instead
  Backend backend = Backend::circulant;
  ScoreOptions score;
  std::optional<std::pair<double, double>> bracket;
  double outer_tol = 1e-4;
  double inner_tol = 1e-6;      // relative to the first |g| of the fit
  double decrement_tol = 1e-6;  // Newton decrement sqrt(g' I^-1 g)
  int inner_max_iter = 50;
  std::optional<Eigen::VectorXd> theta0;
  bool compute_info = true;
  std::function<void(const std::string&)> log;
};

struct FitIteration {
  std::string stage;
  Eigen::VectorXd theta;
  Eigen::VectorXd g;
};

struct FitReport {
  std::vector<std::string> names;
  Eigen::VectorXd theta_init;
  Eigen::VectorXd theta_hat;
  Eigen::VectorXd g;
  bool converged = false;
  std::optional<InfoEstimates> info;
  Eigen::VectorXd sd_fisher;    // sqrt(diag(I^-1))
  Eigen::VectorXd sd_godambe;   // sqrt(diag(G^-1))
  Eigen::VectorXd sd_ratio;
  std::vector<FitIteration> trace;
  long evaluations = 0;
  long solver_iterations = 0;
  long matvecs = 0;
  double fit_seconds = 0.0;
  double info_seconds = 0.0;
  std::uint64_t seed = 0;
  std::size_t probes = 0;
  Design design = Design::independent;
  bool exact = false;
  std::size_t n = 0;
  int tau = 0;
  double theta0_profile = 0.0;  // space-time only: profiled scale
};

/// Method-of-moments start: matches empirical filtered autocovariances at
/// lags 0, 1, 2 along each axis by grid search.
Eigen::VectorXd initial_power_law(const OccludedGrid& grid, const FilterPlan& plan,
                                  const Eigen::VectorXd& z);

/// Probes for a lattice fit: zigzag blocks for the dependent design.
ProbeSet make_fit_probes(const OccludedGrid& grid, const FilterPlan& plan, std::size_t N,
                         Design design, std::uint64_t seed);

/// Power-law fit by the alpha profile; Matern fit by joint Fisher scoring.
FitReport solve_fit(const KernelModel& family, const OccludedGrid& grid, const FilterPlan& plan,
                    const Eigen::VectorXd& z, const FitOptions& opts);

struct SpaceTimeFitOptions {
  std::size_t probes = 128;
  Design design = Design::independent;
  std::uint64_t seed = 1;
  std::size_t n2 = 100;
  std::size_t n2_inner = 32;
  int depth = 20;               // banded inverse Cholesky conditioning depth
  bool use_preconditioner = true;
  ScoreOptions score;
  double decrement_tol = 1e-4;
  int max_iter = 30;
  std::optional<Eigen::VectorXd> theta0;  // (theta0, theta1, theta2, v)
  bool compute_info = true;
  std::function<void(const std::string&)> log;
};

/// Moment-matching start for (theta0, theta1, theta2, v).
Eigen::VectorXd initial_spacetime(const SpaceTimeLayout& layout, const Eigen::VectorXd& z);

/// theta0 profiled in closed form; (theta1, theta2, v) by Fisher scoring
/// on the profiled equations.
FitReport solve_fit_spacetime(const SpaceTimeLayout& layout, const Eigen::VectorXd& z,
                              const SpaceTimeFitOptions& opts);

}  // namespace gpscore
