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
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpscore/fit.hpp"
#include "gpscore/grid.hpp"
#include "gpscore/kernels.hpp"
#include "gpscore/operators.hpp"
#include "gpscore/probes.hpp"

namespace gpscore {

// --- enumeration oracles ----------------------------------------------------

/// W^i = K^-1 K_i for every parameter of a dense operator.
std::vector<Eigen::MatrixXd> score_matrices(const DenseOperator& op);

struct TraceMoments {
  Eigen::VectorXd mean;  // E t_i, t_i = (1/N) sum_j U_j' M_i U_j
  Eigen::MatrixXd cov;   // cov(t_i, t_k)
};

/// Exact moments of the trace estimators over the probe distribution.
/// Independent designs too large for joint enumeration are enumerated one
/// column at a time (columns are i.i.d., so cov scales by 1/N).
TraceMoments enumerate_trace_moments(const std::vector<Eigen::MatrixXd>& m, Design design,
                                     std::size_t N,
                                     const std::optional<BlockAssignment>& assignment = {},
                                     int max_bits = 24);

/// (1/N) J, the closed form of cov(t) for independent probes.
Eigen::MatrixXd independent_trace_cov(const std::vector<Eigen::MatrixXd>& m, std::size_t N);

/// cov{g} = I + cov(t) / 4, the data part from the Gaussian quadratic form
/// and the probe part from enumeration.
Eigen::MatrixXd enumerated_score_cov(const DenseOperator& op, Design design, std::size_t N,
                                     const std::optional<BlockAssignment>& assignment = {});

/// cov{h} for the symmetrized estimator, same decomposition.
Eigen::MatrixXd enumerated_symmetrized_cov(const DenseOperator& op, std::size_t N);

/// Sum over same-block pairs k < l of (A_kl + A_lk)^2 with A = sum_i v_i M_i.
double same_block_pair_sum(const std::vector<Eigen::MatrixXd>& m, const Eigen::VectorXd& v,
                           const BlockAssignment& assignment);

/// Condition number of a symmetric positive definite matrix.
double spd_condition(const Eigen::MatrixXd& k);

/// Random SPD instance with random symmetric partials.
std::unique_ptr<DenseOperator> random_spd_instance(Eigen::Index n, std::size_t p, std::uint64_t seed);

/// Filtered one-dimensional power-law instance with n retained points.
std::unique_ptr<DenseOperator> powerlaw_1d_instance(Eigen::Index n, double alpha, double length,
                                                    int tau = 1);

/// Unfiltered one-dimensional Matern instance on n unit-spaced points.
std::unique_ptr<DenseOperator> matern_1d_instance(Eigen::Index n, double nu, double sigma2,
                                                  double range);

// --- verification suite -----------------------------------------------------

struct CheckRow {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string note;
};

struct TrendRow {
  Eigen::Index n = 0;
  double kappa = 0.0;
  double ij_norm = 0.0;  // ||I^-1 J||_2
};

struct VerifyReport {
  std::vector<CheckRow> checks;
  std::vector<TrendRow> trend;
  bool all_pass() const;
};

struct VerifyConfig {
  Eigen::Index n = 8;
  std::size_t N = 4;
  std::uint64_t seed = 1;
  int instances = 20;
  bool trend = true;
};

VerifyReport verify_bounds_suite(const VerifyConfig& config);

// --- N sweep ----------------------------------------------------------------

struct SweepConfig {
  std::vector<int> dims{16, 16};
  double extent = 100.0;
  std::optional<DiscOcclusion> occlusion;
  int tau = 1;
  KernelModel truth = KernelModel::power_law({1.5, {7.0, 10.0}});
  int reps = 50;
  std::vector<std::size_t> probes{1, 2, 4, 8, 16, 32, 64};
  std::uint64_t seed = 1;
  int threads = 1;
  ScoreOptions score;
  std::optional<std::pair<double, double>> bracket;
  std::function<void(const std::string&)> log;
};

struct SweepCell {
  std::size_t N = 0;
  Design design = Design::independent;
  Eigen::VectorXd ratio;  // mean (theta_N - theta_exact)^2 / mean (theta_exact - truth)^2
  int fits = 0;
  int failures = 0;
};

struct SweepReport {
  std::vector<std::string> names;
  Eigen::VectorXd exact_mse;
  int exact_failures = 0;
  std::vector<SweepCell> cells;
  double seconds = 0.0;

  const SweepCell& cell(std::size_t N, Design design) const;
};

SweepReport n_sweep_study(const SweepConfig& config);

// --- trace-estimator study --------------------------------------------------

struct TraceStudyConfig {
  std::vector<int> dims{16, 16};
  double extent = 100.0;
  std::optional<DiscOcclusion> occlusion;
  int tau = 1;
  KernelModel model = KernelModel::power_law({1.5, {7.0, 10.0}});
  std::vector<std::size_t> probes{1, 2, 4, 8, 16, 32, 64};
  int reps = 200;
  std::uint64_t seed = 1;
};

struct TraceStudyRow {
  std::size_t N = 0;
  Design design = Design::independent;
  std::size_t param = 0;
  double exact = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

std::vector<TraceStudyRow> trace_study(const TraceStudyConfig& config);

// --- matvec benchmark -------------------------------------------------------

struct BenchRow {
  std::size_t n = 0;
  Backend backend = Backend::circulant;
  double seconds_per_matvec = 0.0;
};

/// Square grids of side `sides`, `reps` K matvecs each.
std::vector<BenchRow> bench_matvec(const std::vector<int>& sides, Backend backend, int reps,
                                   const KernelModel& model);

/// Runs fn(i) for i in [0, count) on a pool of `threads` workers. The first
/// exception is rethrown after all workers stop.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace gpscore
