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
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gpscore/linsolve.hpp"
#include "gpscore/operators.hpp"
#include "gpscore/probes.hpp"

namespace gpscore {

enum class SolveStrategy { iterative, direct };

struct ScoreOptions {
  SolveOptions solve;
  SolveStrategy strategy = SolveStrategy::iterative;
};

/// K^{-1} B either by block CG or by a dense Cholesky factorization.
/// Non-converged iterative solves raise a convergence error.
SolveResult solve_covariance(const CovOperator& op, const Eigen::MatrixXd& b,
                             const ScoreOptions& opts);

struct ScoreEval {
  Eigen::VectorXd g;
  Eigen::VectorXd quad;   // (K^-1 Z)' K_i (K^-1 Z)
  Eigen::VectorXd trace;  // (1/N) sum_j U_j' K_i K^-1 U_j
  double zkz = 0.0;       // Z' K^-1 Z
  Eigen::VectorXd kinv_z;
  Eigen::MatrixXd kinv_u;
  SolveReport report;
};

ScoreEval eval_g(const CovOperator& op, const Eigen::VectorXd& z, const ProbeSet& probes,
                 const ScoreOptions& opts = {});

/// g from already solved K^-1 Z and K^-1 U.
ScoreEval assemble_g(const CovOperator& op, const Eigen::VectorXd& kinv_z,
                     const Eigen::MatrixXd& u, const Eigen::MatrixXd& kinv_u);

// Dense references.
Eigen::VectorXd exact_score(const DenseOperator& op, const Eigen::VectorXd& z);
Eigen::MatrixXd exact_fisher(const DenseOperator& op);
/// tr(W^i W^j) + tr(W^i W^j') - 2 sum_k W^i_kk W^j_kk with W^i = K^-1 K_i.
Eigen::MatrixXd exact_j(const DenseOperator& op);
double exact_loglik(const DenseOperator& op, const Eigen::VectorXd& z);
/// Symmetrized estimating function using G = L' from K = L L'.
Eigen::VectorXd eval_h_symmetrized(const DenseOperator& op, const Eigen::VectorXd& z,
                                   const ProbeSet& probes);

/// I (I + J / (4N))^{-1} I.
Eigen::MatrixXd godambe(const Eigen::MatrixXd& fisher, const Eigen::MatrixXd& j, std::size_t N);
/// sqrt(diag(M^{-1})).
Eigen::VectorXd inverse_sd(const Eigen::MatrixXd& m);

struct InfoEstimates {
  Eigen::MatrixXd i_hat;
  Eigen::MatrixXd j_hat;      // as estimated
  Eigen::MatrixXd j_sym;      // (J + J') / 2
  Eigen::MatrixXd g_hat;
  std::size_t n2 = 0;
  std::size_t n = 0;          // score probe count the Godambe matrix refers to
  bool indefinite = false;    // I_hat not positive definite
  SolveReport report;
};

/// When `scale` = (s, value) is given, parameter s is a pure scale with
/// K_s = K / value, which saves its solves.
InfoEstimates estimate_information(const CovOperator& op, const Eigen::MatrixXd& u2,
                                   std::size_t N, const ScoreOptions& opts = {},
                                   std::optional<std::pair<std::size_t, double>> scale = {});

/// Same estimates from the products A_i = K^-1 K_i U and B_i = K_i K^-1 U.
InfoEstimates information_from_products(const Eigen::MatrixXd& u,
                                        const std::vector<Eigen::MatrixXd>& a,
                                        const std::vector<Eigen::MatrixXd>& b, std::size_t N);

/// (kappa + 1)^2 / (4 N kappa).
double efficiency_bound(double kappa, std::size_t N);

}  // namespace gpscore
