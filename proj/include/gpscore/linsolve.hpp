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

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "gpscore/operators.hpp"
#include "gpscore/precond.hpp"

namespace gpscore {

struct SolveOptions {
  double tol = 1e-10;  // relative residual per column
  int max_iter = 1000;
  const Preconditioner* preconditioner = nullptr;
  /// Called after every iteration with the relative recurrence residuals.
  std::function<void(int, const Eigen::VectorXd&)> trace;
};

struct SolveReport {
  int iterations = 0;
  Eigen::VectorXd residuals;          // true relative residual per column
  Eigen::VectorXd precond_residuals;  // sqrt(r' M r) / sqrt(b' M b) per column
  std::vector<bool> converged;
  long matvecs = 0;  // operator applications counted per column
  int deflations = 0;
  int restarts = 0;

  bool all_converged() const;
  double max_residual() const;
};

struct SolveResult {
  Eigen::MatrixXd x;
  SolveReport report;
};

/// Preconditioned conjugate gradient on one right-hand side.
SolveResult cg_solve(const CovOperator& op, const Eigen::VectorXd& b, const SolveOptions& opts);

/// Block conjugate gradient with one shared Krylov space for all columns.
/// Search directions are re-orthonormalized every step; directions that
/// become linearly dependent are dropped.
SolveResult block_cg_solve(const CovOperator& op, const Eigen::MatrixXd& b,
                           const SolveOptions& opts);

}  // namespace gpscore
