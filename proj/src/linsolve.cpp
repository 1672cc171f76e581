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

#include "gpscore/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "gpscore/error.hpp"

namespace gpscore {

namespace {

constexpr double kDropTolerance = 1e-12;

void precondition(const SolveOptions& opts, const Eigen::MatrixXd& r, Eigen::MatrixXd& z) {
  if (opts.preconditioner)
    opts.preconditioner->apply(r, z);
  else
    z = r;
}

/// Orthonormal basis of the column span, dropping directions whose pivot
/// falls below kDropTolerance times the largest one.
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& z, int& dropped) {
  if (z.cols() == 0) return z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
  qr.setThreshold(kDropTolerance);
  const Eigen::Index rank = qr.rank();
  dropped += static_cast<int>(z.cols() - rank);
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(z.rows(), rank);
  q.applyOnTheLeft(qr.householderQ());
  return q;
}

Eigen::VectorXd column_norms(const Eigen::MatrixXd& m) { return m.colwise().norm().transpose(); }

void finish_report(const CovOperator& op, const Eigen::MatrixXd& b, const Eigen::VectorXd& bnorm,
                   const Eigen::MatrixXd& x, const SolveOptions& opts, SolveReport& rep) {
  Eigen::MatrixXd kx;
  op.apply(Component::cov(), x, kx);
  rep.matvecs += x.cols();
  const Eigen::MatrixXd r = b - kx;
  Eigen::MatrixXd mr;
  Eigen::MatrixXd mb;
  precondition(opts, r, mr);
  precondition(opts, b, mb);
  const auto s = b.cols();
  rep.residuals.resize(s);
  rep.precond_residuals.resize(s);
  rep.converged.assign(static_cast<std::size_t>(s), false);
  for (Eigen::Index j = 0; j < s; ++j) {
    const double res = bnorm(j) > 0.0 ? r.col(j).norm() / bnorm(j) : 0.0;
    const double bmb = b.col(j).dot(mb.col(j));
    const double rmr = std::max(0.0, r.col(j).dot(mr.col(j)));
    rep.residuals(j) = res;
    rep.precond_residuals(j) = bmb > 0.0 ? std::sqrt(rmr / bmb) : 0.0;
    rep.converged[static_cast<std::size_t>(j)] = res <= opts.tol;
  }
}

void check_inputs(const CovOperator& op, const Eigen::MatrixXd& b, const SolveOptions& opts) {
  require(b.rows() == op.size(), ErrorCategory::shape, "solve: right-hand side has wrong length");
  require(b.allFinite(), ErrorCategory::numeric, "solve: right-hand side is not finite");
  require(opts.tol > 0.0 && opts.tol < 1.0, ErrorCategory::config,
          "solve: tolerance must lie in (0, 1)");
  require(opts.max_iter >= 1, ErrorCategory::config, "solve: max_iter must be positive");
  if (opts.preconditioner)
    require(opts.preconditioner->size() == op.size(), ErrorCategory::shape,
            "solve: preconditioner size does not match the operator");
}

}  // namespace

bool SolveReport::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](bool c) { return c; });
}

double SolveReport::max_residual() const {
  return residuals.size() ? residuals.maxCoeff() : 0.0;
}

SolveResult cg_solve(const CovOperator& op, const Eigen::VectorXd& b, const SolveOptions& opts) {
  check_inputs(op, b, opts);
  const Eigen::Index n = b.size();
  SolveResult out;
  auto& rep = out.report;
  Eigen::VectorXd bnorm(1);
  bnorm(0) = b.norm();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, 1);
  if (bnorm(0) == 0.0) {
    out.x = x;
    finish_report(op, b, bnorm, x, opts, rep);
    return out;
  }
  Eigen::MatrixXd r = b;
  Eigen::MatrixXd z;
  precondition(opts, r, z);
  Eigen::MatrixXd q = z;
  double rz = r.col(0).dot(z.col(0));
  Eigen::MatrixXd aq;
  Eigen::VectorXd rel(1);
  for (int it = 1; it <= opts.max_iter; ++it) {
    op.apply(Component::cov(), q, aq);
    ++rep.matvecs;
    const double qaq = q.col(0).dot(aq.col(0));
    if (!(qaq > 0.0) || !std::isfinite(qaq))
      fail(ErrorCategory::numeric,
           "conjugate gradient breakdown at iteration " + std::to_string(it) +
               ": operator is not positive definite along the search direction");
    const double a = rz / qaq;
    x += a * q;
    r -= a * aq;
    rep.iterations = it;
    rel(0) = r.norm() / bnorm(0);
    if (opts.trace) opts.trace(it, rel);
    if (rel(0) <= opts.tol) {
      Eigen::MatrixXd kx;
      op.apply(Component::cov(), x, kx);
      ++rep.matvecs;
      r = b - kx;
      if (r.norm() / bnorm(0) <= opts.tol) break;
      ++rep.restarts;
      precondition(opts, r, z);
      q = z;
      rz = r.col(0).dot(z.col(0));
      continue;
    }
    precondition(opts, r, z);
    const double rz_new = r.col(0).dot(z.col(0));
    q = z + (rz_new / rz) * q;
    rz = rz_new;
  }
  out.x = x;
  finish_report(op, b, bnorm, x, opts, rep);
  return out;
}

SolveResult block_cg_solve(const CovOperator& op, const Eigen::MatrixXd& b,
                           const SolveOptions& opts) {
  check_inputs(op, b, opts);
  const Eigen::Index n = b.rows();
  const Eigen::Index s = b.cols();
  SolveResult out;
  auto& rep = out.report;
  const Eigen::VectorXd bnorm = column_norms(b);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, s);
  Eigen::MatrixXd r = b;

  auto active_columns = [&](const Eigen::VectorXd& rel) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < s; ++j)
      if (rel(j) > opts.tol) cols.push_back(j);
    return cols;
  };
  auto relative = [&](const Eigen::MatrixXd& res) {
    Eigen::VectorXd rel = column_norms(res);
    for (Eigen::Index j = 0; j < s; ++j) rel(j) = bnorm(j) > 0.0 ? rel(j) / bnorm(j) : 0.0;
    return rel;
  };

  Eigen::VectorXd rel = relative(r);
  auto restart_directions = [&]() {
    const auto cols = active_columns(rel);
    Eigen::MatrixXd ra(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) ra.col(static_cast<Eigen::Index>(c)) = r.col(cols[c]);
    Eigen::MatrixXd z;
    precondition(opts, ra, z);
    return orthonormalize(z, rep.deflations);
  };

  Eigen::MatrixXd p = restart_directions();
  Eigen::MatrixXd q;
  for (int it = 1; it <= opts.max_iter && p.cols() > 0; ++it) {
    op.apply(Component::cov(), p, q);
    rep.matvecs += p.cols();
    Eigen::MatrixXd pq = p.transpose() * q;
    pq = 0.5 * (pq + pq.transpose()).eval();
    Eigen::LLT<Eigen::MatrixXd> llt(pq);
    if (llt.info() != Eigen::Success || !pq.allFinite())
      fail(ErrorCategory::numeric,
           "block conjugate gradient breakdown at iteration " + std::to_string(it) +
               ": operator is not positive definite on the search space");
    const Eigen::MatrixXd alpha = llt.solve(p.transpose() * r);
    x.noalias() += p * alpha;
    r.noalias() -= q * alpha;
    rep.iterations = it;
    rel = relative(r);
    if (opts.trace) opts.trace(it, rel);

    auto cols = active_columns(rel);
    if (cols.empty()) {
      Eigen::MatrixXd kx;
      op.apply(Component::cov(), x, kx);
      rep.matvecs += s;
      r = b - kx;
      rel = relative(r);
      if (active_columns(rel).empty()) break;
      ++rep.restarts;
      p = restart_directions();
      continue;
    }
    Eigen::MatrixXd ra(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) ra.col(static_cast<Eigen::Index>(c)) = r.col(cols[c]);
    Eigen::MatrixXd z;
    precondition(opts, ra, z);
    const Eigen::MatrixXd beta = -llt.solve(q.transpose() * z);
    z.noalias() += p * beta;
    p = orthonormalize(z, rep.deflations);
  }
  out.x = x;
  finish_report(op, b, bnorm, x, opts, rep);
  return out;
}

}  // namespace gpscore
