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

#include "gpscore/score.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "gpscore/error.hpp"

namespace gpscore {

namespace {

Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& k) {
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  require(llt.info() == Eigen::Success, ErrorCategory::numeric,
          "covariance matrix is not numerically positive definite");
  return llt;
}

std::vector<Eigen::MatrixXd> w_matrices(const DenseOperator& op,
                                        const Eigen::LLT<Eigen::MatrixXd>& llt) {
  std::vector<Eigen::MatrixXd> w;
  for (std::size_t i = 0; i < op.num_params(); ++i)
    w.push_back(llt.solve(op.matrix(Component::partial(i))));
  return w;
}

}  // namespace

SolveResult solve_covariance(const CovOperator& op, const Eigen::MatrixXd& b,
                             const ScoreOptions& opts) {
  if (opts.strategy == SolveStrategy::direct) {
    SolveResult out;
    const auto* dense = dynamic_cast<const DenseOperator*>(&op);
    const Eigen::MatrixXd k = dense ? dense->matrix(Component::cov()) : op.to_dense(Component::cov());
    const auto llt = factorize(k);
    out.x = llt.solve(b);
    const Eigen::MatrixXd r = b - k * out.x;
    const auto s = b.cols();
    out.report.residuals.resize(s);
    out.report.precond_residuals.resize(s);
    out.report.converged.assign(static_cast<std::size_t>(s), true);
    for (Eigen::Index j = 0; j < s; ++j) {
      const double bn = b.col(j).norm();
      out.report.residuals(j) = bn > 0.0 ? r.col(j).norm() / bn : 0.0;
      out.report.precond_residuals(j) = out.report.residuals(j);
    }
    return out;
  }
  SolveResult out = block_cg_solve(op, b, opts.solve);
  if (!out.report.all_converged())
    fail(ErrorCategory::convergence,
         "linear solve did not converge: " + std::to_string(out.report.iterations) +
             " iterations, max relative residual " + std::to_string(out.report.max_residual()));
  return out;
}

ScoreEval assemble_g(const CovOperator& op, const Eigen::VectorXd& kinv_z,
                     const Eigen::MatrixXd& u, const Eigen::MatrixXd& kinv_u) {
  const std::size_t p = op.num_params();
  const Eigen::Index N = u.cols();
  Eigen::MatrixXd x(kinv_z.size(), N + 1);
  x.col(0) = kinv_z;
  x.rightCols(N) = kinv_u;
  const auto prods = op.apply_all(x);
  ScoreEval out;
  out.quad.resize(static_cast<Eigen::Index>(p));
  out.trace.resize(static_cast<Eigen::Index>(p));
  out.g.resize(static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    const auto& ki = prods[i + 1];
    const auto ii = static_cast<Eigen::Index>(i);
    out.quad(ii) = kinv_z.dot(ki.col(0));
    out.trace(ii) = trace_estimate(u, ki.rightCols(N));
    out.g(ii) = 0.5 * out.quad(ii) - 0.5 * out.trace(ii);
  }
  out.kinv_z = kinv_z;
  out.kinv_u = kinv_u;
  return out;
}

ScoreEval eval_g(const CovOperator& op, const Eigen::VectorXd& z, const ProbeSet& probes,
                 const ScoreOptions& opts) {
  require(z.size() == op.size() && probes.size() == op.size(), ErrorCategory::shape,
          "eval_g: data or probes do not match the operator");
  const Eigen::Index N = probes.count();
  Eigen::MatrixXd rhs(op.size(), N + 1);
  rhs.col(0) = z;
  rhs.rightCols(N) = probes.u;
  auto solved = solve_covariance(op, rhs, opts);
  ScoreEval out = assemble_g(op, solved.x.col(0), probes.u, solved.x.rightCols(N));
  out.zkz = z.dot(out.kinv_z);
  out.report = std::move(solved.report);
  return out;
}

Eigen::VectorXd exact_score(const DenseOperator& op, const Eigen::VectorXd& z) {
  const auto llt = factorize(op.matrix(Component::cov()));
  const Eigen::VectorXd a = llt.solve(z);
  Eigen::VectorXd g(static_cast<Eigen::Index>(op.num_params()));
  for (std::size_t i = 0; i < op.num_params(); ++i) {
    const auto& ki = op.matrix(Component::partial(i));
    g(static_cast<Eigen::Index>(i)) = 0.5 * a.dot(ki * a) - 0.5 * llt.solve(ki).trace();
  }
  return g;
}

Eigen::MatrixXd exact_fisher(const DenseOperator& op) {
  const auto w = w_matrices(op, factorize(op.matrix(Component::cov())));
  const auto p = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd f(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j <= i; ++j)
      f(i, j) = f(j, i) =
          0.5 * w[static_cast<std::size_t>(i)].cwiseProduct(w[static_cast<std::size_t>(j)].transpose()).sum();
  return f;
}

Eigen::MatrixXd exact_j(const DenseOperator& op) {
  const auto w = w_matrices(op, factorize(op.matrix(Component::cov())));
  const auto p = static_cast<Eigen::Index>(w.size());
  Eigen::MatrixXd j(p, p);
  for (Eigen::Index a = 0; a < p; ++a) {
    for (Eigen::Index b = 0; b < p; ++b) {
      const auto& wa = w[static_cast<std::size_t>(a)];
      const auto& wb = w[static_cast<std::size_t>(b)];
      const double tr_ab = wa.cwiseProduct(wb.transpose()).sum();
      const double tr_abt = wa.cwiseProduct(wb).sum();
      const double diag = wa.diagonal().dot(wb.diagonal());
      j(a, b) = tr_ab + tr_abt - 2.0 * diag;
    }
  }
  return j;
}

double exact_loglik(const DenseOperator& op, const Eigen::VectorXd& z) {
  const auto llt = factorize(op.matrix(Component::cov()));
  const Eigen::MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const double n = static_cast<double>(z.size());
  return -0.5 * z.dot(llt.solve(z)) - 0.5 * logdet -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

Eigen::VectorXd eval_h_symmetrized(const DenseOperator& op, const Eigen::VectorXd& z,
                                   const ProbeSet& probes) {
  const auto llt = factorize(op.matrix(Component::cov()));
  const Eigen::VectorXd a = llt.solve(z);
  // V = G^{-1} U with G = L'
  const Eigen::MatrixXd v = llt.matrixU().solve(probes.u);
  Eigen::VectorXd h(static_cast<Eigen::Index>(op.num_params()));
  for (std::size_t i = 0; i < op.num_params(); ++i) {
    const auto& ki = op.matrix(Component::partial(i));
    h(static_cast<Eigen::Index>(i)) = 0.5 * a.dot(ki * a) - 0.5 * trace_estimate(v, ki * v);
  }
  return h;
}

Eigen::MatrixXd godambe(const Eigen::MatrixXd& fisher, const Eigen::MatrixXd& j, std::size_t N) {
  const Eigen::MatrixXd inner = fisher + j / (4.0 * static_cast<double>(N));
  Eigen::MatrixXd g = fisher * inner.partialPivLu().solve(fisher);
  return 0.5 * (g + g.transpose());
}

Eigen::VectorXd inverse_sd(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd inv = m.partialPivLu().inverse();
  Eigen::VectorXd sd(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    sd(i) = inv(i, i) > 0.0 ? std::sqrt(inv(i, i)) : std::nan("");
  return sd;
}

InfoEstimates information_from_products(const Eigen::MatrixXd& u,
                                        const std::vector<Eigen::MatrixXd>& a,
                                        const std::vector<Eigen::MatrixXd>& b, std::size_t N) {
  require(a.size() == b.size(), ErrorCategory::shape, "information: product lists differ");
  const auto p = static_cast<Eigen::Index>(a.size());
  const double n2 = static_cast<double>(u.cols());
  require(u.cols() >= 2, ErrorCategory::design, "information estimates need at least 2 probes");
  InfoEstimates out;
  out.n2 = static_cast<std::size_t>(u.cols());
  out.n = N;
  out.i_hat.resize(p, p);
  out.j_hat.resize(p, p);
  std::vector<Eigen::VectorXd> d;
  for (const auto& ai : a) d.push_back(diagonal_estimate(u, ai));
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const auto si = static_cast<std::size_t>(i);
      const auto sj = static_cast<std::size_t>(j);
      const double ba = b[si].cwiseProduct(a[sj]).sum() / n2;
      const double ab = b[sj].cwiseProduct(a[si]).sum() / n2;
      const double bb = b[si].cwiseProduct(b[sj]).sum() / n2;
      out.i_hat(i, j) = 0.25 * (ba + ab);
      out.j_hat(i, j) = ba + bb - 2.0 * d[si].dot(d[sj]);
    }
  }
  out.j_sym = 0.5 * (out.j_hat + out.j_hat.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(out.i_hat);
  out.indefinite = llt.info() != Eigen::Success;
  out.g_hat = godambe(out.i_hat, out.j_sym, N);
  return out;
}

InfoEstimates estimate_information(const CovOperator& op, const Eigen::MatrixXd& u2,
                                   std::size_t N, const ScoreOptions& opts,
                                   std::optional<std::pair<std::size_t, double>> scale) {
  require(u2.rows() == op.size(), ErrorCategory::shape, "information probes do not match");
  const std::size_t p = op.num_params();
  const Eigen::Index n2 = u2.cols();
  // K_i U for every parameter that needs a solve, stacked after U itself.
  const auto ku = op.apply_all(u2);
  std::vector<std::size_t> solve_params;
  for (std::size_t i = 0; i < p; ++i)
    if (!scale || scale->first != i) solve_params.push_back(i);
  Eigen::MatrixXd rhs(op.size(), n2 * static_cast<Eigen::Index>(1 + solve_params.size()));
  rhs.leftCols(n2) = u2;
  for (std::size_t q = 0; q < solve_params.size(); ++q)
    rhs.middleCols(n2 * static_cast<Eigen::Index>(q + 1), n2) = ku[solve_params[q] + 1];
  auto solved = solve_covariance(op, rhs, opts);
  const Eigen::MatrixXd kinv_u = solved.x.leftCols(n2);
  const auto kk = op.apply_all(kinv_u);
  std::vector<Eigen::MatrixXd> a(p), b(p);
  for (std::size_t q = 0; q < solve_params.size(); ++q)
    a[solve_params[q]] = solved.x.middleCols(n2 * static_cast<Eigen::Index>(q + 1), n2);
  for (std::size_t i = 0; i < p; ++i) b[i] = kk[i + 1];
  if (scale) a[scale->first] = u2 / scale->second;
  auto out = information_from_products(u2, a, b, N);
  out.report = std::move(solved.report);
  return out;
}

double efficiency_bound(double kappa, std::size_t N) {
  require(kappa >= 1.0 && N >= 1, ErrorCategory::domain,
          "efficiency_bound needs kappa >= 1 and N >= 1");
  return (kappa + 1.0) * (kappa + 1.0) / (4.0 * static_cast<double>(N) * kappa);
}

}  // namespace gpscore
