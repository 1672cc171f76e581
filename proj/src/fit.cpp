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

#include "gpscore/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Cholesky>

#include "gpscore/error.hpp"
#include "gpscore/precond.hpp"

namespace gpscore {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

constexpr std::uint64_t kInfoSeedOffset = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kInnerSeedOffset = 0x632be59bd9b4e019ULL;

bool recoverable(const Error& e) {
  return e.category() == ErrorCategory::domain || e.category() == ErrorCategory::numeric ||
         e.category() == ErrorCategory::convergence;
}

std::unique_ptr<DenseOperator> dense_lattice(const KernelModel& model, const OccludedGrid& grid,
                                             const FilterPlan& plan) {
  auto op = build_operator(model, grid, plan, Backend::dense);
  return std::unique_ptr<DenseOperator>(static_cast<DenseOperator*>(op.release()));
}

void note(const std::function<void(const std::string&)>& log, const std::string& msg) {
  if (log) log(msg);
}

std::string format_vector(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os.precision(6);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  return os.str();
}

}  // namespace

double zeroin(const std::function<double(double)>& f, double ax, double bx, double tol,
              double fa, double fb, int max_iter) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double a = ax, b = bx;
  require((fa <= 0.0 && fb >= 0.0) || (fa >= 0.0 && fb <= 0.0), ErrorCategory::convergence,
          "zeroin: f(a) and f(b) must have opposite signs");
  double c = a, fc = fa;
  double d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
      c = a;
      fc = fa;
      d = b - a;
      e = d;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::abs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol1 ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  fail(ErrorCategory::convergence, "zeroin: iteration limit reached");
}

// --- estimating functions ---------------------------------------------------

LatticeEstimatingFunction::LatticeEstimatingFunction(KernelModel family, const OccludedGrid& grid,
                                                     FilterPlan plan, Eigen::VectorXd z,
                                                     ProbeSet probes, Eigen::MatrixXd info_probes,
                                                     Backend backend, ScoreOptions opts)
    : family_(std::move(family)),
      grid_(grid),
      plan_(std::move(plan)),
      z_(std::move(z)),
      probes_(std::move(probes)),
      info_probes_(std::move(info_probes)),
      backend_(backend),
      opts_(std::move(opts)) {
  require(z_.size() == static_cast<Eigen::Index>(plan_.size()), ErrorCategory::shape,
          "data length does not match the filtered grid");
}

Eigen::VectorXd LatticeEstimatingFunction::evaluate(const Eigen::VectorXd& theta) {
  op_ = build_operator(family_.with_params(theta), grid_, plan_, backend_);
  const auto ev = eval_g(*op_, z_, probes_, opts_);
  iterations_ += ev.report.iterations;
  matvecs_ += ev.report.matvecs;
  return ev.g;
}

Eigen::MatrixXd LatticeEstimatingFunction::information() {
  require(op_ != nullptr, ErrorCategory::config, "information requested before evaluation");
  const auto info =
      estimate_information(*op_, info_probes_, static_cast<std::size_t>(probes_.count()), opts_);
  iterations_ += info.report.iterations;
  matvecs_ += info.report.matvecs;
  return info.i_hat;
}

ExactEstimatingFunction::ExactEstimatingFunction(KernelModel family, const OccludedGrid& grid,
                                                 FilterPlan plan, Eigen::VectorXd z)
    : family_(std::move(family)), grid_(grid), plan_(std::move(plan)), z_(std::move(z)) {}

Eigen::VectorXd ExactEstimatingFunction::evaluate(const Eigen::VectorXd& theta) {
  op_ = dense_lattice(family_.with_params(theta), grid_, plan_);
  return exact_score(*op_, z_);
}

Eigen::MatrixXd ExactEstimatingFunction::information() {
  require(op_ != nullptr, ErrorCategory::config, "information requested before evaluation");
  return exact_fisher(*op_);
}

double ExactEstimatingFunction::loglik() {
  require(op_ != nullptr, ErrorCategory::config, "loglik requested before evaluation");
  return exact_loglik(*op_, z_);
}

// --- Fisher scoring ---------------------------------------------------------

ScoringResult fisher_scoring(EstimatingFunction& f, Eigen::VectorXd theta,
                             const std::vector<Eigen::Index>& free,
                             const std::vector<bool>& positive, double abs_tol,
                             double decrement_tol, int max_iter) {
  const auto nf = static_cast<Eigen::Index>(free.size());
  auto part = [&](const Eigen::VectorXd& g) {
    Eigen::VectorXd out(nf);
    for (Eigen::Index k = 0; k < nf; ++k) out(k) = g(free[static_cast<std::size_t>(k)]);
    return out;
  };
  ScoringResult res;
  Eigen::VectorXd g = f.evaluate(theta);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd gf = part(g);
    const double norm = gf.norm();
    if (norm <= abs_tol) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd info = f.information();
    Eigen::MatrixXd iff(nf, nf);
    for (Eigen::Index a = 0; a < nf; ++a)
      for (Eigen::Index b = 0; b < nf; ++b)
        iff(a, b) = info(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (iff + iff.transpose()));
    Eigen::VectorXd step;
    if (llt.info() == Eigen::Success) {
      step = llt.solve(gf);
    } else {
      step = gf.array() / iff.diagonal().array().abs().max(1e-300);
    }
    const double decrement = std::sqrt(std::max(0.0, gf.dot(step)));
    if (decrement <= decrement_tol) {
      res.converged = true;
      break;
    }
    bool accepted = false;
    double s = 1.0;
    for (int h = 0; h < 20 && !accepted; ++h, s *= 0.5) {
      Eigen::VectorXd trial = theta;
      for (Eigen::Index k = 0; k < nf; ++k) {
        const Eigen::Index idx = free[static_cast<std::size_t>(k)];
        trial(idx) += s * step(k);
        if (positive[static_cast<std::size_t>(idx)] && trial(idx) <= 0.5 * theta(idx))
          trial(idx) = 0.5 * theta(idx);
      }
      try {
        const Eigen::VectorXd gt = f.evaluate(trial);
        if (gt.allFinite() && part(gt).norm() < norm) {
          theta = trial;
          g = gt;
          accepted = true;
        }
      } catch (const Error& e) {
        if (!recoverable(e)) throw;
      }
    }
    if (!accepted) {
      // leave the function positioned at theta for later information requests
      g = f.evaluate(theta);
      break;
    }
    res.iterations = it + 1;
  }
  res.theta = theta;
  res.g = g;
  return res;
}

// --- starting values --------------------------------------------------------

namespace {

struct LagMoment {
  std::vector<int> offset;
  double value = 0.0;
};

std::vector<LagMoment> filtered_moments(const OccludedGrid& grid, const FilterPlan& plan,
                                        const Eigen::VectorXd& z) {
  const std::size_t d = grid.dim();
  std::vector<LagMoment> out;
  auto moment = [&](const std::vector<int>& off) {
    double sum = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      auto c = grid.coords(plan.retained[i]);
      for (std::size_t k = 0; k < d; ++k) c[k] += off[k];
      if (!grid.in_bounds(c)) continue;
      const long j = plan.full_to_filtered[grid.linear_index(c)];
      if (j < 0) continue;
      sum += z(static_cast<Eigen::Index>(i)) * z(j);
      ++count;
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
  };
  out.push_back({std::vector<int>(d, 0), moment(std::vector<int>(d, 0))});
  for (std::size_t k = 0; k < d; ++k) {
    for (int h = 1; h <= 2; ++h) {
      std::vector<int> off(d, 0);
      off[k] = h;
      out.push_back({off, moment(off)});
    }
  }
  return out;
}

double moment_loss(const KernelModel& model, const OccludedGrid& grid, int tau,
                   const std::vector<LagMoment>& moments) {
  try {
    LatticeKernel k(model, grid.spacing(), tau);
    double loss = 0.0;
    const double scale = moments[0].value;
    for (const auto& m : moments) {
      const double r = (k.evaluate(m.offset, {}) - m.value) / scale;
      loss += r * r;
    }
    return std::isfinite(loss) ? loss : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

Eigen::VectorXd initial_power_law(const OccludedGrid& grid, const FilterPlan& plan,
                                  const Eigen::VectorXd& z) {
  const std::size_t d = grid.dim();
  const int tau = plan.tau;
  require(tau >= 1, ErrorCategory::config, "power-law fits need at least one filtering step");
  const auto moments = filtered_moments(grid, plan, z);
  require(moments[0].value > 0.0, ErrorCategory::numeric, "data have zero variance");
  const double delta = *std::min_element(grid.spacing().begin(), grid.spacing().end());

  Eigen::VectorXd best(static_cast<Eigen::Index>(d + 1));
  double best_loss = std::numeric_limits<double>::infinity();
  auto consider = [&](const Eigen::VectorXd& theta) {
    const double loss = moment_loss(
        KernelModel::power_law({theta(0), std::vector<double>(theta.data() + 1, theta.data() + theta.size())}),
        grid, tau, moments);
    if (loss < best_loss) {
      best_loss = loss;
      best = theta;
    }
  };
  const double alpha_max = 4.0 * tau - 0.25;
  for (double alpha = 0.25; alpha <= alpha_max + 1e-12; alpha += 0.25) {
    for (int q = 0; q <= 40; ++q) {
      Eigen::VectorXd theta(static_cast<Eigen::Index>(d + 1));
      theta(0) = alpha;
      theta.tail(static_cast<Eigen::Index>(d)).setConstant(delta * 0.25 * std::pow(400.0, q / 40.0));
      consider(theta);
    }
  }
  require(std::isfinite(best_loss), ErrorCategory::numeric, "no admissible starting value");
  for (int pass = 0; pass < 3; ++pass) {
    const Eigen::VectorXd center = best;
    for (int q = -12; q <= 12; ++q) {
      Eigen::VectorXd theta = center;
      theta(0) = center(0) + 0.02 * q;
      if (theta(0) <= 0.05 || theta(0) >= 4.0 * tau - 0.05) continue;
      consider(theta);
    }
    for (std::size_t k = 0; k < d; ++k) {
      const Eigen::VectorXd c2 = best;
      for (int q = -16; q <= 16; ++q) {
        Eigen::VectorXd theta = c2;
        theta(static_cast<Eigen::Index>(k + 1)) *= std::pow(2.0, q / 16.0);
        consider(theta);
      }
    }
  }
  return best;
}

ProbeSet make_fit_probes(const OccludedGrid& grid, const FilterPlan& plan, std::size_t N,
                         Design design, std::uint64_t seed) {
  if (design == Design::independent)
    return sample_independent_probes(static_cast<Eigen::Index>(plan.size()), N, seed);
  const auto basis = build_factorial_basis(N);
  return sample_dependent_probes(zigzag_blocking(grid, plan, N), basis, seed);
}

// --- lattice fits -----------------------------------------------------------

namespace {

void attach_information(FitReport& rep, InfoEstimates info) {
  rep.sd_fisher = inverse_sd(info.i_hat);
  rep.sd_godambe = inverse_sd(info.g_hat);
  rep.sd_ratio = rep.sd_godambe.cwiseQuotient(rep.sd_fisher);
  rep.info = std::move(info);
}

}  // namespace

FitReport solve_fit(const KernelModel& family, const OccludedGrid& grid, const FilterPlan& plan,
                    const Eigen::VectorXd& z, const FitOptions& opts) {
  const auto t0 = Clock::now();
  FitReport rep;
  rep.names = family.param_names();
  rep.seed = opts.seed;
  rep.probes = opts.probes;
  rep.design = opts.design;
  rep.exact = opts.exact;
  rep.n = plan.size();
  rep.tau = plan.tau;
  const auto p = static_cast<Eigen::Index>(family.num_params());
  const auto n = static_cast<Eigen::Index>(plan.size());
  require(z.size() == n, ErrorCategory::shape, "data length does not match the filtered grid");

  if (opts.theta0) {
    require(opts.theta0->size() == p, ErrorCategory::config, "initial value has wrong length");
    rep.theta_init = *opts.theta0;
  } else if (family.kind() == KernelKind::power_law) {
    rep.theta_init = initial_power_law(grid, plan, z);
  } else {
    rep.theta_init = family.params();
  }
  note(opts.log, "initial theta: " + format_vector(rep.theta_init));

  std::unique_ptr<EstimatingFunction> fn;
  LatticeEstimatingFunction* lattice_fn = nullptr;
  ExactEstimatingFunction* exact_fn = nullptr;
  if (opts.exact) {
    auto e = std::make_unique<ExactEstimatingFunction>(family, grid, plan, z);
    exact_fn = e.get();
    fn = std::move(e);
  } else {
    auto probes = make_fit_probes(grid, plan, opts.probes, opts.design, opts.seed);
    auto inner = sample_independent_probes(n, opts.n2_inner, opts.seed ^ kInnerSeedOffset);
    auto l = std::make_unique<LatticeEstimatingFunction>(family, grid, plan, z, std::move(probes),
                                                         std::move(inner.u), opts.backend,
                                                         opts.score);
    lattice_fn = l.get();
    fn = std::move(l);
  }

  long evaluations = 0;
  struct CountingFn final : EstimatingFunction {
    EstimatingFunction& f;
    long& count;
    CountingFn(EstimatingFunction& f_, long& c) : f(f_), count(c) {}
    std::size_t num_params() const override { return f.num_params(); }
    Eigen::VectorXd evaluate(const Eigen::VectorXd& theta) override {
      ++count;
      return f.evaluate(theta);
    }
    Eigen::MatrixXd information() override { return f.information(); }
  } counted(*fn, evaluations);

  const Eigen::VectorXd g0 = counted.evaluate(rep.theta_init);
  const double abs_tol = opts.inner_tol * std::max(g0.norm(), 1e-300);

  if (family.kind() == KernelKind::power_law) {
    const auto d = p - 1;
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 1; k <= d; ++k) free.push_back(k);
    std::vector<bool> positive(static_cast<std::size_t>(p), true);
    struct ProfilePoint {
      Eigen::VectorXd theta;
      Eigen::VectorXd g;
      bool converged = false;
    };
    std::map<double, ProfilePoint> profile;
    constexpr double kWarmStartRadius = 0.5;

    auto inner = [&](double alpha) {
      Eigen::VectorXd start = rep.theta_init;
      double nearest = kWarmStartRadius;
      for (const auto& [a, pt] : profile) {
        if (pt.converged && std::abs(a - alpha) <= nearest) {
          nearest = std::abs(a - alpha);
          start = pt.theta;
        }
      }
      start(0) = alpha;
      const auto res =
          fisher_scoring(counted, start, free, positive, abs_tol, opts.decrement_tol, opts.inner_max_iter);
      if (!res.converged)
        note(opts.log, "inner solve at alpha=" + std::to_string(alpha) + " stopped early");
      profile[alpha] = {res.theta, res.g, res.converged};
      rep.trace.push_back({"inner", res.theta, res.g});
      note(opts.log, "alpha " + std::to_string(alpha) + " -> theta " + format_vector(res.theta) +
                         " g " + format_vector(res.g));
      return res.g(0);
    };

    const double upper = 4.0 * plan.tau;
    const double lo_limit = 0.02;
    const double hi_limit = upper - 0.02;
    double lo = 0.2, hi = upper - 0.2;
    if (opts.bracket) {
      lo = opts.bracket->first;
      hi = opts.bracket->second;
    }
    lo = std::max(lo, lo_limit);
    hi = std::min(hi, hi_limit);
    require(lo < hi, ErrorCategory::config, "empty alpha bracket");
    // bracket endpoints must come from converged inner solves
    auto safe_inner = [&](double alpha) {
      try {
        const double value = inner(alpha);
        return profile[alpha].converged ? value : std::numeric_limits<double>::quiet_NaN();
      } catch (const Error& e) {
        if (!recoverable(e)) throw;
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    double flo = safe_inner(lo), fhi = safe_inner(hi);
    // an endpoint where the solve fails is pulled toward the other end
    for (int repair = 0; repair < 4 && !(std::isfinite(flo) && std::isfinite(fhi)); ++repair) {
      const double w = hi - lo;
      if (!std::isfinite(flo)) {
        lo += 0.25 * w;
        flo = safe_inner(lo);
      }
      if (!std::isfinite(fhi)) {
        hi -= 0.25 * w;
        fhi = safe_inner(hi);
      }
    }
    for (int expand = 0; expand < 3 && !(std::isfinite(flo) && std::isfinite(fhi) && flo * fhi <= 0.0);
         ++expand) {
      const double c = 0.5 * (lo + hi);
      const double w = 0.75 * (hi - lo);
      const double nlo = std::max(lo_limit, c - w);
      const double nhi = std::min(hi_limit, c + w);
      if (nlo < lo) {
        lo = nlo;
        flo = safe_inner(lo);
      }
      if (nhi > hi) {
        hi = nhi;
        fhi = safe_inner(hi);
      }
    }
    if (!(std::isfinite(flo) && std::isfinite(fhi) && flo * fhi <= 0.0)) {
      // widening can step over a sign change; fall back to adjacent converged samples
      const double a0 = rep.theta_init(0);
      double best = std::numeric_limits<double>::infinity();
      const ProfilePoint* prev = nullptr;
      double prev_alpha = 0.0;
      for (const auto& [a, pt] : profile) {
        if (!pt.converged) continue;
        if (prev && prev->g(0) * pt.g(0) <= 0.0) {
          const double dist = a0 < prev_alpha ? prev_alpha - a0 : (a0 > a ? a0 - a : 0.0);
          if (dist < best) {
            best = dist;
            lo = prev_alpha;
            hi = a;
            flo = prev->g(0);
            fhi = pt.g(0);
          }
        }
        prev = &pt;
        prev_alpha = a;
      }
    }
    if (!(std::isfinite(flo) && std::isfinite(fhi) && flo * fhi <= 0.0)) {
      std::ostringstream os;
      os << "no sign change of the alpha equation on the bracket; profile samples:";
      for (const auto& [a, pt] : profile)
        os << " (" << a << ", " << pt.g(0) << (pt.converged ? "" : ", unconverged") << ")";
      fail(ErrorCategory::convergence, os.str());
    }
    const double alpha_hat = zeroin(inner, lo, hi, opts.outer_tol, flo, fhi);
    // final inner solve at the root (warm start makes this cheap)
    inner(alpha_hat);
    const auto& fin = profile[alpha_hat];
    rep.theta_hat = fin.theta;
    rep.g = fin.g;
    rep.converged = fin.converged;
  } else {
    std::vector<Eigen::Index> free;
    for (Eigen::Index k = 0; k < p; ++k) free.push_back(k);
    std::vector<bool> positive(static_cast<std::size_t>(p), true);
    const auto res = fisher_scoring(counted, rep.theta_init, free, positive, abs_tol,
                                    opts.decrement_tol, opts.inner_max_iter);
    rep.theta_hat = res.theta;
    rep.g = res.g;
    rep.converged = res.converged;
    rep.trace.push_back({"scoring", res.theta, res.g});
  }
  rep.evaluations = evaluations;
  rep.fit_seconds = seconds_since(t0);

  if (opts.compute_info) {
    const auto t1 = Clock::now();
    if (opts.exact) {
      exact_fn->evaluate(rep.theta_hat);
      InfoEstimates info;
      info.i_hat = exact_fn->information();
      info.j_hat = Eigen::MatrixXd::Zero(p, p);
      info.j_sym = info.j_hat;
      info.g_hat = info.i_hat;
      info.n = 0;
      attach_information(rep, std::move(info));
    } else {
      lattice_fn->evaluate(rep.theta_hat);
      const auto u2 = sample_independent_probes(n, opts.n2, opts.seed ^ kInfoSeedOffset);
      auto info = estimate_information(lattice_fn->last_operator(), u2.u, opts.probes, opts.score);
      attach_information(rep, std::move(info));
    }
    rep.info_seconds = seconds_since(t1);
  }
  rep.solver_iterations = fn->solver_iterations();
  rep.matvecs = fn->matvecs();
  return rep;
}

// --- space-time fit ---------------------------------------------------------

namespace {

/// Profiled equations in (theta1, theta2, v); the operator is built with
/// theta0 = 1 and the scale enters in closed form.
class SpaceTimeProfile final : public EstimatingFunction {
 public:
  SpaceTimeProfile(const SpaceTimeLayout& layout, Eigen::VectorXd z, ProbeSet probes,
                   Eigen::MatrixXd info_probes, const SpaceTimeFitOptions& opts)
      : layout_(layout),
        z_(std::move(z)),
        probes_(std::move(probes)),
        info_probes_(std::move(info_probes)),
        opts_(opts) {}

  std::size_t num_params() const override { return 3; }

  void build(const Eigen::VectorXd& q) {
    model_ = KernelModel::space_time({1.0, q(0), q(1), q(2)});
    op_ = std::make_unique<SpaceTimeOperator>(model_, layout_);
    score_ = opts_.score;
    if (opts_.use_preconditioner) {
      pre_ = std::make_unique<BandedInverseCholesky>(build_banded_inverse_cholesky(*op_, opts_.depth));
      score_.solve.preconditioner = pre_.get();
    } else {
      pre_.reset();
      score_.solve.preconditioner = nullptr;
    }
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& q) override {
    require(q(0) > 0.0 && q(1) > 0.0, ErrorCategory::domain, "space-time ranges must be positive");
    build(q);
    const auto ev = eval_g(*op_, z_, probes_, score_);
    iterations_ += ev.report.iterations;
    matvecs_ += ev.report.matvecs;
    scale_ = ev.zkz / static_cast<double>(z_.size());
    Eigen::VectorXd g(3);
    for (Eigen::Index i = 0; i < 3; ++i)
      g(i) = 0.5 * ev.quad(i + 1) / scale_ - 0.5 * ev.trace(i + 1);
    return g;
  }

  /// 4 x 4 information at (scale, q) from the given probes.
  InfoEstimates full_information(const Eigen::MatrixXd& u, std::size_t N) {
    auto info = estimate_information(*op_, u, N, score_, std::make_pair(std::size_t{0}, 1.0));
    iterations_ += info.report.iterations;
    matvecs_ += info.report.matvecs;
    const double s = scale_;
    for (auto* m : {&info.i_hat, &info.j_hat, &info.j_sym}) {
      m->row(0) /= s;
      m->col(0) /= s;
    }
    info.g_hat = godambe(info.i_hat, info.j_sym, N);
    return info;
  }

  Eigen::MatrixXd information() override {
    const auto info = full_information(info_probes_, static_cast<std::size_t>(probes_.count()));
    const Eigen::MatrixXd& f = info.i_hat;
    // Schur complement of the scale block
    return f.bottomRightCorner(3, 3) - f.bottomLeftCorner(3, 1) * f.topRightCorner(1, 3) / f(0, 0);
  }

  double scale() const { return scale_; }
  long solver_iterations() const override { return iterations_; }
  long matvecs() const override { return matvecs_; }

 private:
  const SpaceTimeLayout& layout_;
  Eigen::VectorXd z_;
  ProbeSet probes_;
  Eigen::MatrixXd info_probes_;
  const SpaceTimeFitOptions& opts_;
  KernelModel model_ = KernelModel::space_time({});
  std::unique_ptr<SpaceTimeOperator> op_;
  std::unique_ptr<BandedInverseCholesky> pre_;
  ScoreOptions score_;
  double scale_ = 1.0;
  long iterations_ = 0;
  long matvecs_ = 0;
};

}  // namespace

Eigen::VectorXd initial_spacetime(const SpaceTimeLayout& layout, const Eigen::VectorXd& z) {
  const std::size_t L = layout.num_latitudes();
  const auto K = static_cast<std::size_t>(layout.num_steps());
  require(z.size() == static_cast<Eigen::Index>(layout.num_observed()), ErrorCategory::shape,
          "data length does not match the layout");
  std::vector<long> index(L * K, -1);
  for (std::size_t i = 0; i < layout.num_observed(); ++i)
    index[layout.step_of(i) * L + layout.latitude_of(i)] = static_cast<long>(i);

  struct Moment {
    long dlat;
    long dk;
    double value;
  };
  std::vector<Moment> moments;
  auto moment = [&](long dlat, long dk) {
    double sum = 0.0;
    long count = 0;
    for (std::size_t i = 0; i < layout.num_observed(); ++i) {
      const long a = static_cast<long>(layout.latitude_of(i)) + dlat;
      const long k = static_cast<long>(layout.step_of(i)) + dk;
      if (a < 0 || a >= static_cast<long>(L) || k < 0 || k >= static_cast<long>(K)) continue;
      const long j = index[static_cast<std::size_t>(k) * L + static_cast<std::size_t>(a)];
      if (j < 0) continue;
      sum += z(static_cast<Eigen::Index>(i)) * z(j);
      ++count;
    }
    if (count > 0) moments.push_back({dlat, dk, sum / static_cast<double>(count)});
  };
  moment(0, 0);
  for (long dk : {1, 2, 3, 5, 8}) moment(0, dk);
  for (long dlat : {1, 2, 4}) moment(dlat, 0);
  const long spd = layout.steps_per_day();
  for (long shift = -16; shift <= 16; shift += 2) moment(0, spd + shift);
  const double var = moments[0].value;
  require(var > 0.0, ErrorCategory::numeric, "data have zero variance");

  const std::size_t mid = L / 2;
  auto loss = [&](double t1, double t2, double v) {
    const auto model = KernelModel::space_time({var, t1, t2, v});
    double s = 0.0;
    for (const auto& m : moments) {
      const std::size_t a = std::min<std::size_t>(L - 1, mid + static_cast<std::size_t>(std::max(0L, m.dlat)));
      const double c = spacetime_lag_cov(model, layout, a, mid, m.dk, {});
      // the latitude offset sign does not matter at this precision
      (void)a;
      const double r = (c - m.value) / var;
      s += r * r;
    }
    return s;
  };
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd theta(4);
  for (int i1 = 0; i1 <= 24; ++i1) {
    const double t1 = 0.2 * std::pow(100.0, i1 / 24.0);
    for (int i2 = 0; i2 <= 24; ++i2) {
      const double t2 = 1.0 * std::pow(60.0, i2 / 24.0);
      for (int iv = -40; iv <= 40; ++iv) {
        const double v = 0.5 * iv;
        const double l = loss(t1, t2, v);
        if (l < best) {
          best = l;
          theta << var, t1, t2, v;
        }
      }
    }
  }
  return theta;
}

FitReport solve_fit_spacetime(const SpaceTimeLayout& layout, const Eigen::VectorXd& z,
                              const SpaceTimeFitOptions& opts) {
  const auto t0 = Clock::now();
  FitReport rep;
  rep.names = {"theta0", "theta1", "theta2", "v"};
  rep.seed = opts.seed;
  rep.probes = opts.probes;
  rep.design = opts.design;
  rep.n = layout.num_observed();
  const auto n = static_cast<Eigen::Index>(layout.num_observed());
  require(z.size() == n, ErrorCategory::shape, "data length does not match the layout");
  rep.theta_init = opts.theta0 ? *opts.theta0 : initial_spacetime(layout, z);
  require(rep.theta_init.size() == 4, ErrorCategory::config, "space-time start needs 4 values");
  note(opts.log, "initial theta: " + format_vector(rep.theta_init));

  auto probes = opts.design == Design::independent
                    ? sample_independent_probes(n, opts.probes, opts.seed)
                    : sample_dependent_probes(spacetime_blocking(layout, opts.probes),
                                              build_factorial_basis(opts.probes), opts.seed);
  auto inner = sample_independent_probes(n, opts.n2_inner, opts.seed ^ kInnerSeedOffset);
  SpaceTimeProfile fn(layout, z, std::move(probes), std::move(inner.u), opts);
  long evaluations = 0;

  Eigen::VectorXd q = rep.theta_init.tail(3);
  Eigen::VectorXd g = fn.evaluate(q);
  ++evaluations;
  for (int it = 0; it < opts.max_iter; ++it) {
    const Eigen::MatrixXd info = fn.information();
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (info + info.transpose()));
    require(llt.info() == Eigen::Success, ErrorCategory::numeric,
            "profiled information is not positive definite");
    const Eigen::VectorXd step = llt.solve(g);
    const double decrement = std::sqrt(std::max(0.0, g.dot(step)));
    rep.trace.push_back({"scoring", q, g});
    note(opts.log, "iteration " + std::to_string(it) + " q " + format_vector(q) + " g " +
                       format_vector(g) + " decrement " + std::to_string(decrement));
    if (decrement <= opts.decrement_tol) {
      rep.converged = true;
      break;
    }
    // step halving on the information-weighted norm at the current point
    const double current = decrement * decrement;
    bool accepted = false;
    double s = 1.0;
    for (int h = 0; h < 20 && !accepted; ++h, s *= 0.5) {
      Eigen::VectorXd trial = q + s * step;
      for (Eigen::Index k = 0; k < 2; ++k)
        if (trial(k) <= 0.5 * q(k)) trial(k) = 0.5 * q(k);
      try {
        const Eigen::VectorXd gt = fn.evaluate(trial);
        ++evaluations;
        if (gt.allFinite() && gt.dot(llt.solve(gt)) < current) {
          q = trial;
          g = gt;
          accepted = true;
        }
      } catch (const Error& e) {
        if (!recoverable(e)) throw;
      }
    }
    if (!accepted) {
      g = fn.evaluate(q);
      ++evaluations;
      break;
    }
  }
  if (!rep.converged) {
    // position the operator at q for the final information
    g = fn.evaluate(q);
    ++evaluations;
  }
  rep.theta_hat.resize(4);
  rep.theta_hat << fn.scale(), q;
  rep.theta0_profile = fn.scale();
  rep.g.resize(4);
  rep.g << 0.0, g;
  rep.evaluations = evaluations;
  rep.fit_seconds = seconds_since(t0);
  if (opts.compute_info) {
    const auto t1 = Clock::now();
    const auto u2 = sample_independent_probes(n, opts.n2, opts.seed ^ kInfoSeedOffset);
    attach_information(rep, fn.full_information(u2.u, opts.probes));
    rep.info_seconds = seconds_since(t1);
  }
  rep.solver_iterations = fn.solver_iterations();
  rep.matvecs = fn.matvecs();
  return rep;
}

}  // namespace gpscore
