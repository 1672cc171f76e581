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

#include "gpscore/kernels.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "gpscore/error.hpp"

namespace gpscore {

namespace {

constexpr double kEvenBranchTol = 1e-12;
constexpr double kMaternSmallX = 1e-8;
constexpr double kDegPerRad = 180.0 / std::numbers::pi;

double bessel_k(double order, double z) {
  return boost::math::cyl_bessel_k(std::abs(order), z);
}

// log(2^(nu-1) Gamma(nu))
double matern_log_norm(double nu) {
  return (nu - 1.0) * std::numbers::ln2 + std::lgamma(nu);
}

}  // namespace

double elliptical_radius(std::span<const double> lag, std::span<const double> lengths) {
  require(lag.size() == lengths.size(), ErrorCategory::shape,
          "elliptical_radius: lag and length vectors differ in size");
  double sum = 0.0;
  for (std::size_t k = 0; k < lag.size(); ++k) {
    require(lengths[k] > 0.0, ErrorCategory::domain,
            "elliptical_radius: length scales must be positive");
    const double scaled = lag[k] / lengths[k];
    sum += scaled * scaled;
  }
  return std::sqrt(sum);
}

bool powerlaw_even_branch(double alpha) {
  const double half = alpha / 2.0;
  return std::abs(half - std::round(half)) < kEvenBranchTol;
}

double powerlaw_gc(double r, double alpha) {
  require(alpha > 0.0, ErrorCategory::domain, "powerlaw_gc: alpha must be positive");
  require(r >= 0.0, ErrorCategory::domain, "powerlaw_gc: radius must be nonnegative");
  if (r == 0.0) return 0.0;
  if (powerlaw_even_branch(alpha)) {
    const long k = std::lround(alpha / 2.0);
    const double sign = ((1 + k) % 2 == 0) ? 1.0 : -1.0;
    return sign * std::pow(r, alpha) * std::log(r);
  }
  return boost::math::tgamma(-alpha / 2.0) * std::pow(r, alpha);
}

double matern_corr(double x, double nu) {
  require(nu > 0.0, ErrorCategory::domain, "matern_corr: nu must be positive");
  require(x >= 0.0, ErrorCategory::domain, "matern_corr: argument must be nonnegative");
  if (x < kMaternSmallX) return 1.0;
  const double z = std::sqrt(2.0 * nu) * x;
  const double k = bessel_k(nu, z);
  if (k == 0.0) return 0.0;
  return std::exp(nu * std::log(z) + std::log(k) - matern_log_norm(nu));
}

double matern_dcorr_over_x(double x, double nu) {
  require(nu > 0.0, ErrorCategory::domain, "matern_dcorr_over_x: nu must be positive");
  if (x <= 0.0) return nu > 1.0 ? -nu / (nu - 1.0) : 0.0;
  // d/dz [z^nu K_nu(z)] = -z^nu K_{nu-1}(z)
  const double z = std::sqrt(2.0 * nu) * x;
  const double k = bessel_k(nu - 1.0, z);
  if (k == 0.0) return 0.0;
  return -2.0 * nu * std::exp((nu - 1.0) * std::log(z) + std::log(k) - matern_log_norm(nu));
}

double chord_degrees(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg) {
  const double a = lat1_deg / kDegPerRad;
  const double b = lat2_deg / kDegPerRad;
  const double dlon = (lon1_deg - lon2_deg) / kDegPerRad;
  const double s1 = std::sin((a - b) / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  return 2.0 * kDegPerRad * std::sqrt(s1 * s1 + std::cos(a) * std::cos(b) * s2 * s2);
}

// --- KernelModel -----------------------------------------------------------

KernelModel KernelModel::power_law(PowerLawParams params) {
  KernelModel m;
  m.kind_ = KernelKind::power_law;
  m.dim_ = params.lengths.size();
  m.params_ = std::move(params);
  m.validate();
  return m;
}

KernelModel KernelModel::matern(MaternParams params, std::size_t dim) {
  KernelModel m;
  m.kind_ = KernelKind::matern;
  m.dim_ = dim;
  m.params_ = params;
  m.validate();
  return m;
}

KernelModel KernelModel::space_time(SpaceTimeParams params) {
  KernelModel m;
  m.kind_ = KernelKind::space_time;
  m.dim_ = 3;
  m.params_ = params;
  m.validate();
  return m;
}

void KernelModel::validate() {
  switch (kind_) {
    case KernelKind::power_law: {
      const auto& p = std::get<PowerLawParams>(params_);
      require(!p.lengths.empty(), ErrorCategory::domain, "power-law kernel needs at least one length");
      require(p.alpha > 0.0 && std::isfinite(p.alpha), ErrorCategory::domain,
              "power-law kernel: alpha must be positive");
      for (double l : p.lengths)
        require(l > 0.0 && std::isfinite(l), ErrorCategory::domain,
                "power-law kernel: lengths must be positive");
      if (powerlaw_even_branch(p.alpha)) {
        const long k = std::lround(p.alpha / 2.0);
        gc_even_sign_ = ((1 + k) % 2 == 0) ? 1 : -1;
      } else {
        gc_even_sign_ = 0;
        gc_coef_ = boost::math::tgamma(-p.alpha / 2.0);
        gc_dlog_coef_ = -0.5 * boost::math::digamma(-p.alpha / 2.0);
      }
      break;
    }
    case KernelKind::matern: {
      const auto& p = std::get<MaternParams>(params_);
      require(dim_ >= 1, ErrorCategory::domain, "matern kernel: dimension must be >= 1");
      require(p.nu > 0.0 && p.sigma2 > 0.0 && p.range > 0.0, ErrorCategory::domain,
              "matern kernel: nu, sigma2 and range must be positive");
      break;
    }
    case KernelKind::space_time: {
      const auto& p = std::get<SpaceTimeParams>(params_);
      require(p.theta0 > 0.0 && p.theta1 > 0.0 && p.theta2 > 0.0 && std::isfinite(p.v),
              ErrorCategory::domain, "space-time kernel: theta0, theta1, theta2 must be positive");
      break;
    }
  }
}

std::size_t KernelModel::num_params() const {
  switch (kind_) {
    case KernelKind::power_law: return 1 + std::get<PowerLawParams>(params_).lengths.size();
    case KernelKind::matern: return 2;
    case KernelKind::space_time: return 4;
  }
  return 0;
}

std::size_t KernelModel::lag_dim() const { return dim_; }

Eigen::VectorXd KernelModel::params() const {
  Eigen::VectorXd theta(num_params());
  switch (kind_) {
    case KernelKind::power_law: {
      const auto& p = std::get<PowerLawParams>(params_);
      theta(0) = p.alpha;
      for (std::size_t k = 0; k < p.lengths.size(); ++k) theta(k + 1) = p.lengths[k];
      break;
    }
    case KernelKind::matern: {
      const auto& p = std::get<MaternParams>(params_);
      theta << p.sigma2, p.range;
      break;
    }
    case KernelKind::space_time: {
      const auto& p = std::get<SpaceTimeParams>(params_);
      theta << p.theta0, p.theta1, p.theta2, p.v;
      break;
    }
  }
  return theta;
}

KernelModel KernelModel::with_params(const Eigen::VectorXd& theta) const {
  require(static_cast<std::size_t>(theta.size()) == num_params(), ErrorCategory::shape,
          "with_params: wrong number of parameters");
  switch (kind_) {
    case KernelKind::power_law: {
      PowerLawParams p;
      p.alpha = theta(0);
      p.lengths.assign(theta.data() + 1, theta.data() + theta.size());
      return power_law(std::move(p));
    }
    case KernelKind::matern: {
      MaternParams p = std::get<MaternParams>(params_);
      p.sigma2 = theta(0);
      p.range = theta(1);
      return matern(p, dim_);
    }
    case KernelKind::space_time:
      return space_time({theta(0), theta(1), theta(2), theta(3)});
  }
  return *this;
}

std::vector<std::string> KernelModel::param_names() const {
  switch (kind_) {
    case KernelKind::power_law: {
      std::vector<std::string> names{"alpha"};
      for (std::size_t k = 0; k < dim_; ++k) names.push_back("l" + std::to_string(k + 1));
      return names;
    }
    case KernelKind::matern: return {"sigma2", "range"};
    case KernelKind::space_time: return {"theta0", "theta1", "theta2", "v"};
  }
  return {};
}

const PowerLawParams& KernelModel::power_law_params() const {
  return std::get<PowerLawParams>(params_);
}
const MaternParams& KernelModel::matern_params() const { return std::get<MaternParams>(params_); }
const SpaceTimeParams& KernelModel::space_time_params() const {
  return std::get<SpaceTimeParams>(params_);
}

double KernelModel::value(std::span<const double> lag, double t_lag) const {
  switch (kind_) {
    case KernelKind::power_law: {
      const auto& p = std::get<PowerLawParams>(params_);
      const double r = elliptical_radius(lag, p.lengths);
      if (r == 0.0) return 0.0;
      const double ra = std::pow(r, p.alpha);
      return gc_even_sign_ != 0 ? gc_even_sign_ * ra * std::log(r) : gc_coef_ * ra;
    }
    case KernelKind::matern: {
      const auto& p = std::get<MaternParams>(params_);
      double d2 = 0.0;
      for (double x : lag) d2 += x * x;
      return p.sigma2 * matern_corr(std::sqrt(d2) / p.range, p.nu);
    }
    case KernelKind::space_time: {
      const auto& p = std::get<SpaceTimeParams>(params_);
      const double s = chord_degrees(lag[0], 0.0, lag[1], lag[2] - p.v * t_lag);
      const double h = std::hypot(t_lag / p.theta1, s / p.theta2);
      return p.theta0 * matern_corr(h, 1.0);
    }
  }
  return 0.0;
}

double KernelModel::evaluate(std::span<const double> lag, double t_lag,
                             std::span<double> grad) const {
  require(grad.size() == num_params(), ErrorCategory::shape,
          "KernelModel::evaluate: gradient buffer has the wrong size");
  require(lag.size() == dim_, ErrorCategory::shape, "KernelModel::evaluate: lag dimension mismatch");
  switch (kind_) {
    case KernelKind::power_law: {
      const auto& p = std::get<PowerLawParams>(params_);
      const double r = elliptical_radius(lag, p.lengths);
      if (r == 0.0) {
        std::fill(grad.begin(), grad.end(), 0.0);
        return 0.0;
      }
      const double alpha = p.alpha;
      const double ra = std::pow(r, alpha);
      const double logr = std::log(r);
      double value;
      double dg_over_r;  // G'(r) / r
      if (gc_even_sign_ != 0) {
        const double sign = gc_even_sign_;
        value = sign * ra * logr;
        grad[0] = sign * ra * logr * logr;
        dg_over_r = sign * (alpha * logr + 1.0) * ra / (r * r);
      } else {
        const double c = gc_coef_;
        value = c * ra;
        grad[0] = c * ra * (logr + gc_dlog_coef_);
        dg_over_r = c * alpha * ra / (r * r);
      }
      for (std::size_t k = 0; k < p.lengths.size(); ++k) {
        const double l = p.lengths[k];
        grad[k + 1] = -dg_over_r * lag[k] * lag[k] / (l * l * l);
      }
      return value;
    }
    case KernelKind::matern: {
      const auto& p = std::get<MaternParams>(params_);
      double d2 = 0.0;
      for (double x : lag) d2 += x * x;
      const double h = std::sqrt(d2) / p.range;
      const double corr = matern_corr(h, p.nu);
      grad[0] = corr;
      grad[1] = h == 0.0 ? 0.0 : -p.sigma2 * matern_dcorr_over_x(h, p.nu) * h * h / p.range;
      return p.sigma2 * corr;
    }
    case KernelKind::space_time: {
      const auto& p = std::get<SpaceTimeParams>(params_);
      const double a = lag[0] / kDegPerRad;
      const double b = lag[1] / kDegPerRad;
      const double delta = (lag[2] - p.v * t_lag) / kDegPerRad;
      const double s1 = std::sin((a - b) / 2.0);
      const double s2 = std::sin(delta / 2.0);
      const double cc = std::cos(a) * std::cos(b);
      const double s_sq = 4.0 * kDegPerRad * kDegPerRad * (s1 * s1 + cc * s2 * s2);
      const double t_sq = t_lag * t_lag;
      const double h = std::sqrt(t_sq / (p.theta1 * p.theta1) + s_sq / (p.theta2 * p.theta2));
      const double corr = matern_corr(h, 1.0);
      grad[0] = corr;
      if (h == 0.0) {
        grad[1] = grad[2] = grad[3] = 0.0;
      } else {
        const double d = matern_dcorr_over_x(h, 1.0);
        const double ds_sq_dv = -2.0 * kDegPerRad * cc * std::sin(delta) * t_lag;
        grad[1] = -p.theta0 * d * t_sq / (p.theta1 * p.theta1 * p.theta1);
        grad[2] = -p.theta0 * d * s_sq / (p.theta2 * p.theta2 * p.theta2);
        grad[3] = p.theta0 * d * ds_sq_dv / (2.0 * p.theta2 * p.theta2);
      }
      return p.theta0 * corr;
    }
  }
  return 0.0;
}

KernelValue kernel_derivatives(const KernelModel& model, std::span<const double> lag,
                               double t_lag) {
  KernelValue out;
  out.grad.resize(static_cast<Eigen::Index>(model.num_params()));
  out.value = model.evaluate(lag, t_lag, std::span<double>(out.grad.data(), out.grad.size()));
  return out;
}

}  // namespace gpscore
