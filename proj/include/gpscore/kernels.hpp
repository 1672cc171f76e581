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

// Covariance and generalized-covariance functions with analytic partial
// derivatives with respect to their parameters.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace gpscore {

/// Power-law generalized covariance, theta = (alpha, l_1, ..., l_d).
struct PowerLawParams {
  double alpha = 1.0;
  std::vector<double> lengths;
};

/// Isotropic Matern covariance sigma2 * M_nu(|x| / range). nu is held fixed,
/// so theta = (sigma2, range).
struct MaternParams {
  double nu = 1.0;
  double sigma2 = 1.0;
  double range = 1.0;
};

/// Space-time Whittle (Matern nu = 1) covariance with zonal drift,
/// theta = (theta0, theta1, theta2, v). Latitudes and longitudes are in
/// degrees, times in days, drift in degrees of longitude per day.
struct SpaceTimeParams {
  double theta0 = 1.0;
  double theta1 = 1.0;
  double theta2 = 1.0;
  double v = 0.0;
};

enum class KernelKind { power_law, matern, space_time };

/// Radius sqrt(sum x_k^2 / l_k^2). Throws a domain error on nonpositive lengths.
double elliptical_radius(std::span<const double> lag, std::span<const double> lengths);

/// Gamma(-alpha/2) r^alpha, or (-1)^(1+alpha/2) r^alpha log r when alpha/2 is
/// an integer (within 1e-12).
double powerlaw_gc(double r, double alpha);

/// True when alpha/2 is treated as an integer by powerlaw_gc.
bool powerlaw_even_branch(double alpha);

/// Matern correlation (sqrt(2 nu) x)^nu K_nu(sqrt(2 nu) x) / (2^(nu-1) Gamma(nu)).
double matern_corr(double x, double nu);

/// d/dx matern_corr(x, nu) divided by x. Finite for every x > 0; returns the
/// x -> 0 limit when it exists and 0 otherwise (callers multiply by a factor
/// that vanishes at least like x^2).
double matern_dcorr_over_x(double x, double nu);

/// Chord distance between two points of the unit sphere, expressed in degrees
/// of arc (so it approaches the angular separation for nearby points).
double chord_degrees(double lat1_deg, double lon1_deg, double lat2_deg, double lon2_deg);

/// Kernel value together with its parameter gradient.
struct KernelValue {
  double value = 0.0;
  Eigen::VectorXd grad;
};

class KernelModel {
 public:
  static KernelModel power_law(PowerLawParams params);
  /// `dim` is the dimension of lag vectors the Matern kernel will receive.
  static KernelModel matern(MaternParams params, std::size_t dim = 1);
  static KernelModel space_time(SpaceTimeParams params);

  KernelKind kind() const { return kind_; }
  std::size_t num_params() const;
  /// Length of the lag vector accepted by value()/evaluate(). For the
  /// space-time kernel the lag is (lat1, lat2, dlon) and the time lag is
  /// passed separately.
  std::size_t lag_dim() const;

  Eigen::VectorXd params() const;
  KernelModel with_params(const Eigen::VectorXd& theta) const;
  std::vector<std::string> param_names() const;

  const PowerLawParams& power_law_params() const;
  const MaternParams& matern_params() const;
  const SpaceTimeParams& space_time_params() const;

  double value(std::span<const double> lag, double t_lag = 0.0) const;
  /// Writes the p partial derivatives into `grad` and returns the value.
  double evaluate(std::span<const double> lag, double t_lag, std::span<double> grad) const;

 private:
  KernelModel() = default;
  void validate();

  // Power-law constants: Gamma(-alpha/2), -digamma(-alpha/2)/2 and the sign
  // used on the even branch (0 when the odd branch applies).
  double gc_coef_ = 0.0;
  double gc_dlog_coef_ = 0.0;
  int gc_even_sign_ = 0;

  KernelKind kind_ = KernelKind::power_law;
  std::variant<PowerLawParams, MaternParams, SpaceTimeParams> params_;
  std::size_t dim_ = 1;
};

/// Value and all parameter partials at one lag.
KernelValue kernel_derivatives(const KernelModel& model, std::span<const double> lag,
                               double t_lag = 0.0);

}  // namespace gpscore
