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
#include <numbers>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gpscore/error.hpp"
#include "gpscore/kernels.hpp"
#include "gpscore/operators.hpp"
#include "generators.hpp"

using namespace gpscore;

namespace {

// K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt, composite Simpson.
double bessel_k_quadrature(double nu, double x) {
  const double upper = std::acosh(60.0 / x + 1.0) + 1.0;
  const int steps = 20000;
  const double h = upper / steps;
  double s = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double t = i * h;
    const double f = std::exp(-x * std::cosh(t)) * std::cosh(nu * t);
    s += f * ((i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  return s * h / 3.0;
}

void expect_gradient_matches(const KernelModel& model, const std::vector<double>& lag, double t,
                             double rel) {
  const auto p = model.num_params();
  std::vector<double> grad(p);
  model.evaluate(lag, t, grad);
  const Eigen::VectorXd theta = model.params();
  for (std::size_t i = 0; i < p; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta(static_cast<Eigen::Index>(i))));
    Eigen::VectorXd up = theta, dn = theta;
    up(static_cast<Eigen::Index>(i)) += h;
    dn(static_cast<Eigen::Index>(i)) -= h;
    const double fd = (model.with_params(up).value(lag, t) - model.with_params(dn).value(lag, t)) / (2.0 * h);
    EXPECT_NEAR(grad[i], fd, rel * std::max(1.0, std::abs(fd))) << "parameter " << i;
  }
}

}  // namespace

TEST(PowerLaw, GammaCoefficientAtAlphaOne) {
  // Gamma(-1/2) = -2 sqrt(pi)
  EXPECT_NEAR(powerlaw_gc(1.0, 1.0), -2.0 * std::sqrt(std::numbers::pi), 1e-13);
  EXPECT_NEAR(powerlaw_gc(3.0, 1.0), -6.0 * std::sqrt(std::numbers::pi), 1e-12);
}

TEST(PowerLaw, EvenBranchUsesLog) {
  EXPECT_TRUE(powerlaw_even_branch(2.0));
  EXPECT_FALSE(powerlaw_even_branch(1.5));
  EXPECT_NEAR(powerlaw_gc(2.0, 2.0), 4.0 * std::log(2.0), 1e-13);
  EXPECT_NEAR(powerlaw_gc(2.0, 4.0), -16.0 * std::log(2.0), 1e-12);
}

TEST(PowerLaw, ValueUsesEllipticalRadius) {
  const auto k = KernelModel::power_law({1.5, {2.0, 4.0}});
  const std::vector<double> lag{2.0, 4.0};
  EXPECT_NEAR(k.value(lag), powerlaw_gc(std::sqrt(2.0), 1.5), 1e-13);
  EXPECT_EQ(k.value(std::vector<double>{0.0, 0.0}), 0.0);
}

TEST(PowerLaw, GradientMatchesFiniteDifferences) {
  testgen::Gen gen(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto model = gen.power_law(2, 2);
    const std::vector<double> lag{gen.uniform(-5, 5), gen.uniform(-5, 5)};
    expect_gradient_matches(model, lag, 0.0, 1e-6);
  }
}

TEST(PowerLaw, FilteredEvenBranchIsTheOneSidedLimitUpToTwoOverKFactorial) {
  // Gamma(-k + d) r^(2k + e) with d = -e/2 has finite part
  // 2 (-1)^(k+1) / k! r^(2k) log r once the pole term (a polynomial) is filtered out
  struct Case {
    double alpha;
    int tau;
    double factor;
  };
  for (const Case& c : {Case{2.0, 1, 2.0}, Case{4.0, 2, 1.0}, Case{6.0, 2, 2.0 / 6.0}}) {
    for (int off : {0, 1, 3}) {
      const std::vector<int> offset{off};
      const double h = 1e-5;
      auto value = [&](double alpha) {
        LatticeKernel k(KernelModel::power_law({alpha, {2.5}}), {1.0}, c.tau);
        return k.evaluate(offset, {});
      };
      const double limit = 0.5 * (value(c.alpha - h) + value(c.alpha + h));
      const double even = value(c.alpha);
      EXPECT_NEAR(limit, c.factor * even, 1e-5 * std::max(1.0, std::abs(limit)))
          << "alpha " << c.alpha << " offset " << off;
    }
  }
  expect_gradient_matches(KernelModel::power_law({2.0 + 1e-3, {3.0}}), {1.7}, 0.0, 1e-5);
}

TEST(PowerLaw, RejectsBadParameters) {
  EXPECT_THROW(KernelModel::power_law({1.0, {-1.0}}), Error);
  EXPECT_THROW(KernelModel::power_law({0.0, {1.0}}), Error);
  EXPECT_THROW(KernelModel::power_law({1.0, {}}), Error);
}

TEST(Matern, HalfIsExponential) {
  for (double x : {0.1, 0.7, 2.0, 5.0}) EXPECT_NEAR(matern_corr(x, 0.5), std::exp(-x), 1e-13);
  EXPECT_EQ(matern_corr(0.0, 1.0), 1.0);
}

TEST(Matern, AgreesWithBesselQuadrature) {
  for (double nu : {0.75, 1.0, 1.5, 2.5}) {
    for (double x : {0.05, 0.3, 1.0, 3.0, 8.0}) {
      const double z = std::sqrt(2.0 * nu) * x;
      const double expected = std::pow(z, nu) * bessel_k_quadrature(nu, z) /
                              (std::pow(2.0, nu - 1.0) * std::tgamma(nu));
      EXPECT_NEAR(matern_corr(x, nu), expected, 1e-9) << "nu=" << nu << " x=" << x;
    }
  }
}

TEST(Matern, GradientMatchesFiniteDifferences) {
  testgen::Gen gen(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto model = gen.matern(2);
    expect_gradient_matches(model, {gen.uniform(-6, 6), gen.uniform(-6, 6)}, 0.0, 1e-6);
  }
}

TEST(Matern, DerivativeOverXLimit) {
  // nu > 1: the limit is -nu / (nu - 1)
  EXPECT_NEAR(matern_dcorr_over_x(1e-7, 2.5), -2.5 / 1.5, 1e-6);
  EXPECT_NEAR(matern_dcorr_over_x(0.0, 2.5), -2.5 / 1.5, 1e-15);
}

TEST(SpaceTime, ChordDegrees) {
  EXPECT_NEAR(chord_degrees(0, 0, 0, 1), 2.0 * std::sin(std::numbers::pi / 360.0) * 180.0 / std::numbers::pi,
              1e-12);
  EXPECT_NEAR(chord_degrees(0, 0, 0, 180), 2.0 * 180.0 / std::numbers::pi, 1e-12);
  EXPECT_NEAR(chord_degrees(10, 20, 10, 20), 0.0, 1e-12);
  // nearby points: close to the angular separation
  EXPECT_NEAR(chord_degrees(0, 0, 0.5, 0), 0.5, 1e-5);
}

TEST(SpaceTime, ZeroDriftIsSymmetricInTime) {
  const auto k = KernelModel::space_time({1.0, 2.0, 10.0, 0.0});
  const std::vector<double> lag{3.0, -2.0, 5.0};
  const std::vector<double> neg{3.0, -2.0, -5.0};
  EXPECT_NEAR(k.value(lag, 0.7), k.value(neg, -0.7), 1e-14);
  EXPECT_NEAR(k.value(lag, 0.7), k.value(neg, 0.7), 1e-14);
}

TEST(SpaceTime, DriftShiftsLongitude) {
  const auto k = KernelModel::space_time({1.0, 2.0, 10.0, -8.0});
  // a point moving with the drift keeps the spatial part at zero
  const std::vector<double> moved{5.0, 5.0, -8.0 * 0.5};
  const auto still = KernelModel::space_time({1.0, 2.0, 10.0, 0.0});
  EXPECT_NEAR(k.value(moved, 0.5), still.value(std::vector<double>{5.0, 5.0, 0.0}, 0.5), 1e-13);
}

TEST(SpaceTime, GradientMatchesFiniteDifferences) {
  testgen::Gen gen(13);
  for (int trial = 0; trial < 40; ++trial) {
    const auto model = KernelModel::space_time(
        {gen.uniform(0.5, 2.0), gen.uniform(0.5, 3.0), gen.uniform(3.0, 15.0), gen.uniform(-10.0, 10.0)});
    const std::vector<double> lag{gen.uniform(-10, 10), gen.uniform(-10, 10), gen.uniform(-30, 30)};
    expect_gradient_matches(model, lag, gen.uniform(-2.0, 2.0), 1e-6);
  }
}

TEST(KernelModel, ParamsRoundTrip) {
  const auto k = KernelModel::power_law({1.2, {3.0, 4.0}});
  Eigen::VectorXd theta(3);
  theta << 0.8, 2.0, 5.0;
  const auto k2 = k.with_params(theta);
  EXPECT_EQ(k2.params(), theta);
  EXPECT_EQ(k2.param_names().size(), 3u);
  EXPECT_THROW(k.with_params(Eigen::VectorXd::Ones(2)), Error);
}
