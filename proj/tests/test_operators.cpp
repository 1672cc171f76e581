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

#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "gpscore/error.hpp"
#include "gpscore/fft.hpp"
#include "gpscore/operators.hpp"
#include "gpscore/spacetime.hpp"
#include "generators.hpp"

using namespace gpscore;

namespace {

double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace

TEST(Fft, NextFastSize) {
  EXPECT_EQ(next_fast_size(1), 1u);
  EXPECT_EQ(next_fast_size(11), 12u);
  EXPECT_EQ(next_fast_size(97), 98u);
  EXPECT_EQ(next_fast_size(1025), 1029u);
}

TEST(Fft, RoundTrip) {
  testgen::Gen gen(31);
  RealFft fft({6, 5});
  FftBuffer<double> in(fft.real_size()), out(fft.real_size());
  FftBuffer<std::complex<double>> spec(fft.complex_size());
  std::vector<double> orig(fft.real_size());
  for (std::size_t i = 0; i < fft.real_size(); ++i) in[i] = orig[i] = gen.normal();
  fft.forward(in.data(), spec.data());
  fft.inverse(spec.data(), out.data());
  for (std::size_t i = 0; i < fft.real_size(); ++i)
    EXPECT_NEAR(out[i] / static_cast<double>(fft.real_size()), orig[i], 1e-13);
}

TEST(LatticeOperator, MatchesDenseOnRandomGrids) {
  testgen::Gen gen(32);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t d = static_cast<std::size_t>(gen.integer(1, 2));
    const auto grid = d == 1 ? gen.grid(1, 30, 200) : gen.grid(2, 6, 22);
    const bool power = trial % 2 == 0;
    const int tau = power ? gen.integer(1, 2) : gen.integer(0, 1);
    const auto model = power ? gen.power_law(d, tau) : gen.matern(d);
    const auto plan = build_filter_plan(grid, tau);
    if (plan.size() == 0 || plan.size() > 500) continue;
    const auto dense = build_operator(model, grid, plan, Backend::dense);
    const auto fft = build_operator(model, grid, plan, Backend::circulant);
    const Eigen::MatrixXd x = gen.matrix(static_cast<Eigen::Index>(plan.size()), 3);
    for (std::size_t slot = 0; slot <= model.num_params(); ++slot) {
      const auto which = slot == 0 ? Component::cov() : Component::partial(slot - 1);
      EXPECT_LT(max_rel_diff(fft->matvec(which, x), dense->matvec(which, x)), 1e-9)
          << "trial " << trial << " slot " << slot;
    }
    const auto all = fft->apply_all(x);
    EXPECT_LT(max_rel_diff(all[0], dense->matvec(Component::cov(), x)), 1e-9);
  }
}

TEST(LatticeOperator, EntryMatchesDense) {
  const auto grid = build_disc_occluded_grid({10, 9}, 1.0, {4.0, 4.0}, 1.5);
  const auto plan = build_filter_plan(grid, 1);
  const auto model = KernelModel::power_law({1.5, {2.0, 3.0}});
  const auto fft = build_operator(model, grid, plan, Backend::circulant);
  const auto dense = build_operator(model, grid, plan, Backend::dense);
  EXPECT_LT(max_rel_diff(fft->to_dense(Component::cov()), dense->to_dense(Component::cov())), 1e-12);
  EXPECT_LT(max_rel_diff(fft->to_dense(Component::partial(2)), dense->to_dense(Component::partial(2))), 1e-12);
}

TEST(LatticeOperator, FilteredCovarianceIsSymmetricPositiveDefinite) {
  const auto grid = build_full_grid({12, 12}, 1.0);
  const auto plan = build_filter_plan(grid, 1);
  const auto op = build_operator(KernelModel::power_law({1.5, {2.0, 2.0}}), grid, plan, Backend::dense);
  const Eigen::MatrixXd k = op->to_dense(Component::cov());
  EXPECT_LT((k - k.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  EXPECT_EQ(llt.info(), Eigen::Success);
}

TEST(LatticeOperator, RejectsAlphaBeyondFilterOrder) {
  const auto grid = build_full_grid({8, 8}, 1.0);
  const auto plan = build_filter_plan(grid, 1);
  try {
    build_operator(KernelModel::power_law({4.2, {2.0, 2.0}}), grid, plan, Backend::circulant);
    FAIL() << "expected a domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::domain);
  }
}

TEST(LatticeOperator, ShapeAndFinitenessChecks) {
  const auto grid = build_full_grid({8}, 1.0);
  const auto plan = build_filter_plan(grid, 0);
  const auto op = build_operator(KernelModel::matern({1.0, 1.0, 2.0}), grid, plan, Backend::circulant);
  EXPECT_THROW(op->matvec(Component::cov(), Eigen::MatrixXd::Ones(7, 1)), Error);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(8, 1);
  bad(3, 0) = std::nan("");
  EXPECT_THROW(op->matvec(Component::cov(), bad), Error);
  EXPECT_THROW(op->matvec(Component::partial(5), Eigen::MatrixXd::Ones(8, 1)), Error);
}

TEST(SpaceTimeOperator, MatchesDense) {
  testgen::Gen gen(33);
  for (int trial = 0; trial < 4; ++trial) {
    const int nlat = gen.integer(2, 4);
    std::vector<double> lats;
    for (int a = 0; a < nlat; ++a) lats.push_back(-3.0 + 1.5 * a);
    const auto layout = band_layout(lats, gen.integer(5, 20), gen.integer(2, 3), 36);
    const auto model = KernelModel::space_time(
        {gen.uniform(0.5, 2.0), gen.uniform(0.5, 3.0), gen.uniform(5.0, 15.0), gen.uniform(-10.0, 10.0)});
    const SpaceTimeOperator op(model, layout);
    const auto dense = build_dense_spacetime_operator(model, layout);
    ASSERT_LE(op.size(), 500);
    const Eigen::MatrixXd x = gen.matrix(op.size(), 2);
    for (std::size_t slot = 0; slot <= 4; ++slot) {
      const auto which = slot == 0 ? Component::cov() : Component::partial(slot - 1);
      EXPECT_LT(max_rel_diff(op.matvec(which, x), dense->matvec(which, x)), 1e-9) << "slot " << slot;
    }
    EXPECT_LT(max_rel_diff(op.to_dense(Component::cov()), dense->to_dense(Component::cov())), 1e-12);
  }
}

TEST(SpaceTimeLayout, OrdersByTimeThenLatitude) {
  const auto layout = band_layout({-1.0, 0.0, 1.0}, 4, 2, 10);
  EXPECT_EQ(layout.num_steps(), 14);
  EXPECT_EQ(layout.num_observed(), 24u);
  for (std::size_t i = 1; i < layout.num_observed(); ++i) {
    const bool later = layout.step_of(i) > layout.step_of(i - 1);
    const bool same = layout.step_of(i) == layout.step_of(i - 1) && layout.latitude_of(i) > layout.latitude_of(i - 1);
    EXPECT_TRUE(later || same);
  }
  EXPECT_NEAR(layout.longitude(layout.num_observed() - 1), 36.0 * 13, 1e-12);
}

TEST(SpaceTimeLayout, BlockingPartitionsWithinDays) {
  testgen::Gen gen(91);
  for (int trial = 0; trial < 20; ++trial) {
    const int lats = gen.integer(1, 8);
    std::vector<double> latitudes;
    for (int a = 0; a < lats; ++a) latitudes.push_back(a);
    const int spd = gen.integer(6, 20);
    const auto layout = band_layout(latitudes, gen.integer(1, spd), gen.integer(1, 4), spd);
    const std::size_t N = std::size_t{1} << gen.integer(0, 4);
    const auto a = spacetime_blocking(layout, N);
    std::vector<int> seen(layout.num_observed(), 0);
    for (std::size_t b = 0; b < a.num_blocks(); ++b) {
      ASSERT_EQ(a.blocks[b].size(), N);
      const auto day = layout.step_of(a.blocks[b].front()) / static_cast<std::size_t>(spd);
      for (std::size_t i : a.blocks[b]) {
        EXPECT_EQ(layout.step_of(i) / static_cast<std::size_t>(spd), day);
        EXPECT_EQ(a.block_of[i], static_cast<long>(b));
        ++seen[i];
      }
    }
    for (std::size_t i : a.leftover) {
      EXPECT_EQ(a.block_of[i], -1);
      ++seen[i];
    }
    for (int c : seen) EXPECT_EQ(c, 1);
  }
}
