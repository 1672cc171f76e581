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

#include "gpscore/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "gpscore/error.hpp"
#include "gpscore/random.hpp"

namespace gpscore {

namespace {

constexpr std::uint64_t kNoisePurpose = 0x51;

std::vector<double> white_noise(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
  auto rng = make_stream(seed, stream, kNoisePurpose);
  std::normal_distribution<double> normal;
  std::vector<double> w(n);
  for (auto& v : w) v = normal(rng);
  return w;
}

}  // namespace

LatticeSampler::LatticeSampler(const LatticeKernel& kernel, std::vector<int> dims,
                               std::vector<std::vector<int>> points) {
  const std::size_t d = dims.size();
  require(d == kernel.dim(), ErrorCategory::shape, "LatticeSampler: dimension mismatch");
  embed_dims_.resize(d);
  for (std::size_t k = 0; k < d; ++k)
    embed_dims_[k] = static_cast<int>(next_fast_size(static_cast<std::size_t>(2 * dims[k] - 1)));

  for (int attempt = 0; attempt < 2; ++attempt) {
    fft_ = std::make_unique<RealFft>(embed_dims_);
    FftBuffer<double> c(fft_->real_size());
    FftBuffer<std::complex<double>> spec(fft_->complex_size());
    std::vector<int> lag(d);
    for (std::size_t idx = 0; idx < fft_->real_size(); ++idx) {
      std::size_t rest = idx;
      for (std::size_t k = 0; k < d; ++k) {
        const int m = embed_dims_[k];
        const int j = static_cast<int>(rest % static_cast<std::size_t>(m));
        rest /= static_cast<std::size_t>(m);
        lag[k] = j <= m / 2 ? j : j - m;
      }
      c[idx] = kernel.evaluate(lag, {});
      require(std::isfinite(c[idx]), ErrorCategory::numeric,
              "LatticeSampler: kernel produced non-finite values");
    }
    fft_->forward(c.data(), spec.data());
    double max_eig = 0.0;
    double min_eig = 0.0;
    for (std::size_t f = 0; f < fft_->complex_size(); ++f) {
      max_eig = std::max(max_eig, spec[f].real());
      min_eig = std::min(min_eig, spec[f].real());
    }
    require(max_eig > 0.0, ErrorCategory::numeric, "LatticeSampler: embedding spectrum is zero");
    min_relative_ = min_eig / max_eig;
    if (min_relative_ >= -kEmbeddingTolerance) {
      sqrt_spectrum_.resize(fft_->complex_size());
      for (std::size_t f = 0; f < fft_->complex_size(); ++f)
        sqrt_spectrum_[f] = std::sqrt(std::max(spec[f].real(), 0.0));
      break;
    }
    if (attempt == 1)
      fail(ErrorCategory::numeric,
           "circulant embedding has negative eigenvalues (relative " +
               std::to_string(min_relative_) + ") even after doubling; use a larger embedding");
    for (auto& m : embed_dims_) m *= 2;
  }

  positions_.reserve(points.size());
  for (const auto& pt : points) {
    std::size_t pos = 0;
    for (std::size_t k = d; k-- > 0;)
      pos = pos * static_cast<std::size_t>(embed_dims_[k]) + static_cast<std::size_t>(pt[k]);
    positions_.push_back(pos);
  }
}

Eigen::VectorXd LatticeSampler::draw(std::uint64_t seed) const {
  const auto w = white_noise(fft_->real_size(), seed, 0);
  FftBuffer<double> real(fft_->real_size());
  std::copy(w.begin(), w.end(), real.data());
  FftBuffer<std::complex<double>> spec(fft_->complex_size());
  fft_->forward(real.data(), spec.data());
  for (std::size_t f = 0; f < fft_->complex_size(); ++f) spec[f] *= sqrt_spectrum_[f];
  fft_->inverse(spec.data(), real.data());
  const double scale = 1.0 / static_cast<double>(fft_->real_size());
  Eigen::VectorXd out(static_cast<Eigen::Index>(positions_.size()));
  for (std::size_t i = 0; i < positions_.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = real[positions_[i]] * scale;
  return out;
}

SpaceTimeSampler::SpaceTimeSampler(const KernelModel& model, const SpaceTimeLayout& layout)
    : num_lat_(layout.num_latitudes()) {
  require(model.kind() == KernelKind::space_time, ErrorCategory::config,
          "SpaceTimeSampler needs the space-time kernel");
  const auto k_steps = static_cast<std::size_t>(layout.num_steps());
  period_ = next_fast_size(2 * k_steps - 1);
  const std::size_t L = num_lat_;

  for (int attempt = 0; attempt < 2; ++attempt) {
    fft_ = std::make_unique<RealFft>(std::vector<int>{static_cast<int>(period_)});
    const std::size_t nc = fft_->complex_size();
    std::vector<Eigen::MatrixXcd> blocks(nc, Eigen::MatrixXcd::Zero(
                                                 static_cast<Eigen::Index>(L),
                                                 static_cast<Eigen::Index>(L)));
    FftBuffer<double> seq(period_);
    FftBuffer<std::complex<double>> spec(nc);
    for (std::size_t a = 0; a < L; ++a) {
      for (std::size_t b = a; b < L; ++b) {
        for (std::size_t j = 0; j < period_; ++j) {
          const long d = j <= period_ / 2 ? static_cast<long>(j)
                                          : static_cast<long>(j) - static_cast<long>(period_);
          seq[j] = spacetime_lag_cov(model, layout, a, b, d, {});
        }
        fft_->forward(seq.data(), spec.data());
        for (std::size_t f = 0; f < nc; ++f) {
          blocks[f](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = spec[f];
          blocks[f](static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) =
              std::conj(spec[f]);
        }
      }
    }
    double max_eig = 0.0;
    double min_eig = 0.0;
    sqrt_blocks_.assign(nc, Eigen::MatrixXcd());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es;
    for (std::size_t f = 0; f < nc; ++f) {
      es.compute(blocks[f]);
      require(es.info() == Eigen::Success, ErrorCategory::numeric,
              "SpaceTimeSampler: eigendecomposition failed");
      const Eigen::VectorXd ev = es.eigenvalues();
      max_eig = std::max(max_eig, ev.maxCoeff());
      min_eig = std::min(min_eig, ev.minCoeff());
      const Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
      sqrt_blocks_[f] = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint();
    }
    require(max_eig > 0.0, ErrorCategory::numeric, "SpaceTimeSampler: embedding is zero");
    min_relative_ = min_eig / max_eig;
    if (min_relative_ >= -kEmbeddingTolerance) break;
    if (attempt == 1)
      fail(ErrorCategory::numeric,
           "block-circulant embedding has negative eigenvalues (relative " +
               std::to_string(min_relative_) + ") even after doubling; use a larger embedding");
    period_ *= 2;
  }

  for (std::size_t i = 0; i < layout.num_observed(); ++i) {
    lat_.push_back(layout.latitude_of(i));
    step_.push_back(layout.step_of(i));
  }
}

Eigen::VectorXd SpaceTimeSampler::draw(std::uint64_t seed) const {
  const std::size_t L = num_lat_;
  const std::size_t nc = fft_->complex_size();
  FftBuffer<double> real(period_);
  std::vector<FftBuffer<std::complex<double>>> noise;
  for (std::size_t a = 0; a < L; ++a) {
    const auto w = white_noise(period_, seed, a);
    std::copy(w.begin(), w.end(), real.data());
    noise.emplace_back(nc);
    fft_->forward(real.data(), noise.back().data());
  }
  std::vector<std::vector<double>> fields(L, std::vector<double>(period_));
  FftBuffer<std::complex<double>> out(nc);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(L));
  std::vector<FftBuffer<std::complex<double>>> mixed;
  for (std::size_t a = 0; a < L; ++a) mixed.emplace_back(nc);
  for (std::size_t f = 0; f < nc; ++f) {
    for (std::size_t a = 0; a < L; ++a) v(static_cast<Eigen::Index>(a)) = noise[a][f];
    const Eigen::VectorXcd y = sqrt_blocks_[f] * v;
    for (std::size_t a = 0; a < L; ++a) mixed[a][f] = y(static_cast<Eigen::Index>(a));
  }
  const double scale = 1.0 / static_cast<double>(period_);
  for (std::size_t a = 0; a < L; ++a) {
    fft_->inverse(mixed[a].data(), real.data());
    for (std::size_t j = 0; j < period_; ++j) fields[a][j] = real[j] * scale;
  }
  Eigen::VectorXd z(static_cast<Eigen::Index>(lat_.size()));
  for (std::size_t i = 0; i < lat_.size(); ++i)
    z(static_cast<Eigen::Index>(i)) = fields[lat_[i]][step_[i]];
  return z;
}

Eigen::VectorXd simulate_gp(const KernelModel& model, const OccludedGrid& grid,
                            const FilterPlan& plan, std::uint64_t seed) {
  LatticeKernel kernel(model, grid.spacing(), plan.tau);
  std::vector<std::vector<int>> points;
  points.reserve(plan.size());
  for (std::size_t f : plan.retained) points.push_back(grid.coords(f));
  return LatticeSampler(kernel, grid.dims(), std::move(points)).draw(seed);
}

Eigen::VectorXd simulate_spacetime(const KernelModel& model, const SpaceTimeLayout& layout,
                                   std::uint64_t seed) {
  return SpaceTimeSampler(model, layout).draw(seed);
}

}  // namespace gpscore
