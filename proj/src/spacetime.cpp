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

#include "gpscore/spacetime.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "gpscore/error.hpp"

namespace gpscore {

SpaceTimeLayout::SpaceTimeLayout(std::vector<double> latitudes, int steps_per_day, int num_steps,
                                 std::vector<char> mask)
    : latitudes_(std::move(latitudes)),
      steps_per_day_(steps_per_day),
      num_steps_(num_steps),
      mask_(std::move(mask)) {
  require(!latitudes_.empty(), ErrorCategory::geometry, "space-time layout needs latitudes");
  require(steps_per_day_ > 0 && num_steps_ > 0, ErrorCategory::geometry,
          "space-time layout needs positive step counts");
  require(mask_.size() == latitudes_.size() * static_cast<std::size_t>(num_steps_),
          ErrorCategory::shape, "space-time mask has the wrong size");
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (mask_[i]) observed_.push_back(i);
  require(!observed_.empty(), ErrorCategory::geometry, "space-time layout has no observations");
}

BlockAssignment spacetime_blocking(const SpaceTimeLayout& layout, std::size_t N) {
  require(N >= 1, ErrorCategory::design, "spacetime_blocking: block size must be positive");
  const std::size_t n = layout.num_observed();
  const int rows = static_cast<int>(layout.num_latitudes());
  const int width = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(N)))));
  const int nstripes = std::max(1, rows / width);
  std::vector<int> stripe_of_row(static_cast<std::size_t>(rows));
  int row = 0;
  for (int s = 0; s < nstripes; ++s) {
    const int w = rows / nstripes + (s < rows % nstripes ? 1 : 0);
    for (int k = 0; k < w; ++k) stripe_of_row[static_cast<std::size_t>(row++)] = s;
  }
  std::vector<std::array<long, 4>> keys(n);  // day, stripe, signed step, latitude
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<long>(layout.step_of(i));
    const auto a = static_cast<long>(layout.latitude_of(i));
    const int s = stripe_of_row[static_cast<std::size_t>(a)];
    keys[i] = {k / layout.steps_per_day(), s, (s % 2 == 0) ? k : -k, a};
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return keys[x] < keys[y]; });

  BlockAssignment out;
  out.block_size = N;
  out.stripe_width = width;
  out.block_of.assign(n, -1);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start;
    while (end < n && keys[order[end]][0] == keys[order[start]][0]) ++end;
    std::size_t pos = start;
    for (; pos + N <= end; pos += N) {
      std::vector<std::size_t> members(order.begin() + static_cast<long>(pos),
                                       order.begin() + static_cast<long>(pos + N));
      for (std::size_t idx : members) out.block_of[idx] = static_cast<long>(out.blocks.size());
      out.blocks.push_back(std::move(members));
    }
    out.leftover.insert(out.leftover.end(), order.begin() + static_cast<long>(pos),
                        order.begin() + static_cast<long>(end));
    start = end;
  }
  return out;
}

SpaceTimeLayout band_layout(std::vector<double> latitudes, int lon_window, int days,
                            int steps_per_day) {
  require(lon_window > 0 && lon_window <= steps_per_day && days > 0, ErrorCategory::geometry,
          "band_layout: invalid window");
  const std::size_t nlat = latitudes.size();
  const int num_steps = (days - 1) * steps_per_day + lon_window;
  std::vector<char> mask(nlat * static_cast<std::size_t>(num_steps), 0);
  for (int day = 0; day < days; ++day)
    for (int j = 0; j < lon_window; ++j)
      for (std::size_t a = 0; a < nlat; ++a)
        mask[static_cast<std::size_t>(day * steps_per_day + j) * nlat + a] = 1;
  return SpaceTimeLayout(std::move(latitudes), steps_per_day, num_steps, std::move(mask));
}

double spacetime_lag_cov(const KernelModel& model, const SpaceTimeLayout& layout, std::size_t a,
                         std::size_t b, long d, std::span<double> grad) {
  const std::array<double, 3> lag{layout.latitudes()[a], layout.latitudes()[b],
                                  layout.lon_step() * static_cast<double>(d)};
  const double t = static_cast<double>(d) / layout.steps_per_day();
  if (grad.empty()) return model.value(lag, t);
  return model.evaluate(lag, t, grad);
}

SpaceTimeOperator::SpaceTimeOperator(const KernelModel& model, const SpaceTimeLayout& layout)
    : model_(model),
      num_params_(model.num_params()),
      num_lat_(layout.num_latitudes()),
      latitudes_(layout.latitudes()),
      steps_per_day_(layout.steps_per_day()) {
  require(model.kind() == KernelKind::space_time, ErrorCategory::config,
          "block-circulant operator needs the space-time kernel");
  const auto k_steps = static_cast<std::size_t>(layout.num_steps());
  period_ = next_fast_size(2 * k_steps - 1);
  lat_.reserve(layout.num_observed());
  step_.reserve(layout.num_observed());
  for (std::size_t i = 0; i < layout.num_observed(); ++i) {
    lat_.push_back(layout.latitude_of(i));
    step_.push_back(layout.step_of(i));
  }

  fft_ = std::make_unique<RealFft>(std::vector<int>{static_cast<int>(period_)});
  const std::size_t npairs = num_lat_ * (num_lat_ + 1) / 2;
  spectra_.assign(num_params_ + 1, std::vector<std::vector<std::complex<double>>>(npairs));
  std::vector<FftBuffer<double>> seqs;
  for (std::size_t s = 0; s <= num_params_; ++s) seqs.emplace_back(period_);
  FftBuffer<std::complex<double>> spectrum(fft_->complex_size());
  std::vector<double> grad(num_params_);
  for (std::size_t a = 0; a < num_lat_; ++a) {
    for (std::size_t b = a; b < num_lat_; ++b) {
      for (auto& s : seqs) s.zero();
      for (std::size_t j = 0; j < period_; ++j) {
        const long d = j <= period_ / 2 ? static_cast<long>(j)
                                        : static_cast<long>(j) - static_cast<long>(period_);
        if (static_cast<std::size_t>(std::labs(d)) >= k_steps) continue;
        seqs[0][j] = spacetime_lag_cov(model_, layout, a, b, d, grad);
        for (std::size_t s = 0; s < num_params_; ++s) seqs[s + 1][j] = grad[s];
      }
      for (std::size_t s = 0; s <= num_params_; ++s) {
        for (std::size_t j = 0; j < period_; ++j)
          require(std::isfinite(seqs[s][j]), ErrorCategory::numeric,
                  "space-time kernel produced non-finite values");
        fft_->forward(seqs[s].data(), spectrum.data());
        spectra_[s][pair_index(a, b)].assign(spectrum.data(),
                                             spectrum.data() + fft_->complex_size());
      }
    }
  }
}

std::size_t SpaceTimeOperator::pair_index(std::size_t a, std::size_t b) const {
  // a <= b; row-major upper triangle
  return a * num_lat_ - a * (a + 1) / 2 + b;
}

void SpaceTimeOperator::transform_apply(const Eigen::MatrixXd& x,
                                        std::span<const std::size_t> slots,
                                        std::vector<Eigen::MatrixXd>& out) const {
  const Eigen::Index n = size();
  require(x.rows() == n, ErrorCategory::shape, "SpaceTimeOperator: input has the wrong length");
  out.resize(slots.size());
  for (auto& o : out) o.resize(n, x.cols());
  const std::size_t nc = fft_->complex_size();
  const double scale = 1.0 / static_cast<double>(period_);
  FftBuffer<double> real(period_);
  std::vector<FftBuffer<std::complex<double>>> xhat;
  for (std::size_t a = 0; a < num_lat_; ++a) xhat.emplace_back(nc);
  FftBuffer<std::complex<double>> acc(nc);
  std::vector<FftBuffer<double>> yreal;
  for (std::size_t a = 0; a < num_lat_; ++a) yreal.emplace_back(period_);

  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (std::size_t a = 0; a < num_lat_; ++a) yreal[a].zero();
    for (Eigen::Index i = 0; i < n; ++i)
      yreal[lat_[static_cast<std::size_t>(i)]][step_[static_cast<std::size_t>(i)]] = x(i, c);
    for (std::size_t a = 0; a < num_lat_; ++a) fft_->forward(yreal[a].data(), xhat[a].data());
    for (std::size_t s = 0; s < slots.size(); ++s) {
      const auto& spec = spectra_[slots[s]];
      for (std::size_t a = 0; a < num_lat_; ++a) {
        acc.zero();
        for (std::size_t b = 0; b < num_lat_; ++b) {
          const auto& sab = spec[a <= b ? pair_index(a, b) : pair_index(b, a)];
          const auto& xb = xhat[b];
          if (a <= b) {
            for (std::size_t f = 0; f < nc; ++f) acc[f] += sab[f] * xb[f];
          } else {
            for (std::size_t f = 0; f < nc; ++f) acc[f] += std::conj(sab[f]) * xb[f];
          }
        }
        fft_->inverse(acc.data(), yreal[a].data());
      }
      for (Eigen::Index i = 0; i < n; ++i)
        out[s](i, c) =
            yreal[lat_[static_cast<std::size_t>(i)]][step_[static_cast<std::size_t>(i)]] * scale;
    }
  }
}

void SpaceTimeOperator::apply(Component which, const Eigen::MatrixXd& x,
                              Eigen::MatrixXd& y) const {
  const std::size_t slot = which.slot();
  std::vector<Eigen::MatrixXd> out;
  transform_apply(x, std::span<const std::size_t>(&slot, 1), out);
  y = std::move(out[0]);
}

std::vector<Eigen::MatrixXd> SpaceTimeOperator::apply_all(const Eigen::MatrixXd& x) const {
  std::vector<std::size_t> slots(num_params_ + 1);
  for (std::size_t s = 0; s <= num_params_; ++s) slots[s] = s;
  std::vector<Eigen::MatrixXd> out;
  transform_apply(x, slots, out);
  return out;
}

double SpaceTimeOperator::entry(Component which, Eigen::Index i, Eigen::Index j) const {
  const auto ui = static_cast<std::size_t>(i);
  const auto uj = static_cast<std::size_t>(j);
  const std::array<double, 3> lag{
      latitudes_[lat_[ui]], latitudes_[lat_[uj]],
      360.0 / steps_per_day_ *
          (static_cast<double>(step_[ui]) - static_cast<double>(step_[uj]))};
  const double t = (static_cast<double>(step_[ui]) - static_cast<double>(step_[uj])) /
                   steps_per_day_;
  if (which.is_cov()) return model_.value(lag, t);
  std::array<double, 4> grad{};
  model_.evaluate(lag, t, std::span<double>(grad.data(), num_params_));
  return grad[which.param()];
}

std::unique_ptr<DenseOperator> build_dense_spacetime_operator(const KernelModel& model,
                                                              const SpaceTimeLayout& layout) {
  require(model.kind() == KernelKind::space_time, ErrorCategory::config,
          "dense space-time operator needs the space-time kernel");
  const auto n = static_cast<Eigen::Index>(layout.num_observed());
  const std::size_t p = model.num_params();
  Eigen::MatrixXd k(n, n);
  std::vector<Eigen::MatrixXd> partials(p, Eigen::MatrixXd(n, n));
  std::vector<double> grad(p);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      const std::array<double, 3> lag{layout.latitudes()[layout.latitude_of(ui)],
                                      layout.latitudes()[layout.latitude_of(uj)],
                                      layout.longitude(ui) - layout.longitude(uj)};
      k(i, j) = model.evaluate(lag, layout.time(ui) - layout.time(uj), grad);
      for (std::size_t s = 0; s < p; ++s) partials[s](i, j) = grad[s];
    }
  }
  return std::make_unique<DenseOperator>(std::move(k), std::move(partials));
}

}  // namespace gpscore
