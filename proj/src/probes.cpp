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

#include "gpscore/probes.hpp"

#include <string>

#include "gpscore/error.hpp"
#include "gpscore/random.hpp"

namespace gpscore {

namespace {

constexpr std::uint64_t kColumnPurpose = 0x11;
constexpr std::uint64_t kBlockPurpose = 0x12;

double sign_bit(std::uint64_t bits, int k) { return ((bits >> k) & 1u) ? -1.0 : 1.0; }

void check_basis(const BlockAssignment& assignment, const Eigen::MatrixXd& basis) {
  require(basis.rows() == basis.cols(), ErrorCategory::design, "factorial basis must be square");
  require(static_cast<std::size_t>(basis.cols()) == assignment.block_size, ErrorCategory::design,
          "factorial basis size " + std::to_string(basis.cols()) +
              " does not match block size " + std::to_string(assignment.block_size));
}

}  // namespace

const char* to_string(Design design) {
  return design == Design::independent ? "independent" : "dependent";
}

Design parse_design(const std::string& name) {
  if (name == "independent") return Design::independent;
  if (name == "dependent") return Design::dependent;
  fail(ErrorCategory::config, "unknown probe design '" + name + "'");
}

bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

std::size_t round_down_power_of_two(std::size_t n) {
  require(n >= 1, ErrorCategory::design, "probe count must be positive");
  std::size_t p = 1;
  while (p * 2 <= n) p *= 2;
  return p;
}

Eigen::MatrixXd build_factorial_basis(std::size_t N) {
  require(is_power_of_two(N), ErrorCategory::design,
          "dependent design needs a power-of-two probe count, got " + std::to_string(N));
  Eigen::MatrixXd h = Eigen::MatrixXd::Ones(1, 1);
  while (static_cast<std::size_t>(h.rows()) < N) {
    const auto m = h.rows();
    Eigen::MatrixXd next(2 * m, 2 * m);
    next << h, h, h, -h;
    h = std::move(next);
  }
  return h;
}

ProbeSet sample_independent_probes(Eigen::Index n, std::size_t N, std::uint64_t seed) {
  require(n >= 1 && N >= 1, ErrorCategory::design, "probe dimensions must be positive");
  ProbeSet out;
  out.u.resize(n, static_cast<Eigen::Index>(N));
  out.design = Design::independent;
  out.seed = seed;
  for (std::size_t j = 0; j < N; ++j) {
    auto rng = make_stream(seed, j, kColumnPurpose);
    for (Eigen::Index i = 0; i < n; ++i) out.u(i, static_cast<Eigen::Index>(j)) = rademacher(rng);
  }
  return out;
}

ProbeSet sample_dependent_probes(const BlockAssignment& assignment, const Eigen::MatrixXd& basis,
                                 std::uint64_t seed) {
  check_basis(assignment, basis);
  const std::size_t N = assignment.block_size;
  const auto n = static_cast<Eigen::Index>(assignment.size());
  if (N == 1) {
    ProbeSet out = sample_independent_probes(n, 1, seed);
    out.design = Design::dependent;
    out.assignment = assignment;
    return out;
  }
  ProbeSet out;
  out.u.resize(n, static_cast<Eigen::Index>(N));
  out.design = Design::dependent;
  out.seed = seed;
  out.assignment = assignment;
  for (std::size_t k = 0; k < assignment.num_blocks(); ++k) {
    auto rng = make_stream(seed, k, kBlockPurpose);
    Eigen::VectorXd x(static_cast<Eigen::Index>(N));
    for (auto& v : x) v = rademacher(rng);
    for (std::size_t j = 0; j < N; ++j) {
      const double y = rademacher(rng);
      const auto& members = assignment.blocks[k];
      for (std::size_t a = 0; a < N; ++a)
        out.u(static_cast<Eigen::Index>(members[a]), static_cast<Eigen::Index>(j)) =
            y * x(static_cast<Eigen::Index>(a)) *
            basis(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
    }
  }
  for (std::size_t j = 0; j < N; ++j) {
    auto rng = make_stream(seed, j, kColumnPurpose);
    for (std::size_t idx : assignment.leftover)
      out.u(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(j)) = rademacher(rng);
  }
  return out;
}

void enumerate_independent(Eigen::Index n, std::size_t N,
                           const std::function<void(const Eigen::MatrixXd&)>& visit,
                           int max_bits) {
  const long bits = static_cast<long>(n) * static_cast<long>(N);
  require(bits <= max_bits && bits < 63, ErrorCategory::design,
          "too many outcomes to enumerate (2^" + std::to_string(bits) + ")");
  Eigen::MatrixXd u(n, static_cast<Eigen::Index>(N));
  const std::uint64_t total = std::uint64_t{1} << bits;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    for (std::size_t j = 0; j < N; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        u(i, static_cast<Eigen::Index>(j)) =
            sign_bit(mask, static_cast<int>(static_cast<long>(j) * n + i));
    visit(u);
  }
}

void enumerate_dependent(const BlockAssignment& assignment, const Eigen::MatrixXd& basis,
                         const std::function<void(const Eigen::MatrixXd&)>& visit,
                         int max_bits) {
  check_basis(assignment, basis);
  const std::size_t N = assignment.block_size;
  const std::size_t m = assignment.num_blocks();
  const long bits =
      static_cast<long>(m * N + m * N + assignment.leftover.size() * N);
  require(bits <= max_bits && bits < 63, ErrorCategory::design,
          "too many outcomes to enumerate (2^" + std::to_string(bits) + ")");
  const auto n = static_cast<Eigen::Index>(assignment.size());
  Eigen::MatrixXd u(n, static_cast<Eigen::Index>(N));
  const std::uint64_t total = std::uint64_t{1} << bits;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    int bit = 0;
    for (std::size_t k = 0; k < m; ++k) {
      const int xbase = bit;
      bit += static_cast<int>(N);
      for (std::size_t j = 0; j < N; ++j) {
        const double y = sign_bit(mask, bit++);
        for (std::size_t a = 0; a < N; ++a)
          u(static_cast<Eigen::Index>(assignment.blocks[k][a]), static_cast<Eigen::Index>(j)) =
              y * sign_bit(mask, xbase + static_cast<int>(a)) *
              basis(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
      }
    }
    for (std::size_t j = 0; j < N; ++j)
      for (std::size_t idx : assignment.leftover)
        u(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(j)) = sign_bit(mask, bit++);
    visit(u);
  }
}

double trace_estimate(const Eigen::MatrixXd& u, const Eigen::MatrixXd& au) {
  require(u.rows() == au.rows() && u.cols() == au.cols(), ErrorCategory::shape,
          "trace_estimate: shape mismatch");
  return u.cwiseProduct(au).sum() / static_cast<double>(u.cols());
}

Eigen::VectorXd diagonal_estimate(const Eigen::MatrixXd& u, const Eigen::MatrixXd& au) {
  require(u.rows() == au.rows() && u.cols() == au.cols(), ErrorCategory::shape,
          "diagonal_estimate: shape mismatch");
  return u.cwiseProduct(au).rowwise().sum() / static_cast<double>(u.cols());
}

double randomized_trace(const MatrixAction& action, const ProbeSet& probes) {
  return trace_estimate(probes.u, action(probes.u));
}

Eigen::VectorXd randomized_diagonal(const MatrixAction& action, const ProbeSet& probes) {
  return diagonal_estimate(probes.u, action(probes.u));
}

}  // namespace gpscore
