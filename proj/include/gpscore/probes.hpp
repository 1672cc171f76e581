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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "gpscore/grid.hpp"

namespace gpscore {

enum class Design { independent, dependent };

const char* to_string(Design design);
Design parse_design(const std::string& name);

struct ProbeSet {
  Eigen::MatrixXd u;  // n x N, entries +-1
  Design design = Design::independent;
  std::uint64_t seed = 0;
  std::optional<BlockAssignment> assignment;  // dependent design only

  Eigen::Index size() const { return u.rows(); }
  Eigen::Index count() const { return u.cols(); }
};

bool is_power_of_two(std::size_t n);
/// Largest power of two not exceeding n (n >= 1).
std::size_t round_down_power_of_two(std::size_t n);

/// N x N Sylvester-Hadamard matrix; its columns are the design vectors.
Eigen::MatrixXd build_factorial_basis(std::size_t N);

ProbeSet sample_independent_probes(Eigen::Index n, std::size_t N, std::uint64_t seed);

/// Block rows of probe j are Y_jk X_k beta_j; leftover rows are
/// independent +-1 entries. For N == 1 the draw coincides with
/// sample_independent_probes(n, 1, seed).
ProbeSet sample_dependent_probes(const BlockAssignment& assignment, const Eigen::MatrixXd& basis,
                                 std::uint64_t seed);

/// Calls `visit` once for every equally likely probe matrix of the design.
/// The number of outcomes is 2^(random signs); throws a design error above
/// 2^max_bits.
void enumerate_independent(Eigen::Index n, std::size_t N,
                           const std::function<void(const Eigen::MatrixXd&)>& visit,
                           int max_bits = 24);
void enumerate_dependent(const BlockAssignment& assignment, const Eigen::MatrixXd& basis,
                         const std::function<void(const Eigen::MatrixXd&)>& visit,
                         int max_bits = 24);

/// (1/N) sum_j U_j' (A U_j) given the products A U.
double trace_estimate(const Eigen::MatrixXd& u, const Eigen::MatrixXd& au);
/// (1/N) sum_j U_j o (A U_j).
Eigen::VectorXd diagonal_estimate(const Eigen::MatrixXd& u, const Eigen::MatrixXd& au);

using MatrixAction = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;
double randomized_trace(const MatrixAction& action, const ProbeSet& probes);
Eigen::VectorXd randomized_diagonal(const MatrixAction& action, const ProbeSet& probes);

}  // namespace gpscore
