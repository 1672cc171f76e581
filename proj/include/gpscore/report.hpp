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

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gpscore/fit.hpp"
#include "gpscore/studies.hpp"

namespace gpscore {

/// Resolved settings of one CLI run. Serializes to a key-value block that
/// parses back to an equal value.
struct RunConfig {
  std::string command = "fit";
  std::vector<int> grid{32, 32};
  double extent = 100.0;
  std::optional<DiscOcclusion> occlusion;
  std::string model = "powerlaw";
  std::vector<double> truth{1.5, 7.0, 10.0};
  double nu = 1.0;
  int tau = -1;                 // -1: chosen from the model
  std::size_t probes = 64;
  std::string design = "independent";
  std::uint64_t seed = 1;
  std::size_t n2 = 100;
  double tol = 1e-10;
  int max_iter = 1000;
  std::string precond = "laplacian-filter";
  int depth = 20;
  std::string backend = "circulant";
  std::string solver = "iterative";
  bool exact = false;
  int threads = 1;
  int reps = 50;
  std::vector<std::size_t> sweep{1, 2, 4, 8, 16, 32, 64};
  int verify_n = 8;
  std::size_t verify_N = 4;
  int days = 10;
  int lon_window = 60;
  int latitudes = 10;
  std::string output;

  bool operator==(const RunConfig&) const = default;
};

std::string serialize_config(const RunConfig& config);
RunConfig parse_config(const std::string& text);

/// "key = value" lines; matrices as "key = [r x c]" followed by r rows.
class KvWriter {
 public:
  explicit KvWriter(std::ostream& out) : out_(out) {}
  void comment(const std::string& text);
  void value(const std::string& key, const std::string& v);
  void value(const std::string& key, double v);
  void value(const std::string& key, long v);
  void vector(const std::string& key, const Eigen::VectorXd& v);
  void matrix(const std::string& key, const Eigen::MatrixXd& m);

 private:
  std::ostream& out_;
};

/// Parsed key-value block; matrices keep their rows. Keys under a "[name]"
/// header get the prefix "name." and other lines of that section are kept
/// under "name.text".
struct KvDocument {
  std::map<std::string, std::string> values;
  std::map<std::string, Eigen::MatrixXd> matrices;
};
KvDocument parse_kv(const std::string& text);

std::string format_double(double v);
std::string join_vector(const Eigen::VectorXd& v, const std::string& sep = " ");

/// Timings are left out unless asked for, so reruns give identical files.
void write_fit_report(std::ostream& out, const FitReport& report, const RunConfig& config,
                      const std::string& grid_description, bool timings = false);
void write_sweep_table(std::ostream& out, const SweepReport& report);
void write_trace_table(std::ostream& out, const std::vector<TraceStudyRow>& rows);
void write_verify_report(std::ostream& out, const VerifyReport& report);
void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows);

}  // namespace gpscore
