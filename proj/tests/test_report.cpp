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

#include <sstream>
#include <string>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "generators.hpp"
#include "gpscore/error.hpp"
#include "gpscore/report.hpp"

using namespace gpscore;

namespace {

RunConfig random_config(testgen::Gen& gen) {
  RunConfig c;
  const std::vector<std::string> commands{"fit", "simulate", "n-sweep", "trace-study", "bench"};
  c.command = commands[static_cast<std::size_t>(gen.integer(0, 4))];
  c.grid = {gen.integer(2, 300), gen.integer(2, 300)};
  c.extent = gen.uniform(1.0, 1000.0);
  if (gen.integer(0, 1) == 1) c.occlusion = DiscOcclusion{{gen.uniform(0, 100), gen.uniform(0, 100)}, gen.uniform(0, 30)};
  c.model = gen.integer(0, 1) ? "powerlaw" : "matern";
  c.truth = {gen.uniform(0.1, 3.9), gen.uniform(0.1, 50.0), std::exp(gen.normal())};
  c.nu = gen.uniform(0.5, 3.0);
  c.tau = gen.integer(-1, 3);
  c.probes = static_cast<std::size_t>(gen.integer(1, 512));
  c.design = gen.integer(0, 1) ? "independent" : "dependent";
  c.seed = static_cast<std::uint64_t>(gen.integer(0, 1 << 30)) * 0x9e3779b9ULL;
  c.n2 = static_cast<std::size_t>(gen.integer(1, 400));
  c.tol = std::pow(10.0, gen.uniform(-14, -2));
  c.max_iter = gen.integer(1, 5000);
  c.precond = gen.integer(0, 1) ? "none" : "banded-ichol";
  c.depth = gen.integer(1, 50);
  c.backend = gen.integer(0, 1) ? "circulant" : "dense";
  c.solver = gen.integer(0, 1) ? "iterative" : "direct";
  c.exact = gen.integer(0, 1) == 1;
  c.threads = gen.integer(1, 16);
  c.reps = gen.integer(1, 100);
  c.sweep.clear();
  for (int k = 0, m = gen.integer(1, 6); k < m; ++k) c.sweep.push_back(std::size_t{1} << gen.integer(0, 8));
  c.verify_n = gen.integer(2, 10);
  c.verify_N = static_cast<std::size_t>(gen.integer(1, 4));
  c.days = gen.integer(1, 30);
  c.lon_window = gen.integer(1, 360);
  c.latitudes = gen.integer(1, 20);
  c.output = gen.integer(0, 1) ? "" : "out_" + std::to_string(gen.integer(0, 99)) + ".txt";
  return c;
}

}  // namespace

TEST(RunConfigText, RoundTripsForRandomConfigs) {
  testgen::Gen gen(1234);
  for (int trial = 0; trial < 200; ++trial) {
    const RunConfig c = random_config(gen);
    const RunConfig back = parse_config(serialize_config(c));
    EXPECT_TRUE(back == c) << serialize_config(c);
  }
}

TEST(RunConfigText, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_TRUE(parse_config(serialize_config(c)) == c);
}

TEST(RunConfigText, RejectsUnknownKeys) {
  EXPECT_THROW(parse_config("nonsense = 3\n"), Error);
}

TEST(KeyValue, MatrixBlocksParse) {
  Eigen::MatrixXd m(2, 3);
  m << 1.0, -2.5, 1e-17, 3.0, 0.1, 1.0 / 3.0;
  Eigen::VectorXd v(3);
  v << 0.25, -7.0, 1e300;
  std::ostringstream out;
  KvWriter w(out);
  w.comment("header");
  w.value("name", std::string("x y"));
  w.value("count", 42L);
  w.value("ratio", 0.1);
  w.vector("v", v);
  w.matrix("m", m);
  const KvDocument doc = parse_kv(out.str());
  EXPECT_EQ(doc.values.at("name"), "x y");
  EXPECT_EQ(doc.values.at("count"), "42");
  EXPECT_EQ(std::stod(doc.values.at("ratio")), 0.1);
  ASSERT_EQ(doc.matrices.count("m"), 1u);
  EXPECT_EQ(doc.matrices.at("m"), m);
  std::istringstream vs(doc.values.at("v"));
  for (Eigen::Index i = 0; i < 3; ++i) {
    double x = 0;
    vs >> x;
    EXPECT_EQ(x, v(i));
  }
}

TEST(FitReportText, IsDeterministicAndParses) {
  FitReport r;
  r.names = {"alpha", "theta1", "theta2"};
  r.theta_init = Eigen::Vector3d(1.4, 6.0, 9.0);
  r.theta_hat = Eigen::Vector3d(1.5123, 7.25, 10.5);
  r.g = Eigen::Vector3d(1e-9, -2e-9, 3e-9);
  r.converged = true;
  r.sd_fisher = Eigen::Vector3d(0.09, 0.5, 0.8);
  r.sd_godambe = Eigen::Vector3d(0.091, 0.51, 0.81);
  r.sd_ratio = r.sd_godambe.cwiseQuotient(r.sd_fisher);
  r.fit_seconds = 12.5;
  r.info_seconds = 3.0;
  r.probes = 64;
  r.n = 848;
  r.tau = 1;
  RunConfig c;
  std::ostringstream a;
  std::ostringstream b;
  write_fit_report(a, r, c, "32x32 grid");
  r.fit_seconds = 99.0;
  write_fit_report(b, r, c, "32x32 grid");
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().find("seconds"), std::string::npos);

  std::ostringstream t;
  write_fit_report(t, r, c, "32x32 grid", true);
  EXPECT_NE(t.str().find("seconds"), std::string::npos);

  const KvDocument doc = parse_kv(a.str());
  ASSERT_TRUE(doc.values.count("fit.theta_hat"));
  std::istringstream in(doc.values.at("fit.theta_hat"));
  for (Eigen::Index i = 0; i < 3; ++i) {
    double x = 0;
    in >> x;
    EXPECT_EQ(x, r.theta_hat(i));
  }
  EXPECT_TRUE(parse_config(a.str()) == c);
}

TEST(FormatDouble, RoundTripsExactly) {
  testgen::Gen gen(5);
  for (int k = 0; k < 1000; ++k) {
    const double x = gen.normal() * std::pow(10.0, gen.integer(-300, 300));
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
}
