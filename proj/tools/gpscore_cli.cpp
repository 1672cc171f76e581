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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gpscore/error.hpp"
#include "gpscore/fit.hpp"
#include "gpscore/report.hpp"
#include "gpscore/simulate.hpp"
#include "gpscore/spacetime.hpp"
#include "gpscore/studies.hpp"

using namespace gpscore;

namespace {

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::domain: return 3;
    case ErrorCategory::geometry: return 4;
    case ErrorCategory::shape: return 5;
    case ErrorCategory::design: return 6;
    case ErrorCategory::numeric: return 7;
    case ErrorCategory::convergence: return 8;
    case ErrorCategory::io: return 9;
  }
  return 1;
}

std::vector<int> parse_grid(const std::string& s) {
  std::vector<int> dims;
  std::istringstream is(s);
  std::string part;
  while (std::getline(is, part, 'x')) {
    try {
      dims.push_back(std::stoi(part));
    } catch (const std::exception&) {
      fail(ErrorCategory::config, "bad --grid '" + s + "', expected e.g. 32x32");
    }
  }
  require(!dims.empty(), ErrorCategory::config, "empty --grid");
  return dims;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string part;
  while (std::getline(is, part, ',')) {
    try {
      out.push_back(std::stod(part));
    } catch (const std::exception&) {
      fail(ErrorCategory::config, "bad " + what + " '" + s + "'");
    }
  }
  return out;
}

struct Session {
  RunConfig cfg;
  bool verbose = false;
  bool timings = false;
  std::string data;

  std::function<void(const std::string&)> logger() const {
    if (!verbose) return {};
    return [](const std::string& s) { std::cerr << s << "\n"; };
  }

  OccludedGrid grid() const {
    const double spacing = spacing_for_extent(cfg.extent, cfg.grid.front());
    if (cfg.occlusion)
      return build_disc_occluded_grid(cfg.grid, spacing, cfg.occlusion->center, cfg.occlusion->radius);
    return build_full_grid(cfg.grid, spacing);
  }

  KernelModel truth() const {
    if (cfg.model == "powerlaw") {
      require(cfg.truth.size() == cfg.grid.size() + 1, ErrorCategory::config,
              "powerlaw --truth needs alpha and one length per axis");
      return KernelModel::power_law({cfg.truth[0], std::vector<double>(cfg.truth.begin() + 1, cfg.truth.end())});
    }
    if (cfg.model == "matern") {
      require(cfg.truth.size() == 2, ErrorCategory::config, "matern --truth needs sigma2,range");
      return KernelModel::matern({cfg.nu, cfg.truth[0], cfg.truth[1]}, cfg.grid.size());
    }
    if (cfg.model == "spacetime") {
      require(cfg.truth.size() == 4, ErrorCategory::config, "spacetime --truth needs theta0,theta1,theta2,v");
      return KernelModel::space_time({cfg.truth[0], cfg.truth[1], cfg.truth[2], cfg.truth[3]});
    }
    fail(ErrorCategory::config, "unknown --model '" + cfg.model + "'");
  }

  int tau() const {
    if (cfg.precond == "none") {
      require(cfg.tau <= 0, ErrorCategory::config, "--precond none excludes --tau > 0");
      return 0;
    }
    if (cfg.tau >= 0) return cfg.tau;
    if (cfg.model == "powerlaw") return choose_tau(cfg.truth.at(0), cfg.grid.size());
    return 0;
  }

  ScoreOptions score() const {
    ScoreOptions s;
    s.solve.tol = cfg.tol;
    s.solve.max_iter = cfg.max_iter;
    if (cfg.solver == "direct") {
      s.strategy = SolveStrategy::direct;
    } else {
      require(cfg.solver == "iterative", ErrorCategory::config, "--solver is iterative or direct");
    }
    if (verbose) {
      s.solve.trace = [](int it, const Eigen::VectorXd& res) {
        std::cerr << "  cg " << it << " max residual " << res.maxCoeff() << "\n";
      };
    }
    return s;
  }

  SpaceTimeLayout layout() const {
    std::vector<double> lats;
    for (int a = 0; a < cfg.latitudes; ++a) lats.push_back(a - 0.5 * (cfg.latitudes - 1));
    return band_layout(lats, cfg.lon_window, cfg.days);
  }

  void emit(const std::string& text) const {
    if (cfg.output.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream out(cfg.output);
    require(static_cast<bool>(out), ErrorCategory::io, "cannot write " + cfg.output);
    out << text;
    std::cerr << "wrote " << cfg.output << "\n";
  }
};

Eigen::VectorXd read_values(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCategory::io, "cannot read data file " + path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("index", 0) == 0) continue;
    std::istringstream is(line);
    std::vector<std::string> cols;
    std::string tok;
    while (is >> tok) cols.push_back(tok);
    require(!cols.empty(), ErrorCategory::io, "empty data row");
    values.push_back(std::stod(cols.back()));
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

int run_simulate(const Session& s) {
  std::ostringstream os;
  os << "# gpscore simulation, seed " << s.cfg.seed << "\n";
  if (s.cfg.model == "spacetime") {
    const auto layout = s.layout();
    const auto z = simulate_spacetime(s.truth(), layout, s.cfg.seed);
    os << "index\tlatitude\tlongitude\ttime\tvalue\n";
    for (std::size_t i = 0; i < layout.num_observed(); ++i)
      os << i << "\t" << layout.latitudes()[layout.latitude_of(i)] << "\t" << layout.longitude(i) << "\t"
         << format_double(layout.time(i)) << "\t" << format_double(z(static_cast<Eigen::Index>(i))) << "\n";
  } else {
    const auto grid = s.grid();
    const auto plan = build_filter_plan(grid, s.tau());
    const auto z = simulate_gp(s.truth(), grid, plan, s.cfg.seed);
    os << "# filtered with tau = " << plan.tau << "\n";
    os << "index";
    for (std::size_t k = 0; k < grid.dim(); ++k) os << "\tj" << k;
    os << "\tvalue\n";
    for (std::size_t i = 0; i < plan.size(); ++i) {
      os << i;
      for (int c : grid.coords(plan.retained[i])) os << "\t" << c;
      os << "\t" << format_double(z(static_cast<Eigen::Index>(i))) << "\n";
    }
  }
  s.emit(os.str());
  return 0;
}

int run_fit(Session& s) {
  const auto grid = s.grid();
  const auto plan = build_filter_plan(grid, s.tau());
  const auto truth = s.truth();
  require(s.cfg.precond != "banded-ichol", ErrorCategory::config,
          "banded-ichol applies to fit-spacetime; lattice fits use laplacian-filter or none");
  const Eigen::VectorXd z = s.data.empty() ? simulate_gp(truth, grid, plan, s.cfg.seed) : read_values(s.data);
  FitOptions o;
  o.probes = s.cfg.probes;
  o.design = parse_design(s.cfg.design);
  o.seed = s.cfg.seed;
  o.n2 = s.cfg.n2;
  o.exact = s.cfg.exact;
  o.backend = parse_backend(s.cfg.backend);
  o.score = s.score();
  o.log = s.logger();
  const auto report = solve_fit(truth, grid, plan, z, o);
  std::ostringstream os;
  write_fit_report(os, report, s.cfg, describe_grid(grid, plan), s.timings);
  s.emit(os.str());
  return 0;
}

int run_fit_spacetime(Session& s) {
  const auto layout = s.layout();
  const auto truth = s.truth();
  require(truth.kind() == KernelKind::space_time, ErrorCategory::config, "fit-spacetime needs --model spacetime");
  const Eigen::VectorXd z = s.data.empty() ? simulate_spacetime(truth, layout, s.cfg.seed) : read_values(s.data);
  SpaceTimeFitOptions o;
  o.probes = s.cfg.probes;
  o.design = parse_design(s.cfg.design);
  o.seed = s.cfg.seed;
  o.n2 = s.cfg.n2;
  o.depth = s.cfg.depth;
  o.use_preconditioner = s.cfg.precond != "none";
  o.score = s.score();
  o.log = s.logger();
  const auto report = solve_fit_spacetime(layout, z, o);
  std::ostringstream desc;
  desc << "latitudes = " << layout.num_latitudes() << "\nsteps_per_day = " << layout.steps_per_day()
       << "\nnum_steps = " << layout.num_steps() << "\nn = " << layout.num_observed() << "\n";
  std::ostringstream os;
  write_fit_report(os, report, s.cfg, desc.str(), s.timings);
  s.emit(os.str());
  return 0;
}

int run_sweep(const Session& s) {
  SweepConfig c;
  c.dims = s.cfg.grid;
  c.extent = s.cfg.extent;
  c.occlusion = s.cfg.occlusion;
  c.tau = s.tau();
  c.truth = s.truth();
  c.reps = s.cfg.reps;
  c.probes = s.cfg.sweep;
  c.seed = s.cfg.seed;
  c.threads = s.cfg.threads;
  c.score = s.score();
  c.score.solve.trace = nullptr;
  c.log = s.logger();
  std::ostringstream os;
  write_sweep_table(os, n_sweep_study(c));
  s.emit(os.str());
  return 0;
}

int run_trace_study(const Session& s) {
  TraceStudyConfig c;
  c.dims = s.cfg.grid;
  c.extent = s.cfg.extent;
  c.occlusion = s.cfg.occlusion;
  c.tau = s.tau();
  c.model = s.truth();
  c.probes = s.cfg.sweep;
  c.reps = s.cfg.reps;
  c.seed = s.cfg.seed;
  std::ostringstream os;
  write_trace_table(os, trace_study(c));
  s.emit(os.str());
  return 0;
}

int run_verify(const Session& s) {
  VerifyConfig c;
  c.n = s.cfg.verify_n;
  c.N = s.cfg.verify_N;
  c.seed = s.cfg.seed;
  const auto rep = verify_bounds_suite(c);
  std::ostringstream os;
  write_verify_report(os, rep);
  os << "overall: " << (rep.all_pass() ? "PASS" : "FAIL") << "\n";
  s.emit(os.str());
  return 0;
}

int run_bench(const Session& s) {
  std::vector<int> sides;
  for (int side = 32; side * side <= (1 << 18); side = static_cast<int>(side * 1.4142135623730951 + 0.5))
    sides.push_back(side);
  std::ostringstream os;
  write_bench_table(os, bench_matvec(sides, parse_backend(s.cfg.backend), std::max(1, s.cfg.reps / 10),
                                     s.truth()));
  s.emit(os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Session s;
  if (const char* env = std::getenv("GPSCORE_SEED")) s.cfg.seed = std::strtoull(env, nullptr, 10);
  if (const char* env = std::getenv("GPSCORE_THREADS")) s.cfg.threads = std::atoi(env);

  CLI::App app{"Gaussian-process covariance estimation by stochastic score equations"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string grid, occlude, truth, sweep, config_file;
  bool dry_run = false;
  app.add_option("--grid", grid, "lattice size, e.g. 32x32");
  app.add_option("--extent", s.cfg.extent, "physical side length of the grid");
  app.add_option("--occlude", occlude, "none or disc:cx,cy,r");
  app.add_option("--model", s.cfg.model, "powerlaw | matern | spacetime");
  app.add_option("--truth", truth, "comma-separated parameters used for simulation");
  app.add_option("--nu", s.cfg.nu, "Matern smoothness");
  app.add_option("--tau", s.cfg.tau, "Laplacian filtering steps (default from the model)");
  app.add_option("--probes", s.cfg.probes, "number of probe vectors N");
  app.add_option("--design", s.cfg.design, "independent | dependent");
  app.add_option("--seed", s.cfg.seed, "random seed (env GPSCORE_SEED)");
  app.add_option("--n2", s.cfg.n2, "probe count for the information estimates");
  app.add_option("--tol", s.cfg.tol, "relative residual tolerance of the solver");
  app.add_option("--max-iter", s.cfg.max_iter, "solver iteration cap");
  app.add_option("--precond", s.cfg.precond, "none | laplacian-filter | banded-ichol");
  app.add_option("--depth", s.cfg.depth, "banded inverse Cholesky conditioning depth");
  app.add_option("--backend", s.cfg.backend, "dense | circulant");
  app.add_option("--solver", s.cfg.solver, "iterative | direct");
  app.add_flag("--exact", s.cfg.exact, "solve the exact score equations (dense)");
  app.add_option("--threads", s.cfg.threads, "worker threads for studies (env GPSCORE_THREADS)");
  app.add_option("--reps", s.cfg.reps, "replicates for studies");
  app.add_option("--sweep", sweep, "probe counts for studies, e.g. 1,2,4,8");
  app.add_option("--n", s.cfg.verify_n, "instance size for verify-bounds");
  app.add_option("--N", s.cfg.verify_N, "probe count for verify-bounds");
  app.add_option("--days", s.cfg.days, "space-time: number of days");
  app.add_option("--lon-window", s.cfg.lon_window, "space-time: longitudes observed per day");
  app.add_option("--latitudes", s.cfg.latitudes, "space-time: number of latitude bands");
  app.add_option("--data", s.data, "read data values instead of simulating");
  app.add_option("--config", config_file, "load a serialized run configuration");
  app.add_option("--output,-o", s.cfg.output, "report path (default stdout)");
  app.add_flag("--verbose,-v", s.verbose, "per-iteration trace on stderr");
  app.add_flag("--timings", s.timings, "include wall-clock timings in reports");
  app.add_flag("--dry-run", dry_run, "print the resolved configuration and exit");

  for (const char* name : {"simulate", "fit", "fit-spacetime", "n-sweep", "trace-study", "verify-bounds", "bench"})
    app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorCategory::config);
  }

  try {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      require(static_cast<bool>(in), ErrorCategory::io, "cannot read " + config_file);
      std::stringstream buf;
      buf << in.rdbuf();
      const auto loaded = parse_config(buf.str());
      const auto output = s.cfg.output;
      s.cfg = loaded;
      if (!output.empty()) s.cfg.output = output;
    }
    s.cfg.command = app.get_subcommands().front()->get_name();
    if (s.cfg.command == "fit-spacetime" && s.cfg.model == "powerlaw" && truth.empty()) {
      s.cfg.model = "spacetime";
      s.cfg.truth = {1.3e-3, 1.9, 11.5, -8.2};
      s.cfg.probes = app.count("--probes") ? s.cfg.probes : 128;
      if (!app.count("--precond")) s.cfg.precond = "banded-ichol";
    }
    if (!grid.empty()) s.cfg.grid = parse_grid(grid);
    if (!occlude.empty()) {
      if (occlude == "none") {
        s.cfg.occlusion.reset();
      } else {
        require(occlude.rfind("disc:", 0) == 0, ErrorCategory::config, "--occlude is none or disc:cx,cy,r");
        const auto v = parse_list(occlude.substr(5), "--occlude");
        require(v.size() == s.cfg.grid.size() + 1, ErrorCategory::config,
                "--occlude disc needs one center coordinate per axis and a radius");
        s.cfg.occlusion = DiscOcclusion{std::vector<double>(v.begin(), v.end() - 1), v.back()};
      }
    }
    if (!truth.empty()) s.cfg.truth = parse_list(truth, "--truth");
    if (!sweep.empty()) {
      s.cfg.sweep.clear();
      for (double v : parse_list(sweep, "--sweep")) s.cfg.sweep.push_back(static_cast<std::size_t>(v));
    }
    if (s.cfg.design == "dependent" && !is_power_of_two(s.cfg.probes)) {
      const auto rounded = round_down_power_of_two(std::max<std::size_t>(1, s.cfg.probes));
      std::cerr << "warning: dependent design needs a power-of-two N; using " << rounded << " instead of "
                << s.cfg.probes << "\n";
      s.cfg.probes = rounded;
    }
    parse_design(s.cfg.design);

    if (dry_run) {
      std::cout << serialize_config(s.cfg);
      return 0;
    }
    const auto& cmd = s.cfg.command;
    if (cmd == "simulate") return run_simulate(s);
    if (cmd == "fit") return run_fit(s);
    if (cmd == "fit-spacetime") return run_fit_spacetime(s);
    if (cmd == "n-sweep") return run_sweep(s);
    if (cmd == "trace-study") return run_trace_study(s);
    if (cmd == "verify-bounds") return run_verify(s);
    if (cmd == "bench") return run_bench(s);
    fail(ErrorCategory::config, "unknown command " + cmd);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.category()) << "): " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
