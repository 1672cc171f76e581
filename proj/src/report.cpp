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

#include "gpscore/report.hpp"

#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>

#include "gpscore/error.hpp"

namespace gpscore {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  fail(ErrorCategory::config, "bad number for " + key + ": '" + s + "'");
}

long to_long(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return static_cast<long>(v);
  } catch (const std::exception&) {
  }
  fail(ErrorCategory::config, "bad integer for " + key + ": '" + s + "'");
}

template <class T, class F>
std::string join(const std::vector<T>& v, const std::string& sep, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + fmt(v[i]);
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_vector(const Eigen::VectorXd& v, const std::string& sep) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? sep : "") + format_double(v(i));
  return out;
}

// --- RunConfig ----------------------------------------------------------------

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  KvWriter w(os);
  auto ints = [](int v) { return std::to_string(v); };
  auto sizes = [](std::size_t v) { return std::to_string(v); };
  w.value("command", c.command);
  w.value("grid", join(c.grid, "x", ints));
  w.value("extent", format_double(c.extent));
  if (c.occlusion) {
    std::vector<double> parts = c.occlusion->center;
    parts.push_back(c.occlusion->radius);
    w.value("occlude", "disc:" + join(parts, ",", format_double));
  } else {
    w.value("occlude", "none");
  }
  w.value("model", c.model);
  w.value("truth", join(c.truth, ",", format_double));
  w.value("nu", format_double(c.nu));
  w.value("tau", ints(c.tau));
  w.value("probes", sizes(c.probes));
  w.value("design", c.design);
  w.value("seed", std::to_string(c.seed));
  w.value("n2", sizes(c.n2));
  w.value("tol", format_double(c.tol));
  w.value("max_iter", ints(c.max_iter));
  w.value("precond", c.precond);
  w.value("depth", ints(c.depth));
  w.value("backend", c.backend);
  w.value("solver", c.solver);
  w.value("exact", c.exact ? "true" : "false");
  w.value("threads", ints(c.threads));
  w.value("reps", ints(c.reps));
  w.value("sweep", join(c.sweep, ",", sizes));
  w.value("verify_n", ints(c.verify_n));
  w.value("verify_N", sizes(c.verify_N));
  w.value("days", ints(c.days));
  w.value("lon_window", ints(c.lon_window));
  w.value("latitudes", ints(c.latitudes));
  w.value("output", c.output);
  return os.str();
}

RunConfig parse_config(const std::string& text) {
  const auto all = parse_kv(text);
  // plain key files, or the [config] section of a report
  KvDocument doc;
  for (const auto& [key, value] : all.values) {
    if (key.rfind("config.", 0) == 0)
      doc.values[key.substr(7)] = value;
    else if (key.find('.') == std::string::npos)
      doc.values[key] = value;
  }
  for (const auto& [key, m] : all.matrices)
    if (key.find('.') == std::string::npos) doc.matrices[key] = m;
  RunConfig c;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = doc.values.find(key);
    return it == doc.values.end() ? nullptr : &it->second;
  };
  static const std::set<std::string> known{
      "command", "grid",   "extent",  "occlude", "model",   "truth",   "nu",       "tau",
      "probes",  "design", "seed",    "n2",      "tol",     "max_iter", "precond", "depth",
      "backend", "solver", "exact",   "threads", "reps",    "sweep",   "verify_n", "verify_N",
      "days",    "lon_window", "latitudes", "output"};
  for (const auto& [key, value] : doc.values)
    require(known.count(key) == 1, ErrorCategory::config, "unknown config key '" + key + "'");
  require(doc.matrices.empty(), ErrorCategory::config, "config files take no matrix values");
  if (auto v = get("command")) c.command = *v;
  if (auto v = get("grid")) {
    c.grid.clear();
    for (const auto& s : split(*v, 'x')) c.grid.push_back(static_cast<int>(to_long(s, "grid")));
  }
  if (auto v = get("extent")) c.extent = to_double(*v, "extent");
  if (auto v = get("occlude")) {
    if (*v == "none") {
      c.occlusion.reset();
    } else {
      require(v->rfind("disc:", 0) == 0, ErrorCategory::config, "occlusion must be none or disc:...");
      const auto parts = split(v->substr(5), ',');
      require(parts.size() >= 2, ErrorCategory::config, "disc occlusion needs a center and a radius");
      DiscOcclusion d;
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) d.center.push_back(to_double(parts[i], "occlude"));
      d.radius = to_double(parts.back(), "occlude");
      c.occlusion = d;
    }
  }
  if (auto v = get("model")) c.model = *v;
  if (auto v = get("truth")) {
    c.truth.clear();
    if (!v->empty())
      for (const auto& s : split(*v, ',')) c.truth.push_back(to_double(s, "truth"));
  }
  if (auto v = get("nu")) c.nu = to_double(*v, "nu");
  if (auto v = get("tau")) c.tau = static_cast<int>(to_long(*v, "tau"));
  if (auto v = get("probes")) c.probes = static_cast<std::size_t>(to_long(*v, "probes"));
  if (auto v = get("design")) c.design = *v;
  if (auto v = get("seed")) c.seed = std::stoull(*v);
  if (auto v = get("n2")) c.n2 = static_cast<std::size_t>(to_long(*v, "n2"));
  if (auto v = get("tol")) c.tol = to_double(*v, "tol");
  if (auto v = get("max_iter")) c.max_iter = static_cast<int>(to_long(*v, "max_iter"));
  if (auto v = get("precond")) c.precond = *v;
  if (auto v = get("depth")) c.depth = static_cast<int>(to_long(*v, "depth"));
  if (auto v = get("backend")) c.backend = *v;
  if (auto v = get("solver")) c.solver = *v;
  if (auto v = get("exact")) c.exact = *v == "true";
  if (auto v = get("threads")) c.threads = static_cast<int>(to_long(*v, "threads"));
  if (auto v = get("reps")) c.reps = static_cast<int>(to_long(*v, "reps"));
  if (auto v = get("sweep")) {
    c.sweep.clear();
    if (!v->empty())
      for (const auto& s : split(*v, ',')) c.sweep.push_back(static_cast<std::size_t>(to_long(s, "sweep")));
  }
  if (auto v = get("verify_n")) c.verify_n = static_cast<int>(to_long(*v, "verify_n"));
  if (auto v = get("verify_N")) c.verify_N = static_cast<std::size_t>(to_long(*v, "verify_N"));
  if (auto v = get("days")) c.days = static_cast<int>(to_long(*v, "days"));
  if (auto v = get("lon_window")) c.lon_window = static_cast<int>(to_long(*v, "lon_window"));
  if (auto v = get("latitudes")) c.latitudes = static_cast<int>(to_long(*v, "latitudes"));
  if (auto v = get("output")) c.output = *v;
  return c;
}

// --- key-value text -----------------------------------------------------------

void KvWriter::comment(const std::string& text) { out_ << "# " << text << "\n"; }

void KvWriter::value(const std::string& key, const std::string& v) { out_ << key << " = " << v << "\n"; }

void KvWriter::value(const std::string& key, double v) { value(key, format_double(v)); }

void KvWriter::value(const std::string& key, long v) { value(key, std::to_string(v)); }

void KvWriter::vector(const std::string& key, const Eigen::VectorXd& v) { value(key, join_vector(v)); }

void KvWriter::matrix(const std::string& key, const Eigen::MatrixXd& m) {
  out_ << key << " = [" << m.rows() << " x " << m.cols() << "]\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) out_ << "  " << join_vector(m.row(i).transpose()) << "\n";
}

KvDocument parse_kv(const std::string& text) {
  KvDocument doc;
  std::istringstream is(text);
  std::string line;
  std::string section;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']' && t.find('=') == std::string::npos) {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      require(!section.empty(), ErrorCategory::io, "malformed line: '" + t + "'");
      auto& lines = doc.values[section + ".text"];
      lines += (lines.empty() ? "" : "\n") + t;
      continue;
    }
    std::string key = trim(t.substr(0, eq));
    if (!section.empty() && key.rfind(section + ".", 0) != 0) key = section + "." + key;
    const std::string val = trim(t.substr(eq + 1));
    long rows = 0, cols = 0;
    if (val.size() > 2 && val.front() == '[' &&
        std::sscanf(val.c_str(), "[%ld x %ld]", &rows, &cols) == 2) {
      Eigen::MatrixXd m(rows, cols);
      for (long i = 0; i < rows; ++i) {
        require(static_cast<bool>(std::getline(is, line)), ErrorCategory::io, "truncated matrix " + key);
        std::istringstream row(line);
        for (long j = 0; j < cols; ++j) {
          std::string tok;
          row >> tok;
          m(i, j) = to_double(tok, key);
        }
      }
      doc.matrices[key] = std::move(m);
    } else {
      doc.values[key] = val;
    }
  }
  return doc;
}

// --- reports ------------------------------------------------------------------

void write_fit_report(std::ostream& out, const FitReport& r, const RunConfig& config,
                      const std::string& grid_description, bool timings) {
  KvWriter w(out);
  w.comment("gpscore fit report");
  w.comment("parameters: " + join(r.names, " ", [](const std::string& s) { return s; }));
  w.comment("estimate:   " + join_vector(r.theta_hat));
  if (r.sd_ratio.size() > 0) w.comment("sd ratio:   " + join_vector(r.sd_ratio));
  w.comment("converged:  " + std::string(r.converged ? "yes" : "no"));
  out << "\n[config]\n" << serialize_config(config);
  out << "\n[grid]\n" << grid_description;
  out << "\n[fit]\n";
  w.value("names", join(r.names, " ", [](const std::string& s) { return s; }));
  w.value("n", static_cast<long>(r.n));
  w.value("tau", static_cast<long>(r.tau));
  w.value("probes", static_cast<long>(r.probes));
  w.value("design", std::string(to_string(r.design)));
  w.value("seed", std::to_string(r.seed));
  w.value("exact", std::string(r.exact ? "true" : "false"));
  w.vector("theta_init", r.theta_init);
  w.vector("theta_hat", r.theta_hat);
  w.vector("g", r.g);
  w.value("converged", std::string(r.converged ? "true" : "false"));
  w.value("evaluations", r.evaluations);
  w.value("solver_iterations", r.solver_iterations);
  w.value("matvecs", r.matvecs);
  if (timings) w.value("fit_seconds", r.fit_seconds);
  if (r.theta0_profile > 0.0) w.value("theta0_profile", r.theta0_profile);
  if (r.info) {
    out << "\n[information]\n";
    w.value("n2", static_cast<long>(r.info->n2));
    w.value("indefinite", std::string(r.info->indefinite ? "true" : "false"));
    w.matrix("fisher", r.info->i_hat);
    w.matrix("j", r.info->j_hat);
    w.matrix("godambe", r.info->g_hat);
    w.vector("sd_fisher", r.sd_fisher);
    w.vector("sd_godambe", r.sd_godambe);
    w.vector("sd_ratio", r.sd_ratio);
    if (timings) w.value("info_seconds", r.info_seconds);
  }
  if (!r.trace.empty()) {
    out << "\n[trace]\n";
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
      const auto& it = r.trace[i];
      out << it.stage << "\t" << join_vector(it.theta) << "\t" << join_vector(it.g) << "\n";
    }
  }
}

void write_sweep_table(std::ostream& out, const SweepReport& r) {
  out << "# N-sweep: mean squared difference from the exact MLE over the exact-MLE MSE\n";
  out << "# exact_mse\t" << join_vector(r.exact_mse, "\t") << "\texact_failures\t" << r.exact_failures << "\n";
  out << "N\tdesign";
  for (const auto& n : r.names) out << "\t" << n;
  out << "\tfits\tfailures\n";
  for (const auto& c : r.cells)
    out << c.N << "\t" << to_string(c.design) << "\t" << join_vector(c.ratio, "\t") << "\t" << c.fits << "\t"
        << c.failures << "\n";
}

void write_trace_table(std::ostream& out, const std::vector<TraceStudyRow>& rows) {
  out << "N\tdesign\tparam\texact\tmean\tvariance\n";
  for (const auto& r : rows)
    out << r.N << "\t" << to_string(r.design) << "\t" << r.param << "\t" << format_double(r.exact) << "\t"
        << format_double(r.mean) << "\t" << format_double(r.variance) << "\n";
}

void write_verify_report(std::ostream& out, const VerifyReport& r) {
  out << "check\tmeasured\tthreshold\tresult\tnote\n";
  for (const auto& c : r.checks)
    out << c.name << "\t" << format_double(c.measured) << "\t" << format_double(c.threshold) << "\t"
        << (c.pass ? "PASS" : "FAIL") << "\t" << c.note << "\n";
  if (!r.trend.empty()) {
    out << "\nn\tkappa\tnorm_Iinv_J\n";
    for (const auto& t : r.trend)
      out << t.n << "\t" << format_double(t.kappa) << "\t" << format_double(t.ij_norm) << "\n";
  }
}

void write_bench_table(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "n\tbackend\tseconds_per_matvec\n";
  for (const auto& r : rows)
    out << r.n << "\t" << to_string(r.backend) << "\t" << format_double(r.seconds_per_matvec) << "\n";
}

}  // namespace gpscore
