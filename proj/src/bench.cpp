#include "hsl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "hsl/rng.hpp"

namespace hsl {

namespace {

Eigen::MatrixXd evaluation_points(const SimulatedPanel& sim, const BenchOpts& opts,
                                  std::uint64_t seed) {
  const PanelDataset& ds = sim.dataset;
  switch (opts.eval_on) {
    case EvalOn::All:
      return ds.features;
    case EvalOn::Treated: {
      const auto idx = ds.treated_indices();
      Eigen::MatrixXd x(idx.size(), ds.n_features());
      for (std::size_t r = 0; r < idx.size(); ++r) x.row(r) = ds.features.row(idx[r]);
      return x;
    }
    case EvalOn::Fresh: {
      std::mt19937_64 rng = make_engine(splitmix64(seed) ^ 0x5eedf00dULL);
      std::normal_distribution<double> gauss(0.0, 1.0);
      Eigen::MatrixXd x(opts.fresh_count, ds.n_features());
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = gauss(rng);
      return x;
    }
  }
  return ds.features;
}

RunResult one_run(const ScenarioConfig& scenario, const BenchOpts& opts, Method method,
                  int rep) {
  RunResult res;
  res.scenario = scenario.name;
  res.method = method_name(method);
  res.replication = rep;
  res.seed = derive_seed(scenario.seed, static_cast<std::uint64_t>(rep));

  ScenarioConfig cfg = scenario;
  cfg.seed = res.seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SimulatedPanel sim = generate(cfg);
    const HteEstimate est = fit_method(method, sim.dataset, opts.regressor,
                                       opts.constraint, res.seed, opts.solver);
    const Eigen::MatrixXd points = evaluation_points(sim, opts, res.seed);
    double sum_se = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const Eigen::VectorXd x = points.row(i).transpose();
      const double err = est.evaluate(x) - true_tau(cfg, x);
      sum_se += err * err;
    }
    res.sum_se = sum_se;
    res.mse = sum_se / static_cast<double>(points.rows());
  } catch (const std::exception& e) {
    res.ok = false;
    res.fail_reason = e.what();
    res.mse = res.sum_se = 0.0;
  }
  if (opts.timing) {
    const auto end = std::chrono::steady_clock::now();
    res.wall_time_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();
  }
  return res;
}

std::vector<Method> parse_methods(const BenchOpts& opts) {
  if (opts.methods.empty()) throw std::invalid_argument("no methods given");
  if (opts.reps < 1) throw std::invalid_argument("reps must be >= 1");
  std::vector<Method> methods;
  for (const auto& name : opts.methods) methods.push_back(parse_method(name));
  return methods;
}

}  // namespace

std::vector<RunResult> run_experiment_serial(const ScenarioConfig& scenario,
                                             const BenchOpts& opts) {
  const std::vector<Method> methods = parse_methods(opts);
  std::vector<RunResult> results(static_cast<std::size_t>(opts.reps) * methods.size());
  for (int r = 0; r < opts.reps; ++r)
    for (std::size_t m = 0; m < methods.size(); ++m)
      results[r * methods.size() + m] = one_run(scenario, opts, methods[m], r);
  return results;
}

std::vector<RunResult> run_experiment(const ScenarioConfig& scenario,
                                      const BenchOpts& opts) {
  const std::vector<Method> methods = parse_methods(opts);
  if (opts.parallelism <= 1) return run_experiment_serial(scenario, opts);

  // Each (replication, method) cell is independent; results land in their
  // preassigned slot, so output order does not depend on scheduling.
  std::vector<RunResult> results(static_cast<std::size_t>(opts.reps) * methods.size());
  const int total = opts.reps * static_cast<int>(methods.size());
#pragma omp parallel for schedule(dynamic) num_threads(opts.parallelism)
  for (int cell = 0; cell < total; ++cell) {
    const int r = cell / static_cast<int>(methods.size());
    const std::size_t m = cell % methods.size();
    results[cell] = one_run(scenario, opts, methods[m], r);
  }
  return results;
}

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<RunResult>& results) {
  std::vector<SummaryRow> rows;
  std::vector<std::vector<double>> ok_mses;
  auto find_row = [&](const RunResult& r) -> std::size_t {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i].scenario == r.scenario && rows[i].method == r.method) return i;
    rows.push_back({r.scenario, r.method, 0, 0, 0, 0, 0, 0});
    ok_mses.emplace_back();
    return rows.size() - 1;
  };
  for (const auto& r : results) {
    const std::size_t i = find_row(r);
    rows[i].n_reps += 1;
    if (r.ok)
      ok_mses[i].push_back(r.mse);
    else
      rows[i].failure_count += 1;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = ok_mses[i];
    if (!v.empty()) {
      double sum = 0.0;
      for (double x : v) sum += x;
      rows[i].mean_mse = sum / static_cast<double>(v.size());
      rows[i].median_mse = quantile(v, 0.5);
      rows[i].q25 = quantile(v, 0.25);
      rows[i].q75 = quantile(v, 0.75);
    }
  }
  return rows;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

}  // namespace

void write_results(const std::vector<RunResult>& results, const std::string& path,
                   const std::string& manifest_config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "scenario,method,replication,seed,mse,sum_se,wall_time_ms,status\n";
  for (const auto& r : results) {
    out << r.scenario << ',' << r.method << ',' << r.replication << ',' << r.seed << ','
        << fmt_double(r.mse) << ',' << fmt_double(r.sum_se) << ',' << r.wall_time_ms
        << ',' << (r.ok ? "ok" : "failed(" + sanitize(r.fail_reason) + ")") << "\n";
  }
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path);

  nlohmann::json manifest;
  manifest["config"] = nlohmann::json::parse(manifest_config);
  manifest["artifact_version"] = "1.0.0";
  manifest["rows"] = results.size();
  {
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    manifest["timestamp"] = stamp;
  }
  std::ofstream mout(path + ".manifest.json");
  if (!mout) throw std::runtime_error("cannot write manifest for: " + path);
  mout << manifest.dump(2) << "\n";
}

std::vector<RunResult> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty results file: " + path);
  std::vector<RunResult> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 8) throw std::runtime_error("bad results row: " + line);
    RunResult r;
    r.scenario = f[0];
    r.method = f[1];
    r.replication = std::stoi(f[2]);
    r.seed = std::stoull(f[3]);
    r.mse = std::stod(f[4]);
    r.sum_se = std::stod(f[5]);
    r.wall_time_ms = std::stol(f[6]);
    r.ok = f[7] == "ok";
    if (!r.ok) r.fail_reason = f[7];
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary(const std::vector<SummaryRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << "scenario,method,n_reps,mean_mse,median_mse,q25,q75,failure_count\n";
  for (const auto& s : rows)
    out << s.scenario << ',' << s.method << ',' << s.n_reps << ',' << fmt_double(s.mean_mse)
        << ',' << fmt_double(s.median_mse) << ',' << fmt_double(s.q25) << ','
        << fmt_double(s.q75) << ',' << s.failure_count << "\n";
}

}  // namespace hsl
