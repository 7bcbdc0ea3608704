// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the binary exits nonzero if any fails.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hsl/bench.hpp"
#include "hsl/learners.hpp"
#include "hsl/projection.hpp"
#include "hsl/sc_solver.hpp"
#include "hsl/simgen.hpp"
#include "test_util.hpp"

namespace {

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s (%s)\n", criterion, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

double median_of(std::vector<double> v) {
  REQUIRE_FALSE(v.empty());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Shared configuration for the ordering experiments: the penalized simplex
// with feature-distance penalties (distances derived per target inside the
// solver) keeps the reverse-side weights feature-aware.
hsl::BenchOpts ordering_opts(std::vector<std::string> methods, int reps) {
  hsl::BenchOpts opts;
  opts.methods = std::move(methods);
  opts.reps = reps;
  opts.parallelism = 16;
  opts.constraint = hsl::ConstraintSpec::penalized_simplex(2.0, {}, true);
  return opts;
}

struct MethodStats {
  std::vector<double> mses;
  int failures = 0;
};

std::map<std::string, MethodStats> by_method(const std::vector<hsl::RunResult>& results) {
  std::map<std::string, MethodStats> out;
  for (const auto& r : results) {
    if (r.ok)
      out[r.method].mses.push_back(r.mse);
    else
      out[r.method].failures++;
  }
  return out;
}

std::string fmt_medians(const std::map<std::string, MethodStats>& stats) {
  std::ostringstream ss;
  for (const auto& [m, s] : stats) {
    ss << m << "=";
    if (s.mses.empty())
      ss << "n/a";
    else
      ss << median_of(s.mses);
    if (s.failures) ss << "[" << s.failures << " failed]";
    ss << " ";
  }
  return ss.str();
}

Eigen::VectorXd l1_oracle(const Eigen::VectorXd& v, double radius) {
  if (v.cwiseAbs().sum() <= radius) return v;
  double lo = 0.0, hi = v.cwiseAbs().maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double theta = 0.5 * (lo + hi);
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i) s += std::max(std::abs(v(i)) - theta, 0.0);
    (s > radius ? lo : hi) = theta;
  }
  const double theta = 0.5 * (lo + hi);
  Eigen::VectorXd out(v.size());
  for (int i = 0; i < v.size(); ++i)
    out(i) = std::copysign(std::max(std::abs(v(i)) - theta, 0.0), v(i));
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("criterion 1: projection matches the bisection oracle") {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 eng(0x1a2b3c4dULL);
  std::normal_distribution<double> gauss(0.0, 1.5);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(eng() % 50);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = gauss(eng);
    const double r = 0.25 + 0.005 * static_cast<double>(eng() % 400);
    const double err =
        (hsl::project_l1_ball(v, r) - l1_oracle(v, r)).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = worst <= 1e-10 && secs < 1.0;
  report(1, pass, "sup-norm gap " + std::to_string(worst) + ", " +
                      std::to_string(secs) + " s");
  CHECK(pass);
}

TEST_CASE("criterion 2: solver objective beats the 2-donor grid oracle") {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 eng(0xfeedULL);
  std::normal_distribution<double> gauss;
  double worst_excess = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd a = Eigen::MatrixXd::NullaryExpr(10, 2, [&] { return gauss(eng); });
    Eigen::VectorXd y(10);
    for (int t = 0; t < 10; ++t) y(t) = 1.5 * gauss(eng);
    const auto fit = hsl::fit_weights(y, a, hsl::ConstraintSpec::l1_ball(1.0, false));
    const double got =
        (y - a * fit.weights).squaredNorm();

    const double g11 = a.col(0).squaredNorm(), g22 = a.col(1).squaredNorm();
    const double g12 = a.col(0).dot(a.col(1));
    const double b1 = a.col(0).dot(y), b2 = a.col(1).dot(y);
    const double c = y.squaredNorm();
    double best = 1e300;
    for (int i = -1000; i <= 1000; ++i) {
      const double w1 = i * 1e-3;
      const int jmax = 1000 - std::abs(i);
      for (int j = -jmax; j <= jmax; ++j) {
        const double w2 = j * 1e-3;
        const double f = c - 2.0 * (b1 * w1 + b2 * w2) + g11 * w1 * w1 +
                         2.0 * g12 * w1 * w2 + g22 * w2 * w2;
        best = std::min(best, f);
      }
    }
    worst_excess = std::max(worst_excess, got - best);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = worst_excess <= 1e-6 && secs < 10.0;
  report(2, pass, "worst objective excess " + std::to_string(worst_excess) + ", " +
                      std::to_string(secs) + " s");
  CHECK(pass);
}

TEST_CASE("criterion 3: noiseless linear-effect recovery over 20 seeds") {
  const auto start = std::chrono::steady_clock::now();
  bool pass = true;
  double worst_coef = 0.0, worst_null = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 eng(seed);
    const auto ds = hsl_test::convex_combo_panel(
        4, 10, 12, 8, 2, eng,
        [](const Eigen::VectorXd& x) { return 0.6 * x(0) + 0.4 * x(1); });
    const auto est = hsl::h1sl(ds, hsl::RegressorSpec::ols(),
                               hsl::ConstraintSpec::l1_ball(1.0, true));
    const auto& coef = est.models[0].coefficients();
    worst_coef = std::max({worst_coef, std::abs(coef(1) - 0.6), std::abs(coef(2) - 0.4)});

    std::mt19937_64 eng2(seed + 1000);
    const auto null_ds = hsl_test::convex_combo_panel(
        4, 10, 12, 8, 2, eng2, [](const Eigen::VectorXd&) { return 0.0; });
    const auto null_est = hsl::h1sl(null_ds, hsl::RegressorSpec::ols(),
                                    hsl::ConstraintSpec::l1_ball(1.0, true));
    for (int i = 0; i < null_ds.n_units(); ++i)
      worst_null = std::max(
          worst_null, std::abs(null_est.evaluate(null_ds.features.row(i).transpose())));
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  pass = worst_coef <= 1e-6 && worst_null <= 1e-8 && secs < 5.0;
  report(3, pass, "max coefficient error " + std::to_string(worst_coef) +
                      ", max null effect " + std::to_string(worst_null) + ", " +
                      std::to_string(secs) + " s");
  CHECK(pass);
}

TEST_CASE("criterion 4: step-5 boundaries and pseudo-outcome arithmetic") {
  auto scenario = hsl::preset("paper-a");
  scenario.seed = 20240;
  const auto panel = hsl::generate(scenario);
  const auto est = hsl::h2sl(panel.dataset, hsl::RegressorSpec::ols(),
                             hsl::ConstraintSpec::l1_ball(1.0, true));
  double worst = 0.0;
  for (int i = 0; i < panel.dataset.n_units(); ++i) {
    const Eigen::VectorXd x = panel.dataset.features.row(i).transpose();
    auto forced = est;
    forced.forced_propensity = 1.0;
    worst = std::max(worst, std::abs(forced.evaluate(x) - est.models[0].predict(x)));
    forced.forced_propensity = 0.0;
    worst = std::max(worst, std::abs(forced.evaluate(x) - est.models[1].predict(x)));
  }

  const bool arith =
      hsl::dr_pseudo_outcome(true, 0.7, 1.4, 1.4) == 1.4 &&
      hsl::dr_pseudo_outcome(true, 0.5, 2.0, 0.5) == 2.0 * (2.0 - 0.5) + 0.5 &&
      hsl::dr_pseudo_outcome(false, 0.25, 0.9, 1.0) ==
          (-0.25 / 0.1875) * (0.9 - 1.0) + 1.0;

  const bool pass = worst <= 1e-12 && arith;
  report(4, pass, "max boundary gap " + std::to_string(worst) + ", arithmetic " +
                      (arith ? "exact" : "off"));
  CHECK(pass);
}

TEST_CASE("criterion 5: scenario (a) ordering over 200 replications") {
  auto scenario = hsl::preset("paper-a");
  scenario.seed = 42;
  const auto opts = ordering_opts({"h1sl", "h2sl", "s", "t", "x", "did"}, 200);
  const auto stats = by_method(hsl::run_experiment(scenario, opts));
  const double h1 = median_of(stats.at("h1sl").mses);
  const double h2 = median_of(stats.at("h2sl").mses);
  bool pass = true;
  for (const char* b : {"s", "t", "x", "did"}) {
    const double mb = median_of(stats.at(b).mses);
    pass = pass && h1 < mb && h2 < mb;
  }
  report(5, pass, fmt_medians(stats));
  CHECK(pass);
}

TEST_CASE("criterion 6: scenario (b) ordering with the kernel step-3") {
  auto scenario = hsl::preset("paper-b");
  scenario.seed = 42;
  auto opts = ordering_opts({"h1sl", "h2sl", "s", "t", "x"}, 200);
  opts.regressor = hsl::RegressorSpec::kernel(0.0);  // leave-one-out CV bandwidth
  const auto stats = by_method(hsl::run_experiment(scenario, opts));
  const double h1 = median_of(stats.at("h1sl").mses);
  const double h2 = median_of(stats.at("h2sl").mses);
  bool pass = h1 <= h2;
  for (const char* b : {"s", "t", "x"}) {
    const double mb = median_of(stats.at(b).mses);
    pass = pass && h1 < mb && h2 < mb;
  }
  report(6, pass, fmt_medians(stats));
  CHECK(pass);
}

TEST_CASE("criterion 7: error shrinks with a longer panel and with more units") {
  auto mean_mse = [](const hsl::ScenarioConfig& scenario, const char* method) {
    hsl::BenchOpts opts = ordering_opts({method}, 100);
    const auto stats = by_method(hsl::run_experiment(scenario, opts));
    const auto& mses = stats.at(method).mses;
    REQUIRE_FALSE(mses.empty());
    double sum = 0.0;
    for (double v : mses) sum += v;
    return sum / static_cast<double>(mses.size());
  };

  auto scenario = hsl::preset("paper-a");
  scenario.seed = 4242;
  const double h1_short = mean_mse(scenario, "h1sl");
  auto longer = scenario;
  longer.t0 = 50;
  longer.t1 = 50;
  const double h1_long = mean_mse(longer, "h1sl");

  auto small_n = scenario;
  small_n.n_units = 30;
  auto large_n = scenario;
  large_n.n_units = 100;
  const double h2_small = mean_mse(small_n, "h2sl");
  const double h2_large = mean_mse(large_n, "h2sl");

  const bool pass = h1_long < h1_short && h2_large < h2_small;
  std::ostringstream ss;
  ss << "h1sl mean T=20:" << h1_short << " T=100:" << h1_long
     << "; h2sl mean N=30:" << h2_small << " N=100:" << h2_large;
  report(7, pass, ss.str());
  CHECK(pass);
}

TEST_CASE("criterion 8: CLI output is byte-identical across runs and parallelism") {
  const std::string cli = BENCH_CLI_PATH;
  const std::string base = "/tmp/hsl_acceptance_cli";
  auto run = [&](const std::string& out, int parallelism) {
    const std::string cmd = cli +
                            " run --scenario paper-a --methods h1sl,t,did --reps 20"
                            " --seed 7 --parallelism " +
                            std::to_string(parallelism) + " --out " + out +
                            " > /dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  const int rc1 = run(base + "_1.csv", 1);
  const int rc2 = run(base + "_2.csv", 1);
  const int rc8 = run(base + "_8.csv", 8);
  const std::string a = slurp(base + "_1.csv");
  const std::string b = slurp(base + "_2.csv");
  const std::string c = slurp(base + "_8.csv");
  const bool pass = rc1 == 0 && rc2 == 0 && rc8 == 0 && !a.empty() && a == b && a == c;
  std::ostringstream ss;
  ss << "exit codes " << rc1 << "/" << rc2 << "/" << rc8 << ", " << a.size()
     << " bytes, repeat " << (a == b ? "identical" : "DIFFERS") << ", parallel "
     << (a == c ? "identical" : "DIFFERS");
  report(8, pass, ss.str());
  for (const char* suffix : {"_1.csv", "_2.csv", "_8.csv"}) {
    std::remove((base + suffix).c_str());
    std::remove((base + suffix + ".manifest.json").c_str());
  }
  CHECK(pass);
}

TEST_CASE("criterion 9: AR(1) presets complete cleanly and keep the ordering") {
  auto a = hsl::preset("paper-a-ar1");
  a.seed = 42;
  const auto opts = ordering_opts({"h1sl", "h2sl", "s", "t", "x", "did"}, 100);
  const auto stats_a = by_method(hsl::run_experiment(a, opts));

  auto c = hsl::preset("paper-c-ar1");
  c.seed = 42;
  const auto opts_c = ordering_opts({"h1sl", "h2sl"}, 100);
  const auto stats_c = by_method(hsl::run_experiment(c, opts_c));

  int failures = 0;
  for (const auto& [m, s] : stats_a) failures += s.failures;
  for (const auto& [m, s] : stats_c) failures += s.failures;

  const double h1 = median_of(stats_a.at("h1sl").mses);
  const double h2 = median_of(stats_a.at("h2sl").mses);
  bool ordering = true;
  for (const char* b : {"s", "t", "x", "did"}) {
    const double mb = median_of(stats_a.at(b).mses);
    ordering = ordering && h1 < mb && h2 < mb;
  }
  const bool pass = failures == 0 && ordering;
  report(9, pass, "failures " + std::to_string(failures) + "; paper-a-ar1 " +
                      fmt_medians(stats_a));
  CHECK(pass);
}
