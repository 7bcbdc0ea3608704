#ifndef HSL_BENCH_HPP
#define HSL_BENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hsl/learners.hpp"
#include "hsl/simgen.hpp"

namespace hsl {

struct RunResult {
  std::string scenario;
  std::string method;
  int replication = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  double sum_se = 0.0;
  long wall_time_ms = 0;
  bool ok = true;
  std::string fail_reason;
};

struct SummaryRow {
  std::string scenario;
  std::string method;
  int n_reps = 0;
  double mean_mse = 0.0;
  double median_mse = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  int failure_count = 0;
};

enum class EvalOn { All, Treated, Fresh };

struct BenchOpts {
  std::vector<std::string> methods;
  int reps = 1;
  int parallelism = 1;
  RegressorSpec regressor;
  ConstraintSpec constraint = ConstraintSpec::l1_ball();
  SolverOpts solver;
  EvalOn eval_on = EvalOn::All;
  int fresh_count = 100;  // EvalOn::Fresh
  bool timing = false;    // wall_time_ms stays 0 unless enabled (reproducible CSV)
};

/// Runs reps x methods fits against freshly generated panels, scoring tau-hat
/// at the evaluation features against the true tau. Failures are contained
/// per (replication, method). Output order is deterministic regardless of
/// parallelism. Per-replication seeds: scenario.seed XOR splitmix(rep).
std::vector<RunResult> run_experiment(const ScenarioConfig& scenario,
                                      const BenchOpts& opts);

/// Serial reference for run_experiment; identical results, no worker pool.
std::vector<RunResult> run_experiment_serial(const ScenarioConfig& scenario,
                                             const BenchOpts& opts);

/// Groups by (scenario, method) in first-appearance order; quantiles over ok
/// runs only (linear interpolation).
std::vector<SummaryRow> summarize(const std::vector<RunResult>& results);

/// CSV with header scenario,method,replication,seed,mse,sum_se,wall_time_ms,status
/// plus a sibling <path>.manifest.json (config, seed, version, timestamp).
void write_results(const std::vector<RunResult>& results, const std::string& path,
                   const std::string& manifest_config = "{}");
std::vector<RunResult> read_results(const std::string& path);

void write_summary(const std::vector<SummaryRow>& rows, const std::string& path);

}  // namespace hsl

#endif
