// bench: Monte Carlo harness and estimator CLI for panel HTE learners.
//
//   bench run --scenario paper-a --methods h1sl,h2sl,x --reps 200 --seed 42 \
//             --parallelism 8 --out results.csv
//   bench summarize --in results.csv --out summary.csv
//   bench estimate --data panel.csv --method h1sl --out tau.csv
//
// Exit codes: 0 ok, 1 config error, 2 I/O error, 3 all replications failed.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hsl/bench.hpp"
#include "hsl/learners.hpp"
#include "hsl/panel.hpp"
#include "hsl/simgen.hpp"

namespace {

struct RegressorFlags {
  std::string kind;  // empty = scenario default
  double alpha = 1.0;
  double bandwidth = 0.5;
  int k = 5;
};

void add_regressor_flags(CLI::App* cmd, RegressorFlags& rf) {
  cmd->add_option("--regressor", rf.kind,
                  "ols|ridge|kernel|kernel-cv|knn (default: ols; kernel-cv for paper-b)");
  cmd->add_option("--alpha", rf.alpha, "ridge penalty");
  cmd->add_option("--bandwidth", rf.bandwidth, "kernel bandwidth");
  cmd->add_option("--k", rf.k, "kNN neighbor count");
}

hsl::RegressorSpec resolve_regressor(const RegressorFlags& rf, hsl::TauKind tau_kind) {
  std::string kind = rf.kind;
  if (kind.empty())
    kind = (tau_kind == hsl::TauKind::Cosine) ? "kernel-cv" : "ols";
  if (kind == "ols") return hsl::RegressorSpec::ols();
  if (kind == "ridge") return hsl::RegressorSpec::ridge(rf.alpha);
  if (kind == "kernel") return hsl::RegressorSpec::kernel(rf.bandwidth);
  if (kind == "kernel-cv") return hsl::RegressorSpec::kernel(0.0);  // LOO-CV grid
  if (kind == "knn") return hsl::RegressorSpec::knn(rf.k);
  throw CLI::ValidationError("--regressor", "unknown regressor: " + kind);
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic-control meta-learner benchmark harness"};
  app.require_subcommand(1);

  // --- run ---
  auto* run = app.add_subcommand("run", "run a replicated experiment");
  std::string scenario_arg = "paper-a";
  std::string methods_arg = "h1sl,h2sl,s,t,x,did";
  std::string out_path = "results.csv";
  std::string eval_on = "all";
  long long seed = 42;
  int reps = 100, parallelism = 1;
  bool timing = false;
  RegressorFlags run_rf;
  std::string constraint_kind = "l1";
  double radius = 1.0, lambda = 0.0;
  bool no_intercept = false;
  double solver_tol = 1e-10;
  int solver_max_iters = 50000;
  run->add_option("--scenario", scenario_arg, "preset name or scenario JSON file");
  run->add_option("--methods", methods_arg, "comma list of h1sl,h2sl,dr,s,t,x,rlite,did");
  run->add_option("--reps", reps, "replication count")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "base seed");
  run->add_option("--parallelism", parallelism, "worker pool size")
      ->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "results CSV path");
  run->add_option("--eval-on", eval_on, "all | treated | fresh:<k>");
  run->add_flag("--timing", timing, "record wall_time_ms (breaks byte-reproducibility)");
  add_regressor_flags(run, run_rf);
  run->add_option("--constraint", constraint_kind, "solver.constraint: l1 | simplex | penalized");
  run->add_option("--radius", radius, "L1 ball radius");
  run->add_option("--lambda", lambda, "solver.lambda (penalized simplex)");
  run->add_flag("--no-intercept", no_intercept, "solver.intercept off");
  run->add_option("--solver-tol", solver_tol, "solver.tol");
  run->add_option("--solver-max-iters", solver_max_iters, "solver.max_iters");

  // --- summarize ---
  auto* summ = app.add_subcommand("summarize", "aggregate a results CSV");
  std::string in_path = "results.csv", summary_path = "summary.csv";
  summ->add_option("--in", in_path, "results CSV")->required();
  summ->add_option("--out", summary_path, "summary CSV")->required();

  // --- estimate ---
  auto* est = app.add_subcommand("estimate", "fit one learner on user data");
  std::string data_path, method_arg = "h1sl", tau_path = "tau.csv";
  int data_t0 = 0;
  long long est_seed = 42;
  RegressorFlags est_rf;
  est->add_option("--data", data_path, "long-format panel CSV")->required();
  est->add_option("--method", method_arg, "h1sl|h2sl|dr|s|t|x|rlite|did");
  est->add_option("--out", tau_path, "output CSV: unit_id,x...,tau_hat");
  est->add_option("--t0", data_t0, "override inferred t0");
  est->add_option("--seed", est_seed, "seed (dr split)");
  add_regressor_flags(est, est_rf);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      hsl::ScenarioConfig scenario;
      try {
        scenario = hsl::load_scenario(scenario_arg);
      } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
      }
      scenario.seed = static_cast<std::uint64_t>(seed);

      hsl::BenchOpts opts;
      opts.methods = split_csv_list(methods_arg);
      opts.reps = reps;
      opts.parallelism = parallelism;
      opts.timing = timing;
      opts.solver.tol = solver_tol;
      opts.solver.max_iters = solver_max_iters;
      try {
        for (const auto& m : opts.methods) hsl::parse_method(m);
        opts.regressor = resolve_regressor(run_rf, scenario.tau_kind);
        if (constraint_kind == "l1")
          opts.constraint = hsl::ConstraintSpec::l1_ball(radius, !no_intercept);
        else if (constraint_kind == "simplex")
          opts.constraint = hsl::ConstraintSpec::simplex(!no_intercept);
        else if (constraint_kind == "penalized")
          // Feature distances are derived per target unit inside the solver.
          opts.constraint = hsl::ConstraintSpec::penalized_simplex(lambda, {}, !no_intercept);
        else
          throw std::invalid_argument("unknown constraint: " + constraint_kind);
        if (eval_on == "all")
          opts.eval_on = hsl::EvalOn::All;
        else if (eval_on == "treated")
          opts.eval_on = hsl::EvalOn::Treated;
        else if (eval_on.rfind("fresh:", 0) == 0) {
          opts.eval_on = hsl::EvalOn::Fresh;
          opts.fresh_count = std::stoi(eval_on.substr(6));
        } else {
          throw std::invalid_argument("unknown --eval-on: " + eval_on);
        }
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
      }
      const auto results = hsl::run_experiment(scenario, opts);
      nlohmann::json cfg = nlohmann::json::parse(hsl::to_json(scenario));
      cfg["methods"] = opts.methods;
      cfg["reps"] = reps;
      hsl::write_results(results, out_path, cfg.dump());

      bool any_ok = false;
      for (const auto& r : results) any_ok = any_ok || r.ok;
      for (const auto& row : hsl::summarize(results))
        std::printf("%-12s %-6s reps=%d median_mse=%.6g mean_mse=%.6g failures=%d\n",
                    row.scenario.c_str(), row.method.c_str(), row.n_reps, row.median_mse,
                    row.mean_mse, row.failure_count);
      if (!any_ok) {
        std::cerr << "all replications failed\n";
        return 3;
      }
      return 0;
    }

    if (*summ) {
      const auto results = hsl::read_results(in_path);
      hsl::write_summary(hsl::summarize(results), summary_path);
      return 0;
    }

    if (*est) {
      hsl::Method method;
      try {
        method = hsl::parse_method(method_arg);
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
      }
      hsl::ColumnSpec schema;
      if (data_t0 > 0) schema.t0 = data_t0;
      const hsl::PanelDataset ds = hsl::load_csv(data_path, schema);
      hsl::require_valid(ds);
      const auto spec = resolve_regressor(est_rf, hsl::TauKind::Linear);
      const auto fit = hsl::fit_method(method, ds, spec, hsl::ConstraintSpec::l1_ball(),
                                       static_cast<std::uint64_t>(est_seed));
      std::ofstream out(tau_path);
      if (!out) throw std::runtime_error("cannot write file: " + tau_path);
      out << "unit_id";
      for (int k = 1; k <= ds.n_features(); ++k) out << ",x" << k;
      out << ",tau_hat\n";
      char buf[40];
      for (int i = 0; i < ds.n_units(); ++i) {
        out << (ds.unit_ids.empty() ? "u" + std::to_string(i + 1) : ds.unit_ids[i]);
        for (int k = 0; k < ds.n_features(); ++k) {
          std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, k));
          out << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g",
                      fit.evaluate(ds.features.row(i).transpose()));
        out << ',' << buf << "\n";
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
