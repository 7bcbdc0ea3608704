// Compares the serial reference loop against the OpenMP worker pool on the
// same workload and checks the outputs agree. Usage:
//
//   bench_scaling [reps] [threads]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cmath>

#include "hsl/bench.hpp"

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 40;
  const int threads = argc > 2 ? std::atoi(argv[2]) : 8;

  hsl::ScenarioConfig scenario = hsl::preset("paper-a");
  scenario.seed = 42;

  hsl::BenchOpts opts;
  opts.methods = {"h1sl", "h2sl", "s", "t", "x", "did"};
  opts.reps = reps;

  using clock = std::chrono::steady_clock;

  auto t0 = clock::now();
  const auto serial = hsl::run_experiment_serial(scenario, opts);
  auto t1 = clock::now();
  opts.parallelism = threads;
  const auto parallel = hsl::run_experiment(scenario, opts);
  auto t2 = clock::now();

  const double serial_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  const double parallel_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();

  bool match = serial.size() == parallel.size();
  for (std::size_t i = 0; match && i < serial.size(); ++i)
    match = serial[i].method == parallel[i].method &&
            serial[i].replication == parallel[i].replication &&
            serial[i].ok == parallel[i].ok && serial[i].mse == parallel[i].mse;

  std::printf("reps=%d methods=%zu\n", reps, opts.methods.size());
  std::printf("serial:   %10.1f ms\n", serial_ms);
  std::printf("parallel: %10.1f ms  (%d threads, speedup %.2fx)\n", parallel_ms, threads,
              serial_ms / parallel_ms);
  std::printf("results identical: %s\n", match ? "yes" : "NO");
  return match ? 0 : 1;
}
