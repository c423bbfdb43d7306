#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlqre/game.hpp"

namespace nlqre {

// One timed solve. `kind` is "trial" for raw rows and "mean"/"stddev" for
// aggregates over a setting; `achieved` is the duality gap (forward) or
// stationarity residual (backward) the solver reached.
struct BenchRecord {
  std::string kind = "trial";
  std::string game;
  std::string phase;   // forward | backward
  std::string solver;  // newton | fom | direct
  double seconds = 0.0;
  int iterations = 0;
  double achieved = 0.0;
  int seq_u = 0;
  int seq_v = 0;
  std::uint64_t seed = 0;
  double speedup = std::numeric_limits<double>::quiet_NaN();  // baseline / fom, on mean rows
};

// Forward protocol per trial: Newton to a loose residual, measure its
// duality gap, then run the first-order solver to that gap (floored).
// Backward protocol: at a tightly solved equilibrium and a log-loss gradient
// from one sampled trajectory, compare the sparse direct solve against the
// first-order solver.
struct BenchSuite {
  std::vector<int> depths = {1, 2};
  std::vector<int> sizes = {3, 5, 10};
  int trials = 3;
  std::uint64_t seed = 0;
  double newton_residual = 1e-3;
  double gap_floor = 1e-12;
  double forward_tau = 0.0;   // <= 0 picks the step size automatically
  double backward_tau = 0.0;  // <= 0 picks the step size automatically
  double backward_tol = 1e-8;
};

std::vector<BenchRecord> run_bench(const BenchSuite& suite);

// Rows: kind,game,phase,solver,seconds,iterations,achieved,seq_u,seq_v,seed,
// speedup,config_hash.
std::string bench_to_csv(const std::vector<BenchRecord>& records, const BenchSuite& suite);

std::string fnv1a_hex(const std::string& text);

}  // namespace nlqre
