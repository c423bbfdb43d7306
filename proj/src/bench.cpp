#include "nlqre/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "nlqre/fom_backward.hpp"
#include "nlqre/fom_forward.hpp"
#include "nlqre/game_tree.hpp"
#include "nlqre/game_zoo.hpp"
#include "nlqre/grad_layer.hpp"
#include "nlqre/newton.hpp"

namespace nlqre {

namespace {

double now_between(const std::chrono::steady_clock::time_point& a,
                   const std::chrono::steady_clock::time_point& b) {
  return std::chrono::duration<double>(b - a).count();
}

BenchRecord base_record(const Game& g, const std::string& phase, const std::string& solver,
                        std::uint64_t seed) {
  BenchRecord r;
  r.game = g.name;
  r.phase = phase;
  r.solver = solver;
  r.seq_u = g.tu.num_sequences();
  r.seq_v = g.tv.num_sequences();
  r.seed = seed;
  return r;
}

struct Aggregate {
  std::vector<double> seconds;
  std::vector<int> iterations;
  BenchRecord proto;
};

void summarize(std::vector<BenchRecord>& out, const Aggregate& newton_side,
               const Aggregate& fom_side, const std::string& setting) {
  auto stats = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    return std::pair<double, double>(mean, xs.size() > 1 ? std::sqrt(var / (xs.size() - 1)) : 0.0);
  };
  auto emit = [&](const Aggregate& agg, double speedup) {
    if (agg.seconds.empty()) return;
    const auto [mean, sd] = stats(agg.seconds);
    BenchRecord m = agg.proto;
    m.kind = "mean";
    m.game = setting;
    m.seconds = mean;
    double it = 0.0;
    for (int i : agg.iterations) it += i;
    m.iterations = static_cast<int>(it / agg.iterations.size());
    m.achieved = 0.0;
    m.speedup = speedup;
    out.push_back(m);
    BenchRecord s = m;
    s.kind = "stddev";
    s.seconds = sd;
    s.iterations = 0;
    s.speedup = std::numeric_limits<double>::quiet_NaN();
    out.push_back(s);
  };
  double nt = 0.0, ft = 0.0;
  for (double x : newton_side.seconds) nt += x;
  for (double x : fom_side.seconds) ft += x;
  emit(newton_side, std::numeric_limits<double>::quiet_NaN());
  emit(fom_side, (ft > 0.0 && !fom_side.seconds.empty() && !newton_side.seconds.empty())
                     ? nt / ft
                     : std::numeric_limits<double>::quiet_NaN());
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchSuite& suite) {
  std::vector<BenchRecord> out;
  using clock = std::chrono::steady_clock;
  for (int d : suite.depths) {
    for (int n : suite.sizes) {
      Aggregate fwd_newton, fwd_fom, bwd_direct, bwd_fom;
      const std::string setting = "stacked_d" + std::to_string(d) + "_n" + std::to_string(n);
      for (int trial = 0; trial < suite.trials; ++trial) {
        const std::uint64_t seed = suite.seed + 1000003ull * trial + 7919ull * n + 13ull * d;
        StackedGameSpec spec;
        spec.depth = d;
        spec.actions = n;
        spec.seed = seed;
        Game g;
        try {
          g = gen_stacked(spec);
        } catch (const std::exception&) {
          BenchRecord r;
          r.kind = "skipped";
          r.game = setting;
          r.seed = seed;
          out.push_back(r);
          continue;
        }

        NewtonOptions nopt;
        nopt.tol = suite.newton_residual;
        const auto t0 = clock::now();
        EquilibriumSolution ns = newton_solve(g, g.lambda, nopt);
        const auto t1 = clock::now();
        {
          BenchRecord r = base_record(g, "forward", "newton", seed);
          r.seconds = now_between(t0, t1);
          r.iterations = ns.iterations;
          r.achieved = ns.residual;
          out.push_back(r);
          if (ns.converged) {
            fwd_newton.seconds.push_back(r.seconds);
            fwd_newton.iterations.push_back(r.iterations);
            fwd_newton.proto = r;
          }
        }
        const double newton_gap = duality_gap(g, g.lambda, ns.u, ns.v);
        const double target_gap = std::max(newton_gap, suite.gap_floor);

        FomOptions fopt;
        fopt.tau = suite.forward_tau;
        fopt.gap_tol = target_gap;
        const auto t2 = clock::now();
        EquilibriumSolution fs = fom_forward_solve(g, g.lambda, fopt);
        const auto t3 = clock::now();
        {
          BenchRecord r = base_record(g, "forward", "fom", seed);
          r.seconds = now_between(t2, t3);
          r.iterations = fs.iterations;
          r.achieved = fs.gap;
          out.push_back(r);
          if (fs.converged) {
            fwd_fom.seconds.push_back(r.seconds);
            fwd_fom.iterations.push_back(r.iterations);
            fwd_fom.proto = r;
          }
        }

        // Backward comparison at the ground-truth parameters: tighten the
        // equilibrium, sample one trajectory, and push its loss gradient
        // through both backward solvers.
        NewtonOptions tight;
        tight.tol = 1e-10;
        KktState init{ns.u, ns.v, ns.mu, ns.nu};
        EquilibriumSolution eq = newton_solve(g, g.lambda, tight, &init);
        if (!eq.converged) continue;
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
        ObservedPlay play = sample_trajectory(g, sequence_to_behavioral(g.tu, eq.u),
                                              sequence_to_behavioral(g.tv, eq.v), rng);
        LogLossResult ll = log_loss(g, eq.u, eq.v, play);
        if (!ll.finite) continue;
        BackwardProblem bp = make_backward_problem(g, g.lambda, eq.u, eq.v, ll.grad_u, ll.grad_v);

        const auto t4 = clock::now();
        BackwardSolution ds = direct_backward_solve(g, bp);
        const auto t5 = clock::now();
        {
          BenchRecord r = base_record(g, "backward", "direct", seed);
          r.seconds = now_between(t4, t5);
          r.iterations = 1;
          r.achieved = ds.residual;
          out.push_back(r);
          bwd_direct.seconds.push_back(r.seconds);
          bwd_direct.iterations.push_back(1);
          bwd_direct.proto = r;
        }

        BackwardFomOptions bopt;
        bopt.tau = suite.backward_tau;
        bopt.tol = suite.backward_tol;
        const auto t6 = clock::now();
        BackwardSolution bs = fom_backward_solve(g, bp, bopt);
        const auto t7 = clock::now();
        {
          BenchRecord r = base_record(g, "backward", "fom", seed);
          r.seconds = now_between(t6, t7);
          r.iterations = bs.iterations;
          r.achieved = bs.residual;
          out.push_back(r);
          if (bs.converged) {
            bwd_fom.seconds.push_back(r.seconds);
            bwd_fom.iterations.push_back(r.iterations);
            bwd_fom.proto = r;
          }
        }
      }
      summarize(out, fwd_newton, fwd_fom, setting);
      summarize(out, bwd_direct, bwd_fom, setting);
    }
  }
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

std::string bench_to_csv(const std::vector<BenchRecord>& records, const BenchSuite& suite) {
  std::ostringstream cfg;
  cfg << "depths=";
  for (int d : suite.depths) cfg << d << ';';
  cfg << " sizes=";
  for (int n : suite.sizes) cfg << n << ';';
  cfg << " trials=" << suite.trials << " seed=" << suite.seed
      << " newton_residual=" << suite.newton_residual << " gap_floor=" << suite.gap_floor
      << " forward_tau=" << suite.forward_tau << " backward_tau=" << suite.backward_tau
      << " backward_tol=" << suite.backward_tol;
  const std::string hash = fnv1a_hex(cfg.str());

  std::ostringstream out;
  out.precision(12);
  out << "kind,game,phase,solver,seconds,iterations,achieved,seq_u,seq_v,seed,speedup,"
         "config_hash\n";
  for (const BenchRecord& r : records) {
    out << r.kind << ',' << r.game << ',' << r.phase << ',' << r.solver << ',' << r.seconds
        << ',' << r.iterations << ',' << r.achieved << ',' << r.seq_u << ',' << r.seq_v << ','
        << r.seed << ',';
    if (std::isnan(r.speedup))
      out << "";
    else
      out << r.speedup;
    out << ',' << hash << '\n';
  }
  return out.str();
}

}  // namespace nlqre
