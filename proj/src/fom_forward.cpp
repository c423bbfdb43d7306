#include "nlqre/fom_forward.hpp"

#include <cmath>
#include <stdexcept>

namespace nlqre {

SbrResult smoothed_best_response(const Treeplex& t, const Vec& cost, const Vec& lambda) {
  const int n = t.num_sequences();
  const int m = t.num_infosets();
  if (cost.size() != n) throw std::invalid_argument("sbr: cost size mismatch");
  if (lambda.size() != m) throw std::invalid_argument("sbr: lambda size mismatch");
  for (int h = 0; h < m; ++h)
    if (!(lambda[h] > 0.0)) throw std::invalid_argument("sbr: lambda must be positive");

  SbrResult res;
  res.r = -cost;
  res.z = Vec::Zero(m);
  res.behavioral = Vec::Zero(n);
  res.behavioral[0] = 1.0;

  // Bottom-up: descending infoset order visits children before parents.
  for (int h = m - 1; h >= 0; --h) {
    const Infoset& is = t.infoset(h);
    const double lam = lambda[h];
    double mx = -std::numeric_limits<double>::infinity();
    for (int a : is.actions) mx = std::max(mx, res.r[a] / lam);
    double s = 0.0;
    for (int a : is.actions) s += std::exp(res.r[a] / lam - mx);
    res.z[h] = lam * (mx + std::log(s));
    for (int a : is.actions) res.behavioral[a] = std::exp(res.r[a] / lam - mx) / s;
    res.r[is.parent_sequence] += res.z[h];
  }

  // Top-down: realization weights multiply along the tree.
  res.plan = Vec::Zero(n);
  res.plan[0] = 1.0;
  for (int h = 0; h < m; ++h) {
    const Infoset& is = t.infoset(h);
    for (int a : is.actions) res.plan[a] = res.plan[is.parent_sequence] * res.behavioral[a];
  }
  res.value = -res.r[0];
  return res;
}

double dilated_entropy(const Treeplex& t, const Vec& u, const Vec& lambda) {
  double e = 0.0;
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    const double parent = u[is.parent_sequence];
    for (int a : is.actions) {
      if (u[a] > 0.0) e += lambda[h] * u[a] * std::log(u[a] / parent);
    }
  }
  return e;
}

Vec dilated_entropy_gradient(const Treeplex& t, const Vec& u, const Vec& lambda) {
  // At very small lambda the true plan can fall below double range; flooring
  // inside the log keeps the gradient finite at truncated zeros and is a
  // no-op at interior points.
  constexpr double tiny = 1e-300;
  Vec g = Vec::Zero(t.num_sequences());
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    const double parent = std::max(u[is.parent_sequence], tiny);
    for (int a : is.actions) {
      g[a] += lambda[h] * (1.0 + std::log(std::max(u[a], tiny) / parent));
    }
    g[is.parent_sequence] -= lambda[h];
  }
  return g;
}

Vec prox_step(const Treeplex& t, const Vec& anchor, const Vec& linear, const Vec& lambda,
              double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("prox: tau must be positive");
  Vec grad = dilated_entropy_gradient(t, anchor, lambda);
  Vec cost = (tau / (1.0 + tau)) * (linear - grad / tau);
  return smoothed_best_response(t, cost, lambda).plan;
}

double duality_gap(const Game& g, const RationalityParams& lambda, const Vec& u, const Vec& v) {
  // max over v' of the saddle objective at u, minus min over u' at v.
  const double eu = dilated_entropy(g.tu, u, lambda.u);
  const double ev = dilated_entropy(g.tv, v, lambda.v);
  SbrResult best_u = smoothed_best_response(g.tu, g.payoff.apply(v, false), lambda.u);
  SbrResult best_v = smoothed_best_response(g.tv, -g.payoff.apply(u, true), lambda.v);
  return (eu - best_v.value) - (best_u.value - ev);
}

double auto_step_parameter(const Game& g, const RationalityParams& lambda) {
  // Without an opponent there is no primal-dual coupling to destabilize, so
  // the only limit on the step is how fast the prox contracts: take the cap.
  if (g.tu.is_trivial() || g.tv.is_trivial()) return 1.0;
  double lmin = std::numeric_limits<double>::infinity();
  if (lambda.u.size() > 0) lmin = std::min(lmin, lambda.u.minCoeff());
  if (lambda.v.size() > 0) lmin = std::min(lmin, lambda.v.minCoeff());
  if (!std::isfinite(lmin)) return 1.0;
  const double L = g.payoff.operator_norm_estimate();
  if (L <= 0.0) return 1.0;
  return std::min(1.0, 2.0 * lmin / L);
}

EquilibriumSolution fom_forward_solve(const Game& g, const RationalityParams& lambda,
                                      const FomOptions& opts, const Vec* u0, const Vec* v0) {
  EquilibriumSolution sol;
  Vec u = u0 ? *u0 : behavioral_to_sequence(g.tu, uniform_behavioral(g.tu));
  Vec v = v0 ? *v0 : behavioral_to_sequence(g.tv, uniform_behavioral(g.tv));
  double tau = opts.tau > 0.0 ? opts.tau : auto_step_parameter(g, lambda);

  double best_gap = std::numeric_limits<double>::infinity();
  Vec best_u = u, best_v = v;
  int it = 0;
  int restarts = 0;
  int checks_since_progress = 0;
  // Advances only on accumulated 0.1% improvement, so slow-but-steady
  // convergence keeps resetting the stall counter while a plateau does not.
  double stall_reference = std::numeric_limits<double>::infinity();

  auto check = [&](int iter) {
    double gap = duality_gap(g, lambda, u, v);
    if (opts.record_gap_history) sol.gap_history.emplace_back(iter, gap);
    if (gap < stall_reference * (1.0 - 1e-3)) {
      stall_reference = gap;
      checks_since_progress = 0;
    } else {
      ++checks_since_progress;
    }
    if (gap < best_gap) {
      best_gap = gap;
      best_u = u;
      best_v = v;
    }
    sol.max_constraint_residual =
        std::max({sol.max_constraint_residual, constraint_residual(g.tu, u),
                  constraint_residual(g.tv, v)});
    return gap;
  };

  double last_gap = check(0);
  const double diverged_above = 1e3 * (last_gap + opts.gap_tol);
  if (last_gap <= opts.gap_tol) {
    sol.converged = true;
  } else {
    for (it = 1; it <= opts.max_iters; ++it) {
      // Min player steps against the current dual iterate, then the dual
      // player responds to the extrapolated primal midpoint.
      Vec u_next = prox_step(g.tu, u, g.payoff.apply(v, false), lambda.u, tau);
      Vec u_mid = 2.0 * u_next - u;
      if (u_mid.minCoeff() < 0.0) ++sol.negative_extrapolations;
      v = prox_step(g.tv, v, -g.payoff.apply(u_mid, true), lambda.v, tau);
      u = u_next;
      if (it % opts.check_every == 0 || it == opts.max_iters) {
        last_gap = check(it);
        if (last_gap <= opts.gap_tol) {
          sol.converged = true;
          break;
        }
        // An oscillating gap never explodes on a bounded game, so a long
        // stretch without improvement counts as divergence too.
        const bool blew_up = !std::isfinite(last_gap) || last_gap > diverged_above;
        if ((blew_up || checks_since_progress >= 50) && restarts < 6) {
          // The step parameter is too aggressive for this game; back off and
          // resume from the best iterate seen.
          tau *= 0.25;
          ++restarts;
          checks_since_progress = 0;
          stall_reference = std::numeric_limits<double>::infinity();
          u = best_u;
          v = best_v;
          sol.diagnostic += "step parameter reduced to " + std::to_string(tau) + "; ";
        }
      }
    }
    if (it > opts.max_iters) it = opts.max_iters;
  }

  sol.u = sol.converged ? u : best_u;
  sol.v = sol.converged ? v : best_v;
  sol.gap = sol.converged ? last_gap : best_gap;
  sol.iterations = it;
  sol.value = g.payoff.quadratic(sol.u, sol.v);
  if (!sol.converged)
    sol.diagnostic += "gap " + std::to_string(sol.gap) + " above tolerance after " +
                      std::to_string(opts.max_iters) + " iterations";
  return sol;
}

}  // namespace nlqre
