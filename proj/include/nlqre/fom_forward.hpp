#pragma once

#include "nlqre/game.hpp"

namespace nlqre {

// Intermediate values of the smoothed best-response recursion. For every
// infoset h, z[h] = lambda_h * log sum_a exp(r[a] / lambda_h) over its
// actions, and r[a] = -cost[a] + sum of z over infosets following a.
struct SbrResult {
  Vec plan;        // sequence-form argmin
  Vec behavioral;  // flat behavioral probabilities
  Vec r;           // per sequence
  Vec z;           // per infoset
  double value = 0.0;  // attained min of <u, cost> + entropy
};

// Entropy weight per infoset, evaluated at the cost vector: solves
//   min_u  <u, cost> + sum_h lambda_h sum_{a in A_h} u_a log(u_a / u_parent)
// over the treeplex in one bottom-up plus one top-down sweep. Log-sum-exp
// is max-shifted so tiny lambda stays finite.
SbrResult smoothed_best_response(const Treeplex& t, const Vec& cost, const Vec& lambda);

// sum_h lambda_h sum_{a in A_h} u_a log(u_a / u_parent) for feasible u.
double dilated_entropy(const Treeplex& t, const Vec& u, const Vec& lambda);

// Gradient of the dilated entropy at a feasible interior plan:
//   lambda_{rho_a} (1 + log(u_a / u_parent)) - sum_{h in C_a} lambda_h,
// with the root entry carrying only the child-lambda sum.
Vec dilated_entropy_gradient(const Treeplex& t, const Vec& u, const Vec& lambda);

// One Bregman proximal step anchored at `anchor`:
//   argmin_u <u, linear> + entropy(u) + (1/tau) D(u, anchor)
// computed as a smoothed best response to the cost
//   tau/(1+tau) * (linear - (1/tau) * entropy_gradient(anchor)).
Vec prox_step(const Treeplex& t, const Vec& anchor, const Vec& linear, const Vec& lambda,
              double tau);

// Saddle-point duality gap of (u, v): best max-player improvement plus best
// min-player improvement, both via exact smoothed best responses. Zero
// exactly at the equilibrium, positive elsewhere.
double duality_gap(const Game& g, const RationalityParams& lambda, const Vec& u, const Vec& v);

struct FomOptions {
  double tau = 0.0;  // primal and dual step parameter; <= 0 picks it automatically
  double gap_tol = 1e-9;
  int max_iters = 1000000;
  int check_every = 20;
  bool record_gap_history = false;
};

// Stable step parameter for the primal-dual loop: the Bregman anchoring
// scales with the smallest rationality parameter while the coupling scales
// with ||P||, so tau tracks their ratio (the observed stability edge sits
// near 8x this value).
double auto_step_parameter(const Game& g, const RationalityParams& lambda);

// Primal-dual smoothing loop: alternating entropy-prox steps for the two
// players with linear extrapolation of the min player's iterate. The
// extrapolated point may leave the positive cone; only P^T x~ is consumed.
// Falls back to the best iterate seen if max_iters is exhausted.
EquilibriumSolution fom_forward_solve(const Game& g, const RationalityParams& lambda,
                                      const FomOptions& opts = {},
                                      const Vec* u0 = nullptr, const Vec* v0 = nullptr);

}  // namespace nlqre
