#pragma once

#include "nlqre/newton.hpp"

namespace nlqre {

struct QbrResult {
  Vec x;      // minimizer, root entry 0
  Vec gamma;  // flow-constraint multiplier per infoset
};

// Exact minimizer of <x, c> + x^T Xi x / 2 subject to zero net flow at
// every infoset (and x pinned to 0 at the root). Runs in linear time:
// the projected system E Xi^{-1} E^T is diagonal with entries u_parent /
// lambda_h, and Xi^{-1} applications are two tree sweeps.
QbrResult quadratic_best_response(const Treeplex& t, const Vec& c, const XiMatrix& xi);

// Sensitivity system data at an equilibrium (u, v): entropy Hessians for
// both players plus the loss gradient in the equilibrium variables.
struct BackwardProblem {
  XiMatrix xi_u;
  XiMatrix xi_v;
  Vec grad_u;
  Vec grad_v;
};

BackwardProblem make_backward_problem(const Game& g, const RationalityParams& lambda,
                                      const Vec& u, const Vec& v, Vec grad_u, Vec grad_v);

struct BackwardSolution {
  Vec y_u;  // full sequence length, root entries 0
  Vec y_v;
  Vec y_mu;  // produced by the direct solver only
  Vec y_nu;
  int iterations = 0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  bool converged = false;
  std::string diagnostic;
};

// Sparse LU factorization of the full saddle system
//   [ Xi_u   P     E^T  0   ] [y_u ]   [-grad_u]
//   [ P^T   -Xi_v  0    F^T ] [y_v ] = [-grad_v]
//   [ E      0     0    0   ] [y_mu]   [   0   ]
//   [ 0      F     0    0   ] [y_nu]   [   0   ]
// over non-root coordinates.
BackwardSolution direct_backward_solve(const Game& g, const BackwardProblem& bp);

struct BackwardFomOptions {
  // Proximal step size; <= 0 measures the payoff coupling in the curvature
  // metric and steps just inside the stability edge.
  double tau = 0.0;
  double tol = 1e-8;  // best-response residual in the infinity norm
  int max_iters = 1000000;
  int check_every = 20;
};

// Primal-dual iteration on the quadratic saddle reformulation of the
// sensitivity system, using quadratic best responses as prox steps. The
// termination metric is the stationarity residual against exact best
// responses, which vanishes at the solution of the direct system.
BackwardSolution fom_backward_solve(const Game& g, const BackwardProblem& bp,
                                    const BackwardFomOptions& opts = {});

}  // namespace nlqre
