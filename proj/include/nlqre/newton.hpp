#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "nlqre/game.hpp"

namespace nlqre {

// Hessian of the dilated entropy at a feasible interior plan u. Diagonal
// entries are (lambda_{rho_a} + sum of child-infoset lambdas) / u_a; each
// non-root sequence couples to its parent sequence with -lambda_{rho_a} /
// u_parent. The full matrix is singular along span{u}; all solves pin the
// root coordinate, where the restriction is positive definite.
class XiMatrix {
 public:
  XiMatrix() = default;
  XiMatrix(const Treeplex& t, Vec u, Vec lambda);

  const Vec& diag() const { return diag_; }
  const Vec& plan() const { return u_; }
  const Vec& lam() const { return lambda_; }

  // Full matrix-vector product, root row and column included.
  Vec apply(const Vec& x) const;

  // Matrix-vector product treating x[0] as zero; result[0] is dropped to 0.
  Vec apply_pinned(const Vec& x) const;

  // Solves Xi x = d on the non-root coordinates (x[0] = 0, d[0] ignored)
  // with one bottom-up elimination and one top-down substitution.
  Vec solve_pinned(const Vec& d) const;

  Eigen::MatrixXd dense() const;
  // Non-root principal block, the operator actually inverted.
  Eigen::MatrixXd dense_pinned() const;
  // Triplets of the non-root block with indices shifted down by one.
  std::vector<Eigen::Triplet<double>> pinned_triplets() const;

 private:
  const Treeplex* t_ = nullptr;
  Vec u_;
  Vec lambda_;
  Vec diag_;
  Vec off_;  // off_[a] couples sequence a to its parent; 0 at the root
};

struct KktState {
  Vec u;
  Vec v;
  Vec mu;  // one multiplier per min-player infoset
  Vec nu;
};

// Stacked first-order optimality residual: min-player stationarity over
// non-root sequences, max-player stationarity, then both players' flow
// constraints (root mass first, one row per infoset). Stationarity uses the
// multiplier stencil sum_{c in C_a} mu_c - mu_{rho_a}.
Vec kkt_residual(const Game& g, const RationalityParams& lambda, const KktState& s);

struct NewtonOptions {
  double tol = 1e-8;
  int max_iters = 200;
  double step_floor = 0.01;  // halve steps until entries keep this fraction
};

// Damped Newton iteration on the optimality system with a sparse LU
// factorization of the saddle Jacobian each step. Iterates stay exactly
// feasible, so the reported residual is pure stationarity error.
EquilibriumSolution newton_solve(const Game& g, const RationalityParams& lambda,
                                 const NewtonOptions& opts = {},
                                 const KktState* init = nullptr);

}  // namespace nlqre
