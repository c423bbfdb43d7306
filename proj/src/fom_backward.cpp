#include "nlqre/fom_backward.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

namespace nlqre {

QbrResult quadratic_best_response(const Treeplex& t, const Vec& c, const XiMatrix& xi) {
  const int n = t.num_sequences();
  const int m = t.num_infosets();
  if (c.size() != n) throw std::invalid_argument("qbr: cost size mismatch");
  const Vec& u = xi.plan();

  // Multipliers first: project Xi^{-1} c onto the constraint rows. The
  // projected operator is diagonal, so each infoset decouples. Subtree sums
  // of u_a c_a accumulate bottom-up.
  Vec acc(n);
  for (int a = 0; a < n; ++a) acc[a] = u[a] * c[a];
  QbrResult res;
  res.gamma = Vec::Zero(m);
  for (int h = m - 1; h >= 0; --h) {
    const Infoset& is = t.infoset(h);
    double sub = 0.0;
    for (int a : is.actions) sub += acc[a];
    acc[is.parent_sequence] += sub;
    // w_h = sub / lam[h]; gamma_h = -w_h * lam[h] / u_parent.
    res.gamma[h] = -sub / u[is.parent_sequence];
  }

  // x = Xi^{-1} (-c - E^T gamma).
  Vec d(n);
  d[0] = 0.0;
  for (int a = 1; a < n; ++a) {
    double s = -c[a] - res.gamma[t.seq_infoset(a)];
    for (int h : t.children(a)) s += res.gamma[h];
    d[a] = s;
  }
  res.x = xi.solve_pinned(d);
  return res;
}

BackwardProblem make_backward_problem(const Game& g, const RationalityParams& lambda,
                                      const Vec& u, const Vec& v, Vec grad_u, Vec grad_v) {
  BackwardProblem bp;
  bp.xi_u = XiMatrix(g.tu, u, lambda.u);
  bp.xi_v = XiMatrix(g.tv, v, lambda.v);
  bp.grad_u = std::move(grad_u);
  bp.grad_v = std::move(grad_v);
  if (bp.grad_u.size() != g.tu.num_sequences() || bp.grad_v.size() != g.tv.num_sequences())
    throw std::invalid_argument("backward: gradient size mismatch");
  return bp;
}

BackwardSolution direct_backward_solve(const Game& g, const BackwardProblem& bp) {
  const int nu = g.tu.num_sequences();
  const int nv = g.tv.num_sequences();
  const int iu = g.tu.num_infosets();
  const int iv = g.tv.num_infosets();
  const int off_v = nu - 1;
  const int off_mu = off_v + (nv - 1);
  const int off_nu = off_mu + iu;
  const int dim = off_nu + iv;

  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& tr : bp.xi_u.pinned_triplets()) trips.emplace_back(tr.row(), tr.col(), tr.value());
  for (const auto& tr : bp.xi_v.pinned_triplets())
    trips.emplace_back(off_v + tr.row(), off_v + tr.col(), -tr.value());
  for (const PayoffEntry& e : g.payoff.entries()) {
    if (e.row >= 1 && e.col >= 1) {
      trips.emplace_back(e.row - 1, off_v + e.col - 1, e.value);
      trips.emplace_back(off_v + e.col - 1, e.row - 1, e.value);
    }
  }
  for (int h = 0; h < iu; ++h) {
    const Infoset& is = g.tu.infoset(h);
    for (int a : is.actions) {
      trips.emplace_back(off_mu + h, a - 1, 1.0);
      trips.emplace_back(a - 1, off_mu + h, 1.0);
    }
    if (is.parent_sequence >= 1) {
      trips.emplace_back(off_mu + h, is.parent_sequence - 1, -1.0);
      trips.emplace_back(is.parent_sequence - 1, off_mu + h, -1.0);
    }
  }
  for (int h = 0; h < iv; ++h) {
    const Infoset& is = g.tv.infoset(h);
    for (int a : is.actions) {
      trips.emplace_back(off_nu + h, off_v + a - 1, 1.0);
      trips.emplace_back(off_v + a - 1, off_nu + h, 1.0);
    }
    if (is.parent_sequence >= 1) {
      trips.emplace_back(off_nu + h, off_v + is.parent_sequence - 1, -1.0);
      trips.emplace_back(off_v + is.parent_sequence - 1, off_nu + h, -1.0);
    }
  }

  Eigen::SparseMatrix<double> A(dim, dim);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();

  Vec rhs = Vec::Zero(dim);
  rhs.segment(0, nu - 1) = -bp.grad_u.segment(1, nu - 1);
  rhs.segment(off_v, nv - 1) = -bp.grad_v.segment(1, nv - 1);

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("backward: singular sensitivity system");
  Vec sol = lu.solve(rhs);

  BackwardSolution out;
  out.y_u = Vec::Zero(nu);
  out.y_v = Vec::Zero(nv);
  out.y_u.segment(1, nu - 1) = sol.segment(0, nu - 1);
  out.y_v.segment(1, nv - 1) = sol.segment(off_v, nv - 1);
  out.y_mu = sol.segment(off_mu, iu);
  out.y_nu = sol.segment(off_nu, iv);
  out.converged = true;
  out.iterations = 1;
  out.residual = 0.0;
  return out;
}

namespace {

// Stability edge of the primal-dual iteration on the quadratic saddle: the
// prox terms are 1-strongly convex in the Xi-weighted metric, so the step
// must satisfy tau * ||Xi_u^{-1/2} P Xi_v^{-1/2}|| <= 1. The squared norm is
// the top eigenvalue of Xi_u^{-1} P Xi_v^{-1} P^T, which power iteration
// reaches with linear-time pinned solves. Padded so tau errs on the small
// side; the divergence restart catches the remainder.
double backward_step_parameter(const Game& g, const BackwardProblem& bp) {
  Vec q = Vec::Ones(g.tu.num_sequences());
  q[0] = 0.0;
  if (q.size() <= 1 || bp.xi_v.plan().size() <= 1) return 1.0;
  q.normalize();
  double growth = 0.0;
  for (int it = 0; it < 60; ++it) {
    Vec s = bp.xi_v.solve_pinned(g.payoff.apply(q, true));
    Vec r = bp.xi_u.solve_pinned(g.payoff.apply(s, false));
    growth = r.norm();
    if (growth < 1e-300) return 1.0;
    q = r / growth;
  }
  const double coupling = std::sqrt(growth) * 1.15;
  if (!(coupling > 0.0) || !std::isfinite(coupling)) return 1.0;
  return 1.0 / coupling;
}

}  // namespace

BackwardSolution fom_backward_solve(const Game& g, const BackwardProblem& bp,
                                    const BackwardFomOptions& opts) {
  const int nu = g.tu.num_sequences();
  const int nv = g.tv.num_sequences();
  double tau = opts.tau > 0.0 ? opts.tau : backward_step_parameter(g, bp);
  Vec x = Vec::Zero(nu);
  Vec y = Vec::Zero(nv);

  BackwardSolution out;
  auto residual = [&]() {
    QbrResult bx = quadratic_best_response(g.tu, bp.grad_u + g.payoff.apply(y, false), bp.xi_u);
    QbrResult by =
        quadratic_best_response(g.tv, -bp.grad_v - g.payoff.apply(x, true), bp.xi_v);
    Vec ru = bp.xi_u.apply_pinned(x - bx.x);
    Vec rv = bp.xi_v.apply_pinned(y - by.x);
    // Max-reductions skip NaN entries, so test finiteness before taking norms.
    if (!ru.allFinite() || !rv.allFinite()) return std::numeric_limits<double>::infinity();
    return std::max(ru.lpNorm<Eigen::Infinity>(), rv.lpNorm<Eigen::Infinity>());
  };

  double res = residual();
  const double diverged_above = 1e3 * (res + opts.tol);
  double best_res = res;
  Vec best_x = x, best_y = y;
  int it = 0;
  int restarts = 0;
  int checks_since_progress = 0;
  double stall_reference = res;
  while (res > opts.tol && it < opts.max_iters) {
    ++it;
    const double w = tau / (1.0 + tau);
    Vec cx = w * (bp.grad_u + g.payoff.apply(y, false) - bp.xi_u.apply_pinned(x) / tau);
    Vec x_next = quadratic_best_response(g.tu, cx, bp.xi_u).x;
    Vec x_mid = 2.0 * x_next - x;
    Vec cy = w * (-bp.grad_v - g.payoff.apply(x_mid, true) - bp.xi_v.apply_pinned(y) / tau);
    y = quadratic_best_response(g.tv, cy, bp.xi_v).x;
    x = x_next;
    if (it % opts.check_every == 0 || it == opts.max_iters) {
      res = residual();
      if (res < best_res) {
        best_res = res;
        best_x = x;
        best_y = y;
      }
      if (res < stall_reference * (1.0 - 1e-3)) {
        stall_reference = res;
        checks_since_progress = 0;
      } else {
        ++checks_since_progress;
      }
      if (!std::isfinite(res) || res > diverged_above) {
        if (restarts >= 6) break;
        tau *= 0.25;
        ++restarts;
        x = best_x;
        y = best_y;
        stall_reference = std::numeric_limits<double>::infinity();
        checks_since_progress = 0;
        out.diagnostic += "step parameter reduced to " + std::to_string(tau) + "; ";
      } else if (checks_since_progress >= 50) {
        // Ill-conditioned curvature puts the attainable residual floor above
        // the target; keep the best iterate instead of burning the budget.
        break;
      }
    }
  }

  out.converged = res <= opts.tol;
  out.y_u = out.converged ? x : best_x;
  out.y_v = out.converged ? y : best_y;
  out.iterations = it;
  out.residual = out.converged ? res : best_res;
  if (!out.converged)
    out.diagnostic += "backward fom: residual " + std::to_string(out.residual) + " after " +
                      std::to_string(it) + " iterations";
  return out;
}

}  // namespace nlqre
