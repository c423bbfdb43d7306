#include "nlqre/newton.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <stdexcept>

#include "nlqre/fom_forward.hpp"

namespace nlqre {

XiMatrix::XiMatrix(const Treeplex& t, Vec u, Vec lambda)
    : t_(&t), u_(std::move(u)), lambda_(std::move(lambda)) {
  const int n = t.num_sequences();
  if (u_.size() != n) throw std::invalid_argument("xi: plan size mismatch");
  if (lambda_.size() != t.num_infosets()) throw std::invalid_argument("xi: lambda size mismatch");
  for (int a = 0; a < n; ++a)
    if (!(u_[a] > 0.0)) throw std::invalid_argument("xi: plan must be strictly positive");
  diag_ = Vec::Zero(n);
  off_ = Vec::Zero(n);
  for (int a = 0; a < n; ++a) {
    double lam_sum = 0.0;
    for (int h : t.children(a)) lam_sum += lambda_[h];
    double own = a == 0 ? 0.0 : lambda_[t.seq_infoset(a)];
    diag_[a] = (own + lam_sum) / u_[a];
    if (a > 0) off_[a] = -lambda_[t.seq_infoset(a)] / u_[t.seq_parent(a)];
  }
  // Subnormal plan entries make lambda / u overflow, which would poison every
  // downstream solve with infinities.
  if (!diag_.allFinite() || !off_.allFinite())
    throw std::invalid_argument("xi: plan entries too small to form finite curvature");
}

Vec XiMatrix::apply(const Vec& x) const {
  const int n = t_->num_sequences();
  Vec out(n);
  for (int a = 0; a < n; ++a) out[a] = diag_[a] * x[a];
  for (int a = 1; a < n; ++a) {
    const int p = t_->seq_parent(a);
    out[a] += off_[a] * x[p];
    out[p] += off_[a] * x[a];
  }
  return out;
}

Vec XiMatrix::apply_pinned(const Vec& x) const {
  Vec xp = x;
  xp[0] = 0.0;
  Vec out = apply(xp);
  out[0] = 0.0;
  return out;
}

Vec XiMatrix::solve_pinned(const Vec& d) const {
  const Treeplex& t = *t_;
  const int n = t.num_sequences();
  // Scaled variables y_a = x_a / u_a satisfy y_a = y_parent + t_a where each
  // t_a folds in everything below a; leaves start the recursion.
  Vec tvals = Vec::Zero(n);
  Vec acc = Vec::Zero(n);
  for (int a = n - 1; a >= 1; --a) {
    const double lam = lambda_[t.seq_infoset(a)];
    tvals[a] = (d[a] + acc[a]) / lam;
    acc[t.seq_parent(a)] += lam * u_[a] * tvals[a] / u_[t.seq_parent(a)];
  }
  Vec x = Vec::Zero(n);
  Vec y = Vec::Zero(n);
  for (int a = 1; a < n; ++a) {
    y[a] = y[t.seq_parent(a)] + tvals[a];
    x[a] = u_[a] * y[a];
  }
  return x;
}

Eigen::MatrixXd XiMatrix::dense() const {
  const int n = t_->num_sequences();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a) m(a, a) = diag_[a];
  for (int a = 1; a < n; ++a) {
    const int p = t_->seq_parent(a);
    m(a, p) += off_[a];
    m(p, a) += off_[a];
  }
  return m;
}

Eigen::MatrixXd XiMatrix::dense_pinned() const {
  Eigen::MatrixXd full = dense();
  const int n = t_->num_sequences();
  return full.block(1, 1, n - 1, n - 1);
}

std::vector<Eigen::Triplet<double>> XiMatrix::pinned_triplets() const {
  std::vector<Eigen::Triplet<double>> trips;
  const int n = t_->num_sequences();
  for (int a = 1; a < n; ++a) {
    trips.emplace_back(a - 1, a - 1, diag_[a]);
    const int p = t_->seq_parent(a);
    if (p >= 1) {
      trips.emplace_back(a - 1, p - 1, off_[a]);
      trips.emplace_back(p - 1, a - 1, off_[a]);
    }
  }
  return trips;
}

namespace {

// Stationarity block for one player: payoff term + entropy gradient +
// multiplier stencil, over non-root sequences.
Vec stationarity(const Treeplex& t, const Vec& payoff_term, const Vec& grad_sign_entropy,
                 const Vec& mult) {
  const int n = t.num_sequences();
  Vec g(n - 1);
  for (int a = 1; a < n; ++a) {
    double s = payoff_term[a] + grad_sign_entropy[a] - mult[t.seq_infoset(a)];
    for (int h : t.children(a)) s += mult[h];
    g[a - 1] = s;
  }
  return g;
}

Vec flow_residual(const Treeplex& t, const Vec& u) {
  Vec r(1 + t.num_infosets());
  r[0] = u[0] - 1.0;
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    double s = -u[is.parent_sequence];
    for (int a : is.actions) s += u[a];
    r[1 + h] = s;
  }
  return r;
}

}  // namespace

Vec kkt_residual(const Game& g, const RationalityParams& lambda, const KktState& s) {
  const Vec pv = g.payoff.apply(s.v, false);
  const Vec ptu = g.payoff.apply(s.u, true);
  const Vec gu = stationarity(g.tu, pv, dilated_entropy_gradient(g.tu, s.u, lambda.u), s.mu);
  const Vec gv = stationarity(g.tv, ptu, -dilated_entropy_gradient(g.tv, s.v, lambda.v), s.nu);
  const Vec fu = flow_residual(g.tu, s.u);
  const Vec fv = flow_residual(g.tv, s.v);
  Vec out(gu.size() + gv.size() + fu.size() + fv.size());
  out << gu, gv, fu, fv;
  return out;
}

EquilibriumSolution newton_solve(const Game& g, const RationalityParams& lambda,
                                 const NewtonOptions& opts, const KktState* init) {
  const int nu = g.tu.num_sequences();
  const int nv = g.tv.num_sequences();
  const int iu = g.tu.num_infosets();
  const int iv = g.tv.num_infosets();
  const int dim = (nu - 1) + (nv - 1) + iu + iv;
  const int off_v = nu - 1;
  const int off_mu = off_v + (nv - 1);
  const int off_nu = off_mu + iu;

  KktState s;
  if (init) {
    s = *init;
  } else {
    s.u = behavioral_to_sequence(g.tu, uniform_behavioral(g.tu));
    s.v = behavioral_to_sequence(g.tv, uniform_behavioral(g.tv));
    s.mu = Vec::Zero(iu);
    s.nu = Vec::Zero(iv);
  }

  EquilibriumSolution sol;
  Vec res = kkt_residual(g, lambda, s);
  double res_norm = res.lpNorm<Eigen::Infinity>();
  sol.residual_history.push_back(res_norm);

  int it = 0;
  for (; it < opts.max_iters && res_norm > opts.tol; ++it) {
    std::vector<Eigen::Triplet<double>> trips;
    XiMatrix xi_u(g.tu, s.u, lambda.u);
    XiMatrix xi_v(g.tv, s.v, lambda.v);
    for (const auto& tr : xi_u.pinned_triplets()) trips.emplace_back(tr.row(), tr.col(), tr.value());
    for (const auto& tr : xi_v.pinned_triplets())
      trips.emplace_back(off_v + tr.row(), off_v + tr.col(), -tr.value());
    for (const PayoffEntry& e : g.payoff.entries()) {
      if (e.row >= 1 && e.col >= 1) {
        trips.emplace_back(e.row - 1, off_v + e.col - 1, e.value);
        trips.emplace_back(off_v + e.col - 1, e.row - 1, e.value);
      }
    }
    // Multiplier stencils and the matching flow-constraint rows.
    for (int h = 0; h < iu; ++h) {
      const Infoset& is = g.tu.infoset(h);
      for (int a : is.actions) {
        trips.emplace_back(a - 1, off_mu + h, -1.0);
        trips.emplace_back(off_mu + h, a - 1, 1.0);
      }
      if (is.parent_sequence >= 1) trips.emplace_back(off_mu + h, is.parent_sequence - 1, -1.0);
    }
    for (int a = 1; a < nu; ++a)
      for (int c : g.tu.children(a)) trips.emplace_back(a - 1, off_mu + c, 1.0);
    for (int h = 0; h < iv; ++h) {
      const Infoset& is = g.tv.infoset(h);
      for (int a : is.actions) {
        trips.emplace_back(off_v + a - 1, off_nu + h, -1.0);
        trips.emplace_back(off_nu + h, off_v + a - 1, 1.0);
      }
      if (is.parent_sequence >= 1)
        trips.emplace_back(off_nu + h, off_v + is.parent_sequence - 1, -1.0);
    }
    for (int a = 1; a < nv; ++a)
      for (int c : g.tv.children(a)) trips.emplace_back(off_v + a - 1, off_nu + c, 1.0);

    Eigen::SparseMatrix<double> J(dim, dim);
    J.setFromTriplets(trips.begin(), trips.end());
    J.makeCompressed();

    // Right-hand side: -residual, with the (identically zero) root rows of
    // the flow blocks dropped.
    Vec rhs(dim);
    rhs.segment(0, nu - 1) = -res.segment(0, nu - 1);
    rhs.segment(off_v, nv - 1) = -res.segment(nu - 1, nv - 1);
    rhs.segment(off_mu, iu) = -res.segment((nu - 1) + (nv - 1) + 1, iu);
    rhs.segment(off_nu, iv) = -res.segment((nu - 1) + (nv - 1) + 1 + iu + 1, iv);

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
    if (lu.info() != Eigen::Success) throw std::runtime_error("newton: singular saddle system");
    Vec delta = lu.solve(rhs);

    // Halve the step until every realization weight keeps a fixed fraction
    // of its current value, then keep halving until the residual norm does
    // not increase.
    double alpha = 1.0;
    auto candidate = [&](double a) {
      KktState c = s;
      c.u.segment(1, nu - 1) += a * delta.segment(0, nu - 1);
      c.v.segment(1, nv - 1) += a * delta.segment(off_v, nv - 1);
      c.mu += a * delta.segment(off_mu, iu);
      c.nu += a * delta.segment(off_nu, iv);
      return c;
    };
    auto keeps_floor = [&](const KktState& c) {
      for (int a = 1; a < nu; ++a)
        if (c.u[a] < opts.step_floor * s.u[a]) return false;
      for (int a = 1; a < nv; ++a)
        if (c.v[a] < opts.step_floor * s.v[a]) return false;
      return true;
    };
    KktState next = candidate(alpha);
    while (!keeps_floor(next) && alpha > 1e-13) {
      alpha *= 0.5;
      next = candidate(alpha);
    }
    Vec next_res = kkt_residual(g, lambda, next);
    double next_norm = next_res.lpNorm<Eigen::Infinity>();
    while (next_norm > res_norm && alpha > 1e-13) {
      alpha *= 0.5;
      next = candidate(alpha);
      next_res = kkt_residual(g, lambda, next);
      next_norm = next_res.lpNorm<Eigen::Infinity>();
    }
    if (alpha <= 1e-13) {
      sol.diagnostic = "newton: line search stalled at residual " + std::to_string(res_norm);
      break;
    }
    s = next;
    res = std::move(next_res);
    res_norm = next_norm;
    sol.residual_history.push_back(res_norm);
  }

  sol.u = s.u;
  sol.v = s.v;
  sol.mu = s.mu;
  sol.nu = s.nu;
  sol.iterations = it;
  sol.residual = res_norm;
  sol.converged = res_norm <= opts.tol;
  sol.value = g.payoff.quadratic(s.u, s.v);
  sol.max_constraint_residual =
      std::max(constraint_residual(g.tu, s.u), constraint_residual(g.tv, s.v));
  if (!sol.converged && sol.diagnostic.empty())
    sol.diagnostic = "newton: residual " + std::to_string(res_norm) + " above tolerance after " +
                     std::to_string(opts.max_iters) + " iterations";
  return sol;
}

}  // namespace nlqre
