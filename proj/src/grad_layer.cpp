#include "nlqre/grad_layer.hpp"

#include <cmath>
#include <stdexcept>

namespace nlqre {

LogLossResult log_loss(const Game& g, const Vec& u, const Vec& v, const ObservedPlay& obs) {
  LogLossResult res;
  res.grad_u = Vec::Zero(g.tu.num_sequences());
  res.grad_v = Vec::Zero(g.tv.num_sequences());
  for (const PlayRecord& r : obs.records) {
    const Treeplex& t = r.player == 0 ? g.tu : g.tv;
    const Vec& plan = r.player == 0 ? u : v;
    Vec& grad = r.player == 0 ? res.grad_u : res.grad_v;
    if (r.infoset < 0 || r.infoset >= t.num_infosets())
      throw std::invalid_argument("log_loss: infoset out of range");
    const Infoset& is = t.infoset(r.infoset);
    if (r.action < 0 || r.action >= static_cast<int>(is.actions.size()))
      throw std::invalid_argument("log_loss: action out of range");
    const int a = is.actions[r.action];
    const int p = is.parent_sequence;
    if (!(plan[a] > 0.0) || !(plan[p] > 0.0)) {
      res.finite = false;
      res.loss = std::numeric_limits<double>::infinity();
      res.diagnostic = "observed action has zero probability (player " +
                       std::to_string(r.player) + ", infoset " + std::to_string(r.infoset) +
                       ", action " + std::to_string(r.action) + ")";
      return res;
    }
    res.loss += std::log(plan[p]) - std::log(plan[a]);
    grad[a] -= 1.0 / plan[a];
    grad[p] += 1.0 / plan[p];
  }
  return res;
}

std::vector<double> grad_payoff(const std::vector<std::pair<int, int>>& pattern, const Vec& u,
                                const Vec& v, const Vec& y_u, const Vec& y_v) {
  std::vector<double> out;
  out.reserve(pattern.size());
  for (const auto& [i, j] : pattern) {
    if (i < 0 || i >= u.size() || j < 0 || j >= v.size())
      throw std::invalid_argument("grad_payoff: pattern entry out of range");
    out.push_back(y_u[i] * v[j] + u[i] * y_v[j]);
  }
  return out;
}

LambdaGradient grad_lambda(const Game& g, const Vec& u, const Vec& v, const Vec& y_u,
                           const Vec& y_v) {
  LambdaGradient out;
  out.u = Vec::Zero(g.tu.num_infosets());
  out.v = Vec::Zero(g.tv.num_infosets());
  for (int h = 0; h < g.tu.num_infosets(); ++h) {
    const Infoset& is = g.tu.infoset(h);
    double s = -y_u[is.parent_sequence];
    for (int a : is.actions) s += (1.0 + std::log(u[a] / u[is.parent_sequence])) * y_u[a];
    out.u[h] = s;
  }
  for (int h = 0; h < g.tv.num_infosets(); ++h) {
    const Infoset& is = g.tv.infoset(h);
    double s = -y_v[is.parent_sequence];
    for (int a : is.actions) s += (1.0 + std::log(v[a] / v[is.parent_sequence])) * y_v[a];
    out.v[h] = -s;
  }
  return out;
}

}  // namespace nlqre
