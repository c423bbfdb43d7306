#pragma once

#include <utility>

#include "nlqre/game.hpp"

namespace nlqre {

// One observed decision: `action` is the local index into the infoset's
// action list. Player 0 is the minimizer, player 1 the maximizer.
struct PlayRecord {
  int player = 0;
  int infoset = 0;
  int action = 0;
};

// A sampled or recorded trajectory with the covariates that drove it.
struct ObservedPlay {
  Vec features;
  std::vector<PlayRecord> records;
};

struct LogLossResult {
  double loss = 0.0;
  Vec grad_u;  // dLoss/du, per sequence (root entry reachable but unused downstream)
  Vec grad_v;
  bool finite = true;
  std::string diagnostic;
};

// Negative log likelihood of the observed actions under the behavioral
// strategies induced by (u, v). An observed action with zero realization
// weight makes the loss infinite; it is reported, never clamped.
LogLossResult log_loss(const Game& g, const Vec& u, const Vec& v, const ObservedPlay& obs);

// dLoss/dP_{ij} = y_u[i] * v[j] + u[i] * y_v[j], evaluated on the given
// coordinate pattern only.
std::vector<double> grad_payoff(const std::vector<std::pair<int, int>>& pattern, const Vec& u,
                                const Vec& v, const Vec& y_u, const Vec& y_v);

struct LambdaGradient {
  Vec u;  // per min-player infoset
  Vec v;
};

// dLoss/dlambda_h via the adjoint plans: for the min player the local
// stencil is (1 + log(u_a / u_parent)) on the infoset's actions and -1 on
// the parent sequence; the max player's enters with opposite sign.
LambdaGradient grad_lambda(const Game& g, const Vec& u, const Vec& v, const Vec& y_u,
                           const Vec& y_v);

}  // namespace nlqre
