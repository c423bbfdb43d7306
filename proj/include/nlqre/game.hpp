#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nlqre/payoff.hpp"
#include "nlqre/treeplex.hpp"

namespace nlqre {

struct GameTree;

// Per-infoset rationality parameters for each player. Larger values mean
// noisier play; the limit toward zero recovers best-response behavior.
struct RationalityParams {
  Vec u;
  Vec v;
};

// Two-player zero-sum game in sequence form. The payoff matrix holds the
// max player's payoffs, so the min player minimizes u^T P v. Generated games
// keep the extensive tree around for trajectory sampling; games loaded from
// disk do not.
struct Game {
  std::string name;
  Treeplex tu;
  Treeplex tv;
  SparsePayoff payoff;
  RationalityParams lambda;
  // Optional weight-tying map: group id per infoset, shared across players.
  // Empty when every infoset is its own group.
  std::vector<int> lambda_group_u;
  std::vector<int> lambda_group_v;
  std::shared_ptr<const GameTree> tree;

  int num_lambda_groups() const;
};

struct EquilibriumSolution {
  Vec u;
  Vec v;
  Vec mu;  // constraint multipliers per min-player infoset (Newton only)
  Vec nu;
  int iterations = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double residual = std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;  // u^T P v
  bool converged = false;
  double max_constraint_residual = 0.0;
  int negative_extrapolations = 0;  // primal-dual midpoints outside the cone
  std::vector<std::pair<int, double>> gap_history;
  std::vector<double> residual_history;
  std::string diagnostic;
};

// JSON (de)serialization of games. Field names: treeplex_u, treeplex_v,
// payoffs as [row, col, value] triplets, lambda with per-infoset arrays
// under "u" and "v". All indices 0-based with sequence 0 the root.
std::string game_to_json(const Game& g);
Game game_from_json(const std::string& text);
Game load_game(const std::string& path);
void save_game(const Game& g, const std::string& path);

}  // namespace nlqre
