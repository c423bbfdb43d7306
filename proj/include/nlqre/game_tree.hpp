#pragma once

#include <random>
#include <string>
#include <vector>

#include "nlqre/game.hpp"
#include "nlqre/grad_layer.hpp"

namespace nlqre {

// Explicit extensive-form node. Decision nodes reference per-player dense
// infoset ids (assigned during sequence-form conversion); chance outcomes
// carry their probabilities; terminals store the max player's payoff.
struct TreeNode {
  enum class Kind { Chance, Decision, Terminal };
  Kind kind = Kind::Terminal;
  int player = -1;
  int infoset = -1;
  std::vector<int> children;
  std::vector<double> chance_probs;
  double payoff_max = 0.0;
};

struct GameTree {
  std::vector<TreeNode> nodes;
  int root = 0;
};

// Incremental construction helper for game generators. Decision nodes are
// keyed by (player, infoset key); reaching the same key from different
// chance branches merges into one infoset. Group keys drive lambda tying.
class TreeBuilder {
 public:
  int terminal(double payoff_max);
  int chance(std::vector<double> probs, std::vector<int> children);
  int decision(int player, const std::string& infoset_key, const std::string& group_key,
               std::vector<int> children);

  // Converts to sequence form: assigns topological sequence and infoset
  // indices, folds chance probabilities into the payoff matrix, and attaches
  // the tree to the game for sampling. Throws on imperfect recall.
  Game build(int root, const std::string& name) const;

 private:
  std::vector<TreeNode> nodes_;
  std::vector<std::string> infoset_keys_;
  std::vector<std::string> group_keys_;
};

// Walks the tree once, sampling chance outcomes and both players' actions
// from flat behavioral strategies, recording every decision made.
ObservedPlay sample_trajectory(const Game& g, const Vec& behavioral_u, const Vec& behavioral_v,
                               std::mt19937_64& rng);

// Expected payoff to the max player under behavioral strategies, computed
// on the tree (independent of the sequence-form payoff matrix).
double tree_expected_payoff(const Game& g, const Vec& behavioral_u, const Vec& behavioral_v);

// Probability that a trajectory visits each of `player`'s infosets.
Vec infoset_reach(const Game& g, int player, const Vec& behavioral_u, const Vec& behavioral_v);

}  // namespace nlqre
