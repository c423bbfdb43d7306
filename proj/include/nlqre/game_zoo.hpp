#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "nlqre/game.hpp"
#include "nlqre/grad_layer.hpp"

namespace nlqre {

// Random d-stage simultaneous-move game. Each stage both players pick one of
// `actions` moves without seeing the opponent's current move; the joint move
// is then revealed and play continues. Every joint terminal history gets an
// independent U[payoff_low, payoff_high] payoff, and every infoset an
// independent U[lambda_low, lambda_high] rationality parameter.
struct StackedGameSpec {
  int depth = 2;
  int actions = 3;
  double payoff_low = -10.0;
  double payoff_high = 10.0;
  double lambda_low = 0.9;
  double lambda_high = 1.1;
  std::uint64_t seed = 0;
};

Game gen_stacked(const StackedGameSpec& spec);

// One-card poker (multi-card Kuhn variant). Both players ante 1, are dealt
// one card each without replacement from `deck`, then: player 1 checks or
// bets 1; facing a bet, player 2 folds or calls; after a check, player 2
// checks or bets 1, and player 1 folds or calls. Showdown pays the pot to
// the higher card (split on ties). Payoffs are expressed for the second
// player, who is the max player; `swap_roles` flips which side of the
// min-max objective each seat occupies. Four lambda-tying groups keyed by
// public betting history.
struct PokerSpec {
  std::vector<int> deck = {1, 2, 3, 4};
  bool swap_roles = false;
};

Game gen_one_card_poker(const PokerSpec& spec);

// One-player information-gathering game: a 2x2 grid of cards, each uniform
// on {1..card_values}, is dealt face down. At stages 1-3 the player may
// guess which row has the larger sum or pay reveal_costs[stage-1] to flip
// the next card in row-major order; at stage 4 (three cards showing) only
// the guesses remain. Correct guesses score reward_win, incorrect
// reward_lose, exact ties reward_tie. The player is the min player and P
// holds the expected cost (reveal spend minus reward) per information state.
struct InfoGatherSpec {
  int card_values = 10;
  std::vector<double> reveal_costs = {1.0, 1.0, 1.0};
  double reward_win = 60.0;
  double reward_lose = -50.0;
  double reward_tie = 5.0;
};

struct InfoGatherGame {
  Game game;
  InfoGatherSpec spec;
  long long board_count = 0;  // equally likely boards folded into P
};

InfoGatherGame gen_info_gathering(const InfoGatherSpec& spec);

// Infoset label shared by the generator and the CSV ingester: "s1" at the
// empty stage, then "s<stage>:v1;v2;..." listing revealed values in order.
std::string info_gather_label(int stage, const std::vector<int>& revealed);

// Backward-induction oracle over information states, independent of the
// sequence-form payoff fold. `value` is the optimal expected net score
// (rewards minus reveal costs, higher is better); `action` maps each dense
// infoset id to the argmax action (0 guess-top, 1 guess-bottom, 2 reveal).
struct DpResult {
  double value = 0.0;
  std::vector<int> action;
};

DpResult dp_optimal_policy(const InfoGatherGame& ig);

// CSV schema: subject,episode,age_bin,education,stage,revealed,action with
// age_bin in 0..7, education in {GCSE, A-levels, Undergraduate, Graduate},
// revealed a ';'-joined value list, action in {guess-top, guess-bottom,
// reveal}. Rows grouped by subject x episode into one ObservedPlay with a
// 12-dim one-hot feature vector (8 age bins, 4 education levels). Malformed
// rows are skipped and reported.
struct IngestResult {
  std::vector<ObservedPlay> plays;
  std::vector<std::string> diagnostics;
};

IngestResult ingest_info_gathering_csv(std::istream& in, const Game& g);

void write_info_gathering_csv(std::ostream& out, const Game& g,
                              const std::vector<ObservedPlay>& plays);

}  // namespace nlqre
