#include "nlqre/game_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "nlqre/game_tree.hpp"
#include "nlqre/rng.hpp"

namespace nlqre {

namespace {

std::string joint_history_key(const std::vector<std::pair<int, int>>& hist) {
  std::string s;
  for (auto [i, j] : hist) {
    s += std::to_string(i);
    s += ',';
    s += std::to_string(j);
    s += '|';
  }
  return s;
}

}  // namespace

Game gen_stacked(const StackedGameSpec& spec) {
  if (spec.depth < 1) throw std::invalid_argument("stacked game: depth must be >= 1");
  if (spec.actions < 2) throw std::invalid_argument("stacked game: need >= 2 actions");
  double seqs = 0.0, level = 1.0;
  for (int k = 0; k < spec.depth; ++k) {
    seqs += level * spec.actions;
    level *= static_cast<double>(spec.actions) * spec.actions;
  }
  if (seqs > 1e7) throw std::invalid_argument("stacked game: more than 1e7 sequences");

  std::mt19937_64 rng(spec.seed);
  TreeBuilder tb;
  std::vector<std::pair<int, int>> hist;
  // Terminal payoffs are drawn in lexicographic order of the joint action
  // path, so a fixed seed reproduces the same game across runs.
  auto make = [&](auto&& self, int stage) -> int {
    if (stage == spec.depth)
      return tb.terminal(uniform_in(rng, spec.payoff_low, spec.payoff_high));
    const std::string key = joint_history_key(hist);
    std::vector<int> u_children;
    for (int i = 0; i < spec.actions; ++i) {
      std::vector<int> v_children;
      for (int j = 0; j < spec.actions; ++j) {
        hist.emplace_back(i, j);
        v_children.push_back(self(self, stage + 1));
        hist.pop_back();
      }
      u_children.push_back(tb.decision(1, "v|" + key, "v|" + key, std::move(v_children)));
    }
    return tb.decision(0, "u|" + key, "u|" + key, std::move(u_children));
  };
  const int root = make(make, 0);
  Game g = tb.build(root, "stacked_d" + std::to_string(spec.depth) + "_n" +
                              std::to_string(spec.actions) + "_s" + std::to_string(spec.seed));
  for (int h = 0; h < g.tu.num_infosets(); ++h)
    g.lambda.u[h] = uniform_in(rng, spec.lambda_low, spec.lambda_high);
  for (int h = 0; h < g.tv.num_infosets(); ++h)
    g.lambda.v[h] = uniform_in(rng, spec.lambda_low, spec.lambda_high);
  return g;
}

Game gen_one_card_poker(const PokerSpec& spec) {
  const int n = static_cast<int>(spec.deck.size());
  if (n < 2) throw std::invalid_argument("poker: deck needs at least 2 cards");
  const int first = spec.swap_roles ? 1 : 0;   // seat acting first
  const int second = spec.swap_roles ? 0 : 1;  // seat acting second, max player when not swapped
  TreeBuilder tb;
  auto pay = [&](double to_second) {
    // payoff_max is the max player's winnings; with swapped roles the max
    // player sits first, so the sign flips.
    return tb.terminal(spec.swap_roles ? -to_second : to_second);
  };
  std::vector<int> deals;
  std::vector<double> probs;
  const double p = 1.0 / (static_cast<double>(n) * (n - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const int c1 = spec.deck[i], c2 = spec.deck[j];
      const double s = c2 > c1 ? 1.0 : (c2 < c1 ? -1.0 : 0.0);  // showdown sign for player 2
      const std::string v1 = std::to_string(c1), v2 = std::to_string(c2);
      const int vs_raise = tb.decision(first, "vs_raise:" + v1, "p1_vs_raise",
                                       {pay(1.0), pay(2.0 * s)});
      const int vs_check = tb.decision(second, "vs_check:" + v2, "p2_vs_check",
                                       {pay(s), vs_raise});
      const int vs_bet = tb.decision(second, "vs_bet:" + v2, "p2_vs_bet",
                                     {pay(-1.0), pay(2.0 * s)});
      const int open = tb.decision(first, "open:" + v1, "p1_open", {vs_check, vs_bet});
      deals.push_back(open);
      probs.push_back(p);
    }
  }
  const int root = tb.chance(std::move(probs), std::move(deals));
  return tb.build(root, spec.swap_roles ? "one_card_poker_swapped" : "one_card_poker");
}

std::string info_gather_label(int stage, const std::vector<int>& revealed) {
  std::string s = "s" + std::to_string(stage);
  for (size_t i = 0; i < revealed.size(); ++i)
    s += (i == 0 ? ":" : ";") + std::to_string(revealed[i]);
  return s;
}

namespace {

// Distribution of the sum of m iid uniform cards on {1..V}, indexed by sum.
std::vector<double> hidden_sum_dist(int m, int V) {
  std::vector<double> d = {1.0};
  for (int k = 0; k < m; ++k) {
    std::vector<double> next(d.size() + V, 0.0);
    for (size_t s = 0; s < d.size(); ++s)
      for (int v = 1; v <= V; ++v) next[s + v] += d[s] / V;
    d = std::move(next);
  }
  return d;
}

// Expected guess reward given the revealed prefix (reveal order: top-left,
// top-right, bottom-left). row: 0 = top, 1 = bottom.
double expected_guess_reward(const InfoGatherSpec& spec, const std::vector<int>& revealed,
                             int row) {
  double known[2] = {0.0, 0.0};
  int hidden[2] = {2, 2};
  for (size_t i = 0; i < revealed.size(); ++i) {
    const int r = i < 2 ? 0 : 1;
    known[r] += revealed[i];
    --hidden[r];
  }
  const auto dt = hidden_sum_dist(hidden[0], spec.card_values);
  const auto db = hidden_sum_dist(hidden[1], spec.card_values);
  double win = 0.0, tie = 0.0;
  for (size_t a = 0; a < dt.size(); ++a) {
    if (dt[a] == 0.0) continue;
    for (size_t b = 0; b < db.size(); ++b) {
      const double pr = dt[a] * db[b];
      const double top = known[0] + static_cast<double>(a);
      const double bot = known[1] + static_cast<double>(b);
      const double mine = row == 0 ? top : bot, other = row == 0 ? bot : top;
      if (mine > other)
        win += pr;
      else if (mine == other)
        tie += pr;
    }
  }
  return spec.reward_win * win + spec.reward_tie * tie + spec.reward_lose * (1.0 - win - tie);
}

double spent_through(const InfoGatherSpec& spec, int stage) {
  double c = 0.0;
  for (int k = 1; k < stage; ++k) c += spec.reveal_costs[k - 1];
  return c;
}

}  // namespace

InfoGatherGame gen_info_gathering(const InfoGatherSpec& spec) {
  if (spec.card_values < 1) throw std::invalid_argument("info gathering: card_values must be >= 1");
  if (spec.reveal_costs.size() != 3)
    throw std::invalid_argument("info gathering: need one reveal cost per pre-final stage");
  TreeBuilder tb;
  std::vector<int> revealed;
  // Terminals hold the min player's expected cost given the information
  // state: reveal spend so far minus the expected guess reward. Chance is
  // expanded lazily, one revealed card at a time.
  auto make = [&](auto&& self, int stage) -> int {
    const double spent = spent_through(spec, stage);
    std::vector<int> children = {
        tb.terminal(spent - expected_guess_reward(spec, revealed, 0)),
        tb.terminal(spent - expected_guess_reward(spec, revealed, 1))};
    if (stage < 4) {
      std::vector<int> outcomes;
      for (int v = 1; v <= spec.card_values; ++v) {
        revealed.push_back(v);
        outcomes.push_back(self(self, stage + 1));
        revealed.pop_back();
      }
      children.push_back(tb.chance(std::vector<double>(spec.card_values, 1.0 / spec.card_values),
                                   std::move(outcomes)));
    }
    return tb.decision(0, info_gather_label(stage, revealed), "stage" + std::to_string(stage),
                       std::move(children));
  };
  const int root = make(make, 1);
  InfoGatherGame ig;
  ig.game = tb.build(root, "info_gathering");
  ig.spec = spec;
  ig.board_count = 1;
  for (int k = 0; k < 4; ++k) ig.board_count *= spec.card_values;
  return ig;
}

DpResult dp_optimal_policy(const InfoGatherGame& ig) {
  const InfoGatherSpec& spec = ig.spec;
  const Treeplex& t = ig.game.tu;
  std::unordered_map<std::string, int> by_label;
  for (int h = 0; h < t.num_infosets(); ++h) by_label[t.infoset(h).label] = h;
  DpResult out;
  out.action.assign(t.num_infosets(), 0);
  std::vector<int> revealed;
  auto best = [&](auto&& self, int stage) -> double {
    std::vector<double> score = {expected_guess_reward(spec, revealed, 0),
                                 expected_guess_reward(spec, revealed, 1)};
    if (stage < 4) {
      double cont = 0.0;
      for (int v = 1; v <= spec.card_values; ++v) {
        revealed.push_back(v);
        cont += self(self, stage + 1);
        revealed.pop_back();
      }
      score.push_back(cont / spec.card_values - spec.reveal_costs[stage - 1]);
    }
    const int arg = static_cast<int>(std::max_element(score.begin(), score.end()) -
                                     score.begin());
    const auto it = by_label.find(info_gather_label(stage, revealed));
    if (it != by_label.end()) out.action[it->second] = arg;
    return score[arg];
  };
  out.value = best(best, 1);
  return out;
}

namespace {

const std::vector<std::string> kEducation = {"GCSE", "A-levels", "Undergraduate", "Graduate"};
const std::vector<std::string> kActions = {"guess-top", "guess-bottom", "reveal"};
constexpr int kAgeBins = 8;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

bool parse_int(const std::string& s, int& out) {
  try {
    size_t pos = 0;
    out = std::stoi(s, &pos);
    return pos == s.size() && !s.empty();
  } catch (const std::exception&) {
    return false;
  }
}

int find_token(const std::vector<std::string>& tokens, const std::string& s) {
  const auto it = std::find(tokens.begin(), tokens.end(), s);
  return it == tokens.end() ? -1 : static_cast<int>(it - tokens.begin());
}

}  // namespace

IngestResult ingest_info_gathering_csv(std::istream& in, const Game& g) {
  IngestResult out;
  std::unordered_map<std::string, int> by_label;
  for (int h = 0; h < g.tu.num_infosets(); ++h) by_label[g.tu.infoset(h).label] = h;
  std::map<std::pair<int, int>, size_t> episode_index;
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& why) {
    out.diagnostics.push_back("line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("subject", 0) == 0) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) {
      bad("expected 7 fields, got " + std::to_string(f.size()));
      continue;
    }
    int subject, episode, age, stage;
    if (!parse_int(f[0], subject) || !parse_int(f[1], episode)) {
      bad("bad subject/episode id");
      continue;
    }
    if (!parse_int(f[2], age) || age < 0 || age >= kAgeBins) {
      bad("age bin out of range: " + f[2]);
      continue;
    }
    const int edu = find_token(kEducation, f[3]);
    if (edu < 0) {
      bad("unknown education token: " + f[3]);
      continue;
    }
    if (!parse_int(f[4], stage) || stage < 1 || stage > 4) {
      bad("bad stage: " + f[4]);
      continue;
    }
    std::vector<int> revealed;
    bool ok = true;
    for (const std::string& v : f[5].empty() ? std::vector<std::string>{} : split(f[5], ';')) {
      int card;
      if (!parse_int(v, card)) {
        ok = false;
        break;
      }
      revealed.push_back(card);
    }
    if (!ok) {
      bad("bad revealed list: " + f[5]);
      continue;
    }
    const auto it = by_label.find(info_gather_label(stage, revealed));
    if (it == by_label.end()) {
      bad("no such information state: stage " + f[4] + " revealed '" + f[5] + "'");
      continue;
    }
    const int action = find_token(kActions, f[6]);
    if (action < 0) {
      bad("unknown action token: " + f[6]);
      continue;
    }
    if (action >= static_cast<int>(g.tu.infoset(it->second).actions.size())) {
      bad("action '" + f[6] + "' unavailable at stage " + f[4]);
      continue;
    }
    Vec features = Vec::Zero(kAgeBins + kEducation.size());
    features[age] = 1.0;
    features[kAgeBins + edu] = 1.0;
    const auto [ep, fresh] = episode_index.try_emplace({subject, episode}, out.plays.size());
    if (fresh) {
      ObservedPlay play;
      play.features = features;
      out.plays.push_back(std::move(play));
    } else if ((out.plays[ep->second].features - features).lpNorm<Eigen::Infinity>() > 0.0) {
      bad("demographics differ within episode; keeping first row's");
    }
    out.plays[ep->second].records.push_back({0, it->second, action});
  }
  return out;
}

void write_info_gathering_csv(std::ostream& out, const Game& g,
                              const std::vector<ObservedPlay>& plays) {
  out << "subject,episode,age_bin,education,stage,revealed,action\n";
  for (size_t i = 0; i < plays.size(); ++i) {
    const ObservedPlay& play = plays[i];
    int age = 0, edu = 0;
    play.features.head(kAgeBins).maxCoeff(&age);
    play.features.tail(static_cast<int>(kEducation.size())).maxCoeff(&edu);
    for (const PlayRecord& r : play.records) {
      const std::string& label = g.tu.infoset(r.infoset).label;
      const auto colon = label.find(':');
      const std::string stage = label.substr(1, colon == std::string::npos ? std::string::npos
                                                                           : colon - 1);
      const std::string revealed = colon == std::string::npos ? "" : label.substr(colon + 1);
      out << i << ",0," << age << ',' << kEducation[edu] << ',' << stage << ',' << revealed
          << ',' << kActions[r.action] << '\n';
    }
  }
}

}  // namespace nlqre
