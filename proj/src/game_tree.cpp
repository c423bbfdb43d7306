#include "nlqre/game_tree.hpp"

#include <map>
#include <stdexcept>
#include <unordered_map>

#include "nlqre/rng.hpp"

namespace nlqre {

int TreeBuilder::terminal(double payoff_max) {
  TreeNode n;
  n.kind = TreeNode::Kind::Terminal;
  n.payoff_max = payoff_max;
  nodes_.push_back(std::move(n));
  infoset_keys_.emplace_back();
  group_keys_.emplace_back();
  return static_cast<int>(nodes_.size()) - 1;
}

int TreeBuilder::chance(std::vector<double> probs, std::vector<int> children) {
  if (probs.size() != children.size())
    throw std::invalid_argument("chance node: probs/children size mismatch");
  TreeNode n;
  n.kind = TreeNode::Kind::Chance;
  n.chance_probs = std::move(probs);
  n.children = std::move(children);
  nodes_.push_back(std::move(n));
  infoset_keys_.emplace_back();
  group_keys_.emplace_back();
  return static_cast<int>(nodes_.size()) - 1;
}

int TreeBuilder::decision(int player, const std::string& infoset_key,
                          const std::string& group_key, std::vector<int> children) {
  if (player != 0 && player != 1) throw std::invalid_argument("decision node: bad player");
  if (children.empty()) throw std::invalid_argument("decision node: no actions");
  TreeNode n;
  n.kind = TreeNode::Kind::Decision;
  n.player = player;
  n.children = std::move(children);
  nodes_.push_back(std::move(n));
  infoset_keys_.push_back(infoset_key);
  group_keys_.push_back(group_key);
  return static_cast<int>(nodes_.size()) - 1;
}

Game TreeBuilder::build(int root, const std::string& name) const {
  struct PlayerState {
    std::unordered_map<std::string, int> infoset_id;
    std::vector<Infoset> infosets;
    std::vector<std::vector<int>> action_seqs;  // per infoset, per action
    std::vector<int> group;
    int next_seq = 1;
  };
  PlayerState ps[2];
  std::unordered_map<std::string, int> group_ids;
  std::map<std::pair<int, int>, double> payoff;
  std::vector<TreeNode> out_nodes = nodes_;

  // Preorder walk keeps sequence and infoset indices topological: a parent
  // sequence is always allocated before anything that follows it.
  auto walk = [&](auto&& self, int node, int seq_u, int seq_v, double reach) -> void {
    const TreeNode& n = nodes_[node];
    switch (n.kind) {
      case TreeNode::Kind::Terminal:
        payoff[{seq_u, seq_v}] += reach * n.payoff_max;
        return;
      case TreeNode::Kind::Chance:
        for (size_t i = 0; i < n.children.size(); ++i)
          self(self, n.children[i], seq_u, seq_v, reach * n.chance_probs[i]);
        return;
      case TreeNode::Kind::Decision: {
        PlayerState& st = ps[n.player];
        const int own_seq = n.player == 0 ? seq_u : seq_v;
        auto [it, fresh] = st.infoset_id.try_emplace(infoset_keys_[node],
                                                     static_cast<int>(st.infosets.size()));
        const int h = it->second;
        if (fresh) {
          Infoset is;
          is.parent_sequence = own_seq;
          is.label = infoset_keys_[node];
          std::vector<int> seqs;
          for (size_t i = 0; i < n.children.size(); ++i) {
            is.actions.push_back(st.next_seq);
            seqs.push_back(st.next_seq++);
          }
          st.infosets.push_back(std::move(is));
          st.action_seqs.push_back(std::move(seqs));
          auto [git, gfresh] = group_ids.try_emplace(group_keys_[node],
                                                     static_cast<int>(group_ids.size()));
          st.group.push_back(git->second);
        } else {
          if (st.infosets[h].parent_sequence != own_seq)
            throw std::invalid_argument("imperfect recall: infoset '" + infoset_keys_[node] +
                                        "' reached under different own sequences");
          if (st.infosets[h].actions.size() != n.children.size())
            throw std::invalid_argument("infoset '" + infoset_keys_[node] +
                                        "' reached with different action counts");
        }
        out_nodes[node].infoset = h;
        for (size_t i = 0; i < n.children.size(); ++i) {
          const int s = st.action_seqs[h][i];
          self(self, n.children[i], n.player == 0 ? s : seq_u, n.player == 1 ? s : seq_v,
               reach);
        }
        return;
      }
    }
  };
  walk(walk, root, 0, 0, 1.0);

  Game g;
  g.name = name;
  g.tu = Treeplex(ps[0].next_seq, ps[0].infosets);
  g.tv = Treeplex(ps[1].next_seq, ps[1].infosets);
  std::vector<PayoffEntry> entries;
  entries.reserve(payoff.size());
  for (const auto& [rc, val] : payoff) entries.push_back({rc.first, rc.second, val});
  g.payoff = SparsePayoff(g.tu.num_sequences(), g.tv.num_sequences(), std::move(entries));
  g.lambda.u = Vec::Ones(g.tu.num_infosets());
  g.lambda.v = Vec::Ones(g.tv.num_infosets());
  g.lambda_group_u = ps[0].group;
  g.lambda_group_v = ps[1].group;
  auto tree = std::make_shared<GameTree>();
  tree->nodes = std::move(out_nodes);
  tree->root = root;
  g.tree = std::move(tree);
  return g;
}

namespace {

const GameTree& require_tree(const Game& g) {
  if (!g.tree) throw std::invalid_argument("game carries no extensive tree");
  return *g.tree;
}

}  // namespace

ObservedPlay sample_trajectory(const Game& g, const Vec& behavioral_u, const Vec& behavioral_v,
                               std::mt19937_64& rng) {
  const GameTree& tree = require_tree(g);
  ObservedPlay obs;
  int node = tree.root;
  while (tree.nodes[node].kind != TreeNode::Kind::Terminal) {
    const TreeNode& n = tree.nodes[node];
    double r = uniform01(rng);
    if (n.kind == TreeNode::Kind::Chance) {
      size_t k = 0;
      for (; k + 1 < n.children.size(); ++k) {
        r -= n.chance_probs[k];
        if (r < 0.0) break;
      }
      node = n.children[k];
    } else {
      const Treeplex& t = n.player == 0 ? g.tu : g.tv;
      const Vec& b = n.player == 0 ? behavioral_u : behavioral_v;
      const Infoset& is = t.infoset(n.infoset);
      size_t k = 0;
      for (; k + 1 < is.actions.size(); ++k) {
        r -= b[is.actions[k]];
        if (r < 0.0) break;
      }
      obs.records.push_back({n.player, n.infoset, static_cast<int>(k)});
      node = n.children[k];
    }
  }
  return obs;
}

double tree_expected_payoff(const Game& g, const Vec& behavioral_u, const Vec& behavioral_v) {
  const GameTree& tree = require_tree(g);
  auto ev = [&](auto&& self, int node) -> double {
    const TreeNode& n = tree.nodes[node];
    if (n.kind == TreeNode::Kind::Terminal) return n.payoff_max;
    double total = 0.0;
    if (n.kind == TreeNode::Kind::Chance) {
      for (size_t i = 0; i < n.children.size(); ++i)
        total += n.chance_probs[i] * self(self, n.children[i]);
    } else {
      const Treeplex& t = n.player == 0 ? g.tu : g.tv;
      const Vec& b = n.player == 0 ? behavioral_u : behavioral_v;
      const Infoset& is = t.infoset(n.infoset);
      for (size_t i = 0; i < is.actions.size(); ++i)
        total += b[is.actions[i]] * self(self, n.children[i]);
    }
    return total;
  };
  return ev(ev, tree.root);
}

Vec infoset_reach(const Game& g, int player, const Vec& behavioral_u, const Vec& behavioral_v) {
  const GameTree& tree = require_tree(g);
  const Treeplex& tp = player == 0 ? g.tu : g.tv;
  Vec reach = Vec::Zero(tp.num_infosets());
  auto walk = [&](auto&& self, int node, double prob) -> void {
    const TreeNode& n = tree.nodes[node];
    if (n.kind == TreeNode::Kind::Terminal) return;
    if (n.kind == TreeNode::Kind::Chance) {
      for (size_t i = 0; i < n.children.size(); ++i)
        self(self, n.children[i], prob * n.chance_probs[i]);
      return;
    }
    if (n.player == player) reach[n.infoset] += prob;
    const Treeplex& t = n.player == 0 ? g.tu : g.tv;
    const Vec& b = n.player == 0 ? behavioral_u : behavioral_v;
    const Infoset& is = t.infoset(n.infoset);
    for (size_t i = 0; i < is.actions.size(); ++i)
      self(self, n.children[i], prob * b[is.actions[i]]);
  };
  walk(walk, tree.root, 1.0);
  return reach;
}

}  // namespace nlqre
