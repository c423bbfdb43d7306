#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace nlqre {

using Vec = Eigen::VectorXd;

// One decision point of a player. `parent_sequence` is the index of the
// sequence the player must hold to reach this infoset, and `actions` lists
// the sequence indices produced by taking each action here.
struct Infoset {
  int parent_sequence = 0;
  std::vector<int> actions;
  std::string label;
};

// Sequence-form strategy space of a single player. Sequence 0 is the empty
// (root) sequence. Indices are topological: every infoset's parent sequence
// has a smaller index than all of its action sequences, and an infoset's
// index is larger than the index of the infoset owning its parent sequence.
class Treeplex {
 public:
  Treeplex() = default;
  Treeplex(int num_sequences, std::vector<Infoset> infosets);

  int num_sequences() const { return num_sequences_; }
  int num_infosets() const { return static_cast<int>(infosets_.size()); }
  const Infoset& infoset(int h) const { return infosets_[h]; }
  const std::vector<Infoset>& infosets() const { return infosets_; }

  // Infoset owning sequence a (rho_a), -1 for the root sequence.
  int seq_infoset(int a) const { return seq_infoset_[a]; }
  // Parent sequence of the infoset owning a (p_{rho_a}), -1 for the root.
  int seq_parent(int a) const { return seq_parent_[a]; }
  // Infosets whose parent sequence is a (C_a).
  const std::vector<int>& children(int a) const { return seq_children_[a]; }

  bool is_trivial() const { return infosets_.empty(); }

 private:
  int num_sequences_ = 1;
  std::vector<Infoset> infosets_;
  std::vector<int> seq_infoset_;
  std::vector<int> seq_parent_;
  std::vector<std::vector<int>> seq_children_;
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> issues;
};

// Structural checks: every non-root sequence belongs to exactly one infoset,
// parent indices precede child indices, infosets are nonempty and their
// ordering follows the tree. Returns all violations found.
ValidationReport validate_treeplex(const Treeplex& t);

// Max-norm of the sequence-form constraints: u_root = 1 and, per infoset,
// sum of action sequences minus the parent sequence.
double constraint_residual(const Treeplex& t, const Vec& u);

// Behavioral probabilities are stored flat: b[a] is the probability of the
// action producing sequence a at its infoset; b[0] (root) is ignored.
// Throws std::invalid_argument on negative entries or rows not summing to 1.
Vec behavioral_to_sequence(const Treeplex& t, const Vec& b);

// Inverse map: b[a] = u[a] / u[parent]. Throws when a reached parent has
// zero realization weight (the ratio is undefined there).
Vec sequence_to_behavioral(const Treeplex& t, const Vec& u);

// Flat behavioral vector with uniform probabilities at every infoset.
Vec uniform_behavioral(const Treeplex& t);

}  // namespace nlqre
