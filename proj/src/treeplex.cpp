#include "nlqre/treeplex.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace nlqre {

Treeplex::Treeplex(int num_sequences, std::vector<Infoset> infosets)
    : num_sequences_(num_sequences), infosets_(std::move(infosets)) {
  if (num_sequences_ < 1) throw std::invalid_argument("treeplex needs a root sequence");
  seq_infoset_.assign(num_sequences_, -1);
  seq_parent_.assign(num_sequences_, -1);
  seq_children_.assign(num_sequences_, {});
  for (int h = 0; h < num_infosets(); ++h) {
    const Infoset& is = infosets_[h];
    if (is.parent_sequence < 0 || is.parent_sequence >= num_sequences_)
      throw std::invalid_argument("infoset parent sequence out of range");
    seq_children_[is.parent_sequence].push_back(h);
    for (int a : is.actions) {
      if (a <= 0 || a >= num_sequences_)
        throw std::invalid_argument("action sequence index out of range");
      // First claim wins; duplicates are reported by validate_treeplex.
      if (seq_infoset_[a] < 0) {
        seq_infoset_[a] = h;
        seq_parent_[a] = is.parent_sequence;
      }
    }
  }
}

ValidationReport validate_treeplex(const Treeplex& t) {
  ValidationReport rep;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.issues.push_back(std::move(msg));
  };
  std::vector<int> owner(t.num_sequences(), -1);
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    if (is.actions.empty()) fail("infoset " + std::to_string(h) + " has no actions");
    for (int a : is.actions) {
      if (owner[a] >= 0)
        fail("sequence " + std::to_string(a) + " claimed by infosets " +
             std::to_string(owner[a]) + " and " + std::to_string(h));
      else
        owner[a] = h;
      if (a <= is.parent_sequence)
        fail("infoset " + std::to_string(h) + ": action sequence " + std::to_string(a) +
             " does not follow parent sequence " + std::to_string(is.parent_sequence));
    }
    // The infoset owning the parent sequence must precede this one, so that
    // ascending infoset order is a top-down traversal.
    if (is.parent_sequence != 0) {
      int ph = t.seq_infoset(is.parent_sequence);
      if (ph < 0)
        fail("infoset " + std::to_string(h) + " hangs off orphan sequence " +
             std::to_string(is.parent_sequence));
      else if (ph >= h)
        fail("infoset " + std::to_string(h) + " precedes its ancestor infoset " +
             std::to_string(ph));
    }
  }
  for (int a = 1; a < t.num_sequences(); ++a)
    if (owner[a] < 0) fail("sequence " + std::to_string(a) + " belongs to no infoset");
  return rep;
}

double constraint_residual(const Treeplex& t, const Vec& u) {
  if (u.size() != t.num_sequences()) throw std::invalid_argument("plan size mismatch");
  double r = std::abs(u[0] - 1.0);
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    double s = -u[is.parent_sequence];
    for (int a : is.actions) s += u[a];
    r = std::max(r, std::abs(s));
  }
  return r;
}

Vec behavioral_to_sequence(const Treeplex& t, const Vec& b) {
  if (b.size() != t.num_sequences()) throw std::invalid_argument("behavioral size mismatch");
  Vec u(t.num_sequences());
  u[0] = 1.0;
  // Ascending infoset order visits parents before children.
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    double total = 0.0;
    for (int a : is.actions) {
      if (b[a] < 0.0) throw std::invalid_argument("negative behavioral probability");
      total += b[a];
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw std::invalid_argument("behavioral probabilities at infoset " + std::to_string(h) +
                                  " sum to " + std::to_string(total));
    for (int a : is.actions) u[a] = u[is.parent_sequence] * b[a];
  }
  return u;
}

Vec sequence_to_behavioral(const Treeplex& t, const Vec& u) {
  if (u.size() != t.num_sequences()) throw std::invalid_argument("plan size mismatch");
  Vec b = Vec::Zero(t.num_sequences());
  b[0] = 1.0;
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    double parent = u[is.parent_sequence];
    if (parent == 0.0)
      throw std::invalid_argument("zero realization weight at parent of infoset " +
                                  std::to_string(h));
    for (int a : is.actions) b[a] = u[a] / parent;
  }
  return b;
}

Vec uniform_behavioral(const Treeplex& t) {
  Vec b = Vec::Zero(t.num_sequences());
  b[0] = 1.0;
  for (int h = 0; h < t.num_infosets(); ++h) {
    const Infoset& is = t.infoset(h);
    double p = 1.0 / static_cast<double>(is.actions.size());
    for (int a : is.actions) b[a] = p;
  }
  return b;
}

}  // namespace nlqre
