#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <vector>

#include "nlqre/treeplex.hpp"

namespace nlqre {

struct PayoffEntry {
  int row = 0;  // min player sequence
  int col = 0;  // max player sequence
  double value = 0.0;  // payoff to the max player, chance weights folded in
};

// Sparse payoff matrix in sequence-form coordinates. Entries are stored
// sorted by (row, col); duplicate coordinates are rejected at construction
// since they indicate a broken game generator.
class SparsePayoff {
 public:
  SparsePayoff() = default;
  SparsePayoff(int rows, int cols, std::vector<PayoffEntry> entries);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::vector<PayoffEntry>& entries() const { return entries_; }

  // P * v, or P^T * u when transpose is set.
  Vec apply(const Vec& x, bool transpose) const;

  // Bilinear form u^T P v.
  double quadratic(const Vec& u, const Vec& v) const;

  // Deterministic power-iteration estimate of the spectral norm, padded a
  // little so it errs on the large side. Used to pick stable step sizes.
  double operator_norm_estimate(int iterations = 60) const;

  Eigen::SparseMatrix<double> to_eigen() const;

 private:
  int rows_ = 1;
  int cols_ = 1;
  std::vector<PayoffEntry> entries_;
};

}  // namespace nlqre
