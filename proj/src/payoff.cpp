#include "nlqre/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlqre {

SparsePayoff::SparsePayoff(int rows, int cols, std::vector<PayoffEntry> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows_ < 1 || cols_ < 1) throw std::invalid_argument("payoff dimensions must be positive");
  for (const PayoffEntry& e : entries_) {
    if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_)
      throw std::invalid_argument("payoff entry out of range");
  }
  std::sort(entries_.begin(), entries_.end(), [](const PayoffEntry& a, const PayoffEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (size_t k = 1; k < entries_.size(); ++k) {
    if (entries_[k].row == entries_[k - 1].row && entries_[k].col == entries_[k - 1].col)
      throw std::invalid_argument("duplicate payoff coordinate (" +
                                  std::to_string(entries_[k].row) + ", " +
                                  std::to_string(entries_[k].col) + ")");
  }
}

Vec SparsePayoff::apply(const Vec& x, bool transpose) const {
  if (x.size() != (transpose ? rows_ : cols_))
    throw std::invalid_argument("payoff apply: vector size mismatch");
  Vec out = Vec::Zero(transpose ? cols_ : rows_);
  if (transpose) {
    for (const PayoffEntry& e : entries_) out[e.col] += e.value * x[e.row];
  } else {
    for (const PayoffEntry& e : entries_) out[e.row] += e.value * x[e.col];
  }
  return out;
}

double SparsePayoff::quadratic(const Vec& u, const Vec& v) const {
  if (u.size() != rows_ || v.size() != cols_)
    throw std::invalid_argument("payoff quadratic: vector size mismatch");
  double s = 0.0;
  for (const PayoffEntry& e : entries_) s += u[e.row] * e.value * v[e.col];
  return s;
}

double SparsePayoff::operator_norm_estimate(int iterations) const {
  if (entries_.empty()) return 0.0;
  Vec x(cols_);
  for (int i = 0; i < cols_; ++i) x[i] = 1.0 + 0.1 * (i % 7);
  x /= x.norm();
  double sigma = 0.0;
  for (int k = 0; k < iterations; ++k) {
    Vec y = apply(x, false);
    Vec z = apply(y, true);
    const double n = z.norm();
    if (n == 0.0) return 0.0;
    sigma = std::sqrt(n);
    x = z / n;
  }
  return 1.15 * sigma;
}

Eigen::SparseMatrix<double> SparsePayoff::to_eigen() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(entries_.size());
  for (const PayoffEntry& e : entries_) trips.emplace_back(e.row, e.col, e.value);
  Eigen::SparseMatrix<double> m(rows_, cols_);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace nlqre
