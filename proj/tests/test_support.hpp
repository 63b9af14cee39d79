#pragma once

// Test-only generators and brute-force oracles. Nothing here calls into the
// gradient or loss code under test.

#include <cmath>
#include <random>
#include <vector>

#include "xmod/linalg.hpp"
#include "xmod/losses.hpp"

namespace xmod::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = g(rng);
  return m;
}

inline Matrix random_unit_rows(Index rows, Index cols, std::mt19937_64& rng) {
  Matrix m = random_matrix(rows, cols, rng);
  for (Index i = 0; i < rows; ++i) m.row(i) /= m.row(i).norm();
  return m;
}

/// Explicit -mean log(exp(s_iy / tau) / sum_j exp(s_ij / tau)) in long double.
inline double brute_force_cross_entropy(const Matrix& sims, const LabelList& labels, double tau) {
  long double total = 0.0L;
  for (Index i = 0; i < sims.rows(); ++i) {
    long double denom = 0.0L;
    for (Index j = 0; j < sims.cols(); ++j) denom += std::exp(static_cast<long double>(sims(i, j)) / tau);
    total -= std::log(std::exp(static_cast<long double>(sims(i, labels[static_cast<std::size_t>(i)])) / tau) / denom);
  }
  return static_cast<double>(total / sims.rows());
}

/// Explicit row-softmax KL in long double.
inline double brute_force_row_kl(const Matrix& current, const Matrix& target, double tau) {
  long double total = 0.0L;
  for (Index i = 0; i < current.rows(); ++i) {
    long double zp = 0.0L, zq = 0.0L;
    for (Index j = 0; j < current.cols(); ++j) {
      zp += std::exp(static_cast<long double>(current(i, j)) / tau);
      zq += std::exp(static_cast<long double>(target(i, j)) / tau);
    }
    for (Index j = 0; j < current.cols(); ++j) {
      const long double p = std::exp(static_cast<long double>(current(i, j)) / tau) / zp;
      const long double q = std::exp(static_cast<long double>(target(i, j)) / tau) / zq;
      total += p * std::log(p / q);
    }
  }
  return static_cast<double>(total / current.rows());
}

inline LabelList cyclic_labels(Index n, int classes) {
  LabelList l;
  for (Index i = 0; i < n; ++i) l.push_back(static_cast<int>(i % classes));
  return l;
}

}  // namespace xmod::testing
