#pragma once

// Dense kernels shared by every module. Rows of a feature matrix are
// embeddings; all routines work on any Eigen expression whose scalar is a
// floating-point type.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

#include "xmod/error.hpp"

namespace xmod {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// n x d matrix whose rows are embeddings of one modality.
using FeatureMatrix = Matrix;
/// n x n matrix of pairwise cosine similarities.
using SimilarityMatrix = Matrix;

inline constexpr double kZeroNormThreshold = 1e-30;

namespace detail {

inline void require_same_dim(Index a, Index b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

inline void require_positive_temperature(double tau) {
  if (!(tau > 0.0)) {
    throw Error(ErrorCode::NonPositiveTemperature, "temperature must be > 0, got " + std::to_string(tau));
  }
}

}  // namespace detail

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

/// Unit-norm copy of `v`. Throws ZeroVector when the norm is below 1e-30.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>
l2_normalize(const Eigen::MatrixBase<Derived>& v) {
  const auto norm = v.norm();
  if (!(norm >= kZeroNormThreshold)) {
    throw Error(ErrorCode::ZeroVector, "cannot normalize a vector of norm " + std::to_string(double(norm)));
  }
  return v / norm;
}

/// Normalizes every row of `m` to unit Euclidean norm.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
normalize_rows(const Eigen::MatrixBase<Derived>& m) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out = m;
  for (Index i = 0; i < out.rows(); ++i) {
    const auto norm = out.row(i).norm();
    if (!(norm >= kZeroNormThreshold)) {
      throw Error(ErrorCode::ZeroVector, "row " + std::to_string(i) + " has zero norm");
    }
    out.row(i) /= norm;
  }
  return out;
}

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& f,
                                            const Eigen::MatrixBase<DerivedB>& t) {
  detail::require_same_dim(f.size(), t.size(), "cosine_similarity");
  return f.reshaped().dot(t.reshaped());
}

/// F F^T for row-normalized F.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
gram_matrix(const Eigen::MatrixBase<Derived>& features) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat g = features * features.transpose();
  // Symmetrize exactly; the product is only symmetric up to rounding.
  Mat sym = (g + g.transpose()) / typename Derived::Scalar(2);
  return sym;
}

/// F T^T: entry (i, j) is the similarity of row i of `a` and row j of `b`.
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic>
cross_gram(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  detail::require_same_dim(a.cols(), b.cols(), "cross_gram");
  return a * b.transpose();
}

/// Row-wise softmax of m / tau, with per-row max subtraction.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
softmax_rows(const Eigen::MatrixBase<Derived>& m, double tau) {
  detail::require_positive_temperature(tau);
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    const Scalar peak = m.row(i).maxCoeff();
    out.row(i) = ((m.row(i).array() - peak) / Scalar(tau)).exp().matrix();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

/// Row-wise log-softmax of m / tau; exact in the tails where softmax underflows.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
log_softmax_rows(const Eigen::MatrixBase<Derived>& m, double tau) {
  detail::require_positive_temperature(tau);
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    Index top = 0;
    const Scalar peak = m.row(i).maxCoeff(&top);
    auto shifted = ((m.row(i).array() - peak) / Scalar(tau)).eval();
    // The peak contributes exactly 1; log1p keeps small losses accurate.
    Scalar rest = 0;
    for (Index j = 0; j < m.cols(); ++j)
      if (j != top) rest += std::exp(shifted(j));
    const Scalar log_norm = std::log1p(rest);
    out.row(i) = (shifted - log_norm).matrix();
  }
  return out;
}

/// Rows of `table` picked by `index` (index[i] selects the i-th output row).
template <typename Derived, typename IndexRange>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
gather_rows(const Eigen::MatrixBase<Derived>& table, const IndexRange& index) {
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(
      static_cast<Index>(index.size()), table.cols());
  Index r = 0;
  for (auto i : index) out.row(r++) = table.row(static_cast<Index>(i));
  return out;
}

}  // namespace xmod
