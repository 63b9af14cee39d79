#pragma once

#include <string>

#include "xmod/linalg.hpp"
#include "xmod/rng.hpp"

namespace xmod {

enum class Branch { Visual, Text, Both };

const char* to_string(Branch b);
Branch parse_branch(const std::string& s);

/// Residual low-rank map x -> normalize(x + scale * up * (down * x)).
struct LowRankAdapter {
  Matrix down;  ///< r x d
  Matrix up;    ///< d x r
  double scale = 1.0;
  Branch branch = Branch::Visual;

  /// up = 0 and down ~ N(0, init_sigma^2): the map starts as the identity on
  /// normalized inputs.
  static LowRankAdapter initialized(Index dim, Index rank, double scale, Branch branch, double init_sigma, Rng& rng);

  Index dim() const { return down.cols(); }
  Index rank() const { return down.rows(); }
  Index parameter_count() const { return down.size() + up.size(); }

  bool adapts_visual() const { return branch != Branch::Text; }
  bool adapts_text() const { return branch != Branch::Visual; }

  /// down then up, each flattened column-major.
  Vector parameters() const;
  void set_parameters(const Vector& params);

  bool operator==(const LowRankAdapter&) const = default;
};

struct AdapterGrad {
  Matrix down;
  Matrix up;

  static AdapterGrad zeros_like(const LowRankAdapter& adapter);
  Vector flatten() const;
  bool all_finite() const;
  AdapterGrad& operator+=(const AdapterGrad& other);
  AdapterGrad& operator*=(double s);
};

/// Forward pass with the intermediates kept for the backward pass.
struct AdapterForward {
  FeatureMatrix output;  ///< n x d, unit rows
  Matrix hidden;         ///< n x r, X down^T
  Vector norms;          ///< pre-normalization row norms
};

AdapterForward adapter_forward(const LowRankAdapter& adapter, const FeatureMatrix& inputs);

FeatureMatrix apply_adapter(const LowRankAdapter& adapter, const FeatureMatrix& inputs);

/// Accumulates dL/d(params) into `grad` given dL/d(output rows).
void adapter_backward(const LowRankAdapter& adapter, const FeatureMatrix& inputs, const AdapterForward& forward,
                      const Matrix& d_output, AdapterGrad& grad);

/// params <- params - eta * grad.
LowRankAdapter sgd_step(const LowRankAdapter& adapter, const AdapterGrad& grad, double eta);

}  // namespace xmod
