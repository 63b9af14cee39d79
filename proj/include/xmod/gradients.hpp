#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "xmod/losses.hpp"

namespace xmod {

// ---------------------------------------------------------------------------
// Feature-level gradients. Every routine differentiates the loss with the
// supplied stop-gradient quantities (draws, targets, frozen weights) held
// fixed and treats feature rows as free variables.
// ---------------------------------------------------------------------------

struct FeatureGrad {
  double loss = 0.0;
  Matrix d_features;  ///< same shape as the feature matrix
  Matrix d_weights;   ///< gradient w.r.t. the classifier/text rows when they are live
};

/// Gradient of the per-sample loss -log softmax(f T^T / tau)[label] w.r.t. f:
/// -t_label / tau + (1 / tau) sum_k p_k t_k.
Vector grad_vlm_wrt_feature(const Vector& feature, const FeatureMatrix& text, int label, double tau);

FeatureGrad vlm_loss_grad(const FeatureMatrix& features, const FeatureMatrix& text, const LabelList& labels,
                          double tau);

FeatureGrad visual_loss_grad(const FeatureMatrix& features, const FeatureMatrix& weights, const LabelList& labels,
                             double tau);

FeatureGrad anti_visual_loss_grad(const FeatureMatrix& support, const LabelList& labels, const AntiVisualDraw& draw,
                                  double tau);

/// Gradient of ra_loss(F F^T, target, tau_ra) w.r.t. F, target held constant.
FeatureGrad ra_loss_grad(const FeatureMatrix& features, const SimilarityMatrix& target, double tau_ra);

// ---------------------------------------------------------------------------
// Finite-difference oracle
// ---------------------------------------------------------------------------

using ScalarFunction = std::function<double(const Vector&)>;

inline constexpr double kDefaultFiniteDifferenceStep = 1e-5;

/// Central differences (f(p + eps e_j) - f(p - eps e_j)) / (2 eps).
Vector finite_difference_grad(const ScalarFunction& loss, const Vector& params,
                              double eps = kDefaultFiniteDifferenceStep);

struct GradCheckResult {
  Vector analytic;
  Vector numeric;
  double max_abs_err = 0.0;
  /// ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2); 0 when both vanish.
  double max_rel_err = 0.0;
};

GradCheckResult compare_gradients(const Vector& analytic, const Vector& numeric);

GradCheckResult check_gradient(const ScalarFunction& loss, const Vector& analytic, const Vector& params,
                               double eps = kDefaultFiniteDifferenceStep);

// ---------------------------------------------------------------------------
// Cosine-change analysis for one raw-feature gradient step on L_vlm.
// ---------------------------------------------------------------------------

/// First-order change of f_i . f_k after one step of size eta on each
/// sample's own loss:
/// (eta / tau) (f_i.t_k - sum_j p_kj f_i.t_j + f_k.t_i - sum_j p_ij f_k.t_j).
double predicted_delta_cos(const Vector& f_i, const Vector& f_k, const FeatureMatrix& text, int label_i,
                           int label_k, const Vector& p_i, const Vector& p_k, double eta, double tau);

/// Explicit update f <- f + (eta / tau)(t_label - sum_j p_j t_j) applied to
/// both raw features (no renormalization); returns the change of f_i . f_k.
double delta_cos_actual(const Vector& f_i, const Vector& f_k, const FeatureMatrix& text, int label_i, int label_k,
                        double eta, double tau);

struct TheoremPair {
  int instance = 0;
  int i = 0;
  int k = 0;
  bool same_class = false;
  double delta_cos_actual = 0.0;
  double delta_cos_predicted = 0.0;
  double residual = 0.0;
};

struct TheoremReport {
  double eta = 0.0;
  std::vector<double> taus;
  std::vector<TheoremPair> pairs;
};

struct ResidualCheck {
  int instance = 0;
  double tau = 0.0;
  double residual_full = 0.0;  ///< r(eta)
  double residual_half = 0.0;  ///< r(eta / 2)
  double ratio = 0.0;
  bool skipped = false;  ///< r(eta) too close to rounding noise to measure
  bool passed = false;
};

struct PositivityCheck {
  int instance = 0;
  double tau = 0.0;
  double predicted = 0.0;
  double actual = 0.0;
  bool passed = false;
};

struct TheoremSuiteConfig {
  int instances = 50;
  int classes = 5;
  int dim = 16;
  double eta = 1e-3;
  std::vector<double> taus{1.0, 0.07, 0.01};
  std::uint64_t seed = 0;
  double ratio_low = 0.15;
  double ratio_high = 0.35;
};

struct TheoremSuiteResult {
  TheoremReport report;
  std::vector<ResidualCheck> residuals;
  std::vector<PositivityCheck> positivity;
  int residual_failures = 0;
  int positivity_failures = 0;
  bool ok() const { return residual_failures == 0 && positivity_failures == 0; }
};

/// Residual-scaling and same-class positivity suites over seeded instances.
TheoremSuiteResult verify_theorem(const TheoremSuiteConfig& config);

}  // namespace xmod
