#include "xmod/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace xmod {

namespace {

// dL/dlogits for mean cross-entropy, logits = F W^T / tau.
Matrix cross_entropy_logit_grad(const Matrix& probs, const LabelList& labels, double tau) {
  Matrix g = probs;
  for (Index i = 0; i < g.rows(); ++i) {
    // 1 - p_y as the sum of the other entries, so saturated rows keep their tiny gradient.
    g(i, labels[i]) = 0.0;
    g(i, labels[i]) = -g.row(i).sum();
  }
  const double n = static_cast<double>(std::max<Index>(g.rows(), 1));
  return g / (n * tau);
}

}  // namespace

Vector grad_vlm_wrt_feature(const Vector& feature, const FeatureMatrix& text, int label, double tau) {
  detail::require_same_dim(feature.size(), text.cols(), "grad_vlm_wrt_feature");
  detail::check_labels(LabelList{label}, 1, text.rows());
  const Matrix p = softmax_rows(feature.transpose() * text.transpose(), tau);
  Vector g = Vector::Zero(feature.size());
  for (Index k = 0; k < text.rows(); ++k)
    if (k != label) g += p(0, k) * (text.row(k) - text.row(label)).transpose();
  return g / tau;
}

FeatureGrad visual_loss_grad(const FeatureMatrix& features, const FeatureMatrix& weights, const LabelList& labels,
                             double tau) {
  const auto ce = vlm_loss(features, weights, labels, tau);
  const Matrix g = cross_entropy_logit_grad(ce.probs, labels, tau);
  FeatureGrad out;
  out.loss = ce.loss;
  out.d_features = g * weights;
  out.d_weights = g.transpose() * features;
  return out;
}

FeatureGrad vlm_loss_grad(const FeatureMatrix& features, const FeatureMatrix& text, const LabelList& labels,
                          double tau) {
  return visual_loss_grad(features, text, labels, tau);
}

FeatureGrad anti_visual_loss_grad(const FeatureMatrix& support, const LabelList& labels, const AntiVisualDraw& draw,
                                  double tau) {
  FeatureGrad out;
  switch (draw.strategy) {
    case SvlStrategy::Off:
      out.d_features = Matrix::Zero(support.rows(), support.cols());
      return out;
    case SvlStrategy::ClassShuffle: {
      // The weights are rows of the support matrix, so both roles contribute.
      auto g = visual_loss_grad(support, gather_rows(support, draw.shuffle_index), labels, tau);
      for (std::size_t j = 0; j < draw.shuffle_index.size(); ++j) {
        g.d_features.row(draw.shuffle_index[j]) += g.d_weights.row(static_cast<Index>(j));
      }
      out.loss = g.loss;
      out.d_features = std::move(g.d_features);
      return out;
    }
    case SvlStrategy::NegLv: {
      auto g = visual_loss_grad(support, draw.frozen_weights, labels, tau);
      out.loss = -g.loss;
      out.d_features = -g.d_features;
      return out;
    }
    case SvlStrategy::NoiseProto: {
      auto g = visual_loss_grad(support, draw.frozen_weights, labels, tau);
      out.loss = g.loss;
      out.d_features = std::move(g.d_features);
      return out;
    }
  }
  return out;
}

FeatureGrad ra_loss_grad(const FeatureMatrix& features, const SimilarityMatrix& target, double tau_ra) {
  const Index n = features.rows();
  detail::require_same_dim(n, target.rows(), "ra_loss_grad rows");
  detail::require_same_dim(n, target.cols(), "ra_loss_grad cols");
  FeatureGrad out;
  if (n == 0) {
    out.d_features = Matrix::Zero(0, features.cols());
    return out;
  }
  const Matrix current = gram_matrix(features);
  const Matrix logp = log_softmax_rows(current, tau_ra);
  const Matrix logq = log_softmax_rows(target, tau_ra);
  const Matrix p = logp.array().exp().matrix();
  const Matrix log_ratio = logp - logq;
  const Vector row_kl = (p.array() * log_ratio.array()).rowwise().sum();
  out.loss = row_kl.sum() / static_cast<double>(n);
  // d KL_i / d z_ij = p_ij (log p_ij - log q_ij - KL_i), z = A / tau_ra.
  Matrix d_logits = p.array() * (log_ratio.colwise() - row_kl).array();
  const Matrix d_gram = d_logits / (static_cast<double>(n) * tau_ra);
  out.d_features = (d_gram + d_gram.transpose()) * features;
  return out;
}

Vector finite_difference_grad(const ScalarFunction& loss, const Vector& params, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  Vector grad(params.size());
  Vector probe = params;
  for (Index j = 0; j < params.size(); ++j) {
    const double saved = probe[j];
    probe[j] = saved + eps;
    const double plus = loss(probe);
    probe[j] = saved - eps;
    const double minus = loss(probe);
    probe[j] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw Error(ErrorCode::NonFiniteLoss, "loss is not finite near coordinate " + std::to_string(j));
    }
    grad[j] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

GradCheckResult compare_gradients(const Vector& analytic, const Vector& numeric) {
  detail::require_same_dim(analytic.size(), numeric.size(), "compare_gradients");
  GradCheckResult out;
  out.analytic = analytic;
  out.numeric = numeric;
  if (analytic.size() == 0) return out;
  const Vector diff = analytic - numeric;
  out.max_abs_err = diff.cwiseAbs().maxCoeff();
  const double scale = std::max(analytic.norm(), numeric.norm());
  out.max_rel_err = scale > 0.0 ? diff.norm() / scale : 0.0;
  return out;
}

GradCheckResult check_gradient(const ScalarFunction& loss, const Vector& analytic, const Vector& params,
                               double eps) {
  return compare_gradients(analytic, finite_difference_grad(loss, params, eps));
}

double predicted_delta_cos(const Vector& f_i, const Vector& f_k, const FeatureMatrix& text, int label_i,
                           int label_k, const Vector& p_i, const Vector& p_k, double eta, double tau) {
  detail::require_same_dim(f_i.size(), text.cols(), "predicted_delta_cos f_i");
  detail::require_same_dim(f_k.size(), text.cols(), "predicted_delta_cos f_k");
  detail::require_same_dim(p_i.size(), text.rows(), "predicted_delta_cos p_i");
  detail::require_same_dim(p_k.size(), text.rows(), "predicted_delta_cos p_k");
  const Vector sim_i = text * f_i;  // f_i . t_j for every j
  const Vector sim_k = text * f_k;
  // f_i.t_k - sum_j p_kj f_i.t_j == sum_j p_kj (f_i.t_k - f_i.t_j) since p_k sums
  // to one; the second form keeps its sign when p_k is nearly one-hot.
  const double term_i = p_k.dot((sim_i[label_k] - sim_i.array()).matrix());
  const double term_k = p_i.dot((sim_k[label_i] - sim_k.array()).matrix());
  const double bracket = term_i + term_k;
  return eta / tau * bracket;
}

double delta_cos_actual(const Vector& f_i, const Vector& f_k, const FeatureMatrix& text, int label_i, int label_k,
                        double eta, double tau) {
  // The update direction is the negative per-sample gradient.
  // (f_i + a).(f_k + b) - f_i.f_k expanded, so no O(1) terms cancel.
  const Vector a = -eta * grad_vlm_wrt_feature(f_i, text, label_i, tau);
  const Vector b = -eta * grad_vlm_wrt_feature(f_k, text, label_k, tau);
  return f_i.dot(b) + a.dot(f_k) + a.dot(b);
}

namespace {

Vector gaussian_vector(Index dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(dim);
  for (Index j = 0; j < dim; ++j) v[j] = gauss(rng);
  return v;
}

FeatureMatrix random_unit_rows(Index rows, Index dim, Rng& rng) {
  FeatureMatrix m(rows, dim);
  for (Index i = 0; i < rows; ++i) m.row(i) = gaussian_vector(dim, rng).transpose();
  return normalize_rows(m);
}

Vector probability_row(const Vector& f, const FeatureMatrix& text, double tau) {
  return softmax_rows(f.transpose() * text.transpose(), tau).row(0).transpose();
}

}  // namespace

TheoremSuiteResult verify_theorem(const TheoremSuiteConfig& config) {
  if (config.instances <= 0 || config.classes < 2 || config.dim < 2 || config.taus.empty()) {
    throw Error(ErrorCode::InvalidArgument, "theorem suite needs instances > 0, classes >= 2, dim >= 2, taus");
  }
  if (!(config.eta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eta must be non-negative");
  for (double tau : config.taus) detail::require_positive_temperature(tau);

  TheoremSuiteResult out;
  out.report.eta = config.eta;
  out.report.taus = config.taus;
  const double measurable = 1e3 * std::numeric_limits<double>::epsilon();
  const bool moving = config.eta > 0.0;

  for (int inst = 0; inst < config.instances; ++inst) {
    const double tau = config.taus[static_cast<std::size_t>(inst) % config.taus.size()];
    Rng rng(derive_seed(config.seed, {kStreamTheorem, static_cast<std::uint64_t>(inst)}));
    // Prompts spread around a shared center by ~sqrt(tau) keep the logit gaps
    // at a few tau, so the softmax rows stay away from one-hot at every tau.
    const double spread = std::min(1.0, 4.0 * std::sqrt(tau));
    const Vector center = l2_normalize(gaussian_vector(config.dim, rng));
    const FeatureMatrix offsets = random_unit_rows(config.classes, config.dim, rng);
    FeatureMatrix text(config.classes, config.dim);
    for (int c = 0; c < config.classes; ++c) {
      text.row(c) = l2_normalize(Vector(center + spread * offsets.row(c).transpose())).transpose();
    }
    auto sample_of = [&](int c) {
      const Vector noise = 0.6 * gaussian_vector(config.dim, rng) / std::sqrt(config.dim);
      return l2_normalize(Vector(center + spread * (offsets.row(c).transpose() + noise)));
    };

    // One sample per class, perturbed away from its prompt.
    FeatureMatrix feats(config.classes, config.dim);
    for (int c = 0; c < config.classes; ++c) feats.row(c) = sample_of(c).transpose();
    for (int i = 0; i < config.classes; ++i) {
      for (int k = i + 1; k < config.classes; ++k) {
        const Vector fi = feats.row(i).transpose();
        const Vector fk = feats.row(k).transpose();
        const Vector pi = probability_row(fi, text, tau);
        const Vector pk = probability_row(fk, text, tau);
        TheoremPair pair;
        pair.instance = inst;
        pair.i = i;
        pair.k = k;
        pair.same_class = false;
        pair.delta_cos_actual = delta_cos_actual(fi, fk, text, i, k, config.eta, tau);
        pair.delta_cos_predicted = predicted_delta_cos(fi, fk, text, i, k, pi, pk, config.eta, tau);
        pair.residual = std::abs(pair.delta_cos_actual - pair.delta_cos_predicted);
        out.report.pairs.push_back(pair);

        if (!moving) continue;
        ResidualCheck check;
        check.instance = inst;
        check.tau = tau;
        check.residual_full = pair.residual;
        const double half = config.eta / 2.0;
        check.residual_half = std::abs(delta_cos_actual(fi, fk, text, i, k, half, tau) -
                                       predicted_delta_cos(fi, fk, text, i, k, pi, pk, half, tau));
        check.skipped = !(check.residual_full > measurable * std::abs(pair.delta_cos_predicted));
        if (!check.skipped) {
          check.ratio = check.residual_half / check.residual_full;
          check.passed = check.ratio >= config.ratio_low && check.ratio <= config.ratio_high;
          if (!check.passed) ++out.residual_failures;
        }
        out.residuals.push_back(check);
      }
    }

    // Same-class pair: shared prompt, correct logit strictly maximal for both.
    const int label = inst % config.classes;
    Vector same[2];
    for (auto& f : same) {
      for (;;) {
        f = sample_of(label);
        const Vector sims = text * f;
        Index best = 0;
        sims.maxCoeff(&best);
        bool strict = best == label;
        for (Index j = 0; j < sims.size() && strict; ++j) strict = j == label || sims[j] < sims[label];
        if (strict) break;
      }
    }
    const Vector pi = probability_row(same[0], text, tau);
    const Vector pk = probability_row(same[1], text, tau);
    TheoremPair pair;
    pair.instance = inst;
    pair.i = config.classes;
    pair.k = config.classes + 1;
    pair.same_class = true;
    pair.delta_cos_actual = delta_cos_actual(same[0], same[1], text, label, label, config.eta, tau);
    pair.delta_cos_predicted = predicted_delta_cos(same[0], same[1], text, label, label, pi, pk, config.eta, tau);
    pair.residual = std::abs(pair.delta_cos_actual - pair.delta_cos_predicted);
    out.report.pairs.push_back(pair);
    if (moving) {
      PositivityCheck pos;
      pos.instance = inst;
      pos.tau = tau;
      pos.predicted = pair.delta_cos_predicted;
      pos.actual = pair.delta_cos_actual;
      pos.passed = pos.predicted > 0.0;
      if (!pos.passed) ++out.positivity_failures;
      out.positivity.push_back(pos);
    }
  }
  return out;
}

}  // namespace xmod
