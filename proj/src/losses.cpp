#include "xmod/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace xmod {

const char* to_string(SvlStrategy s) {
  switch (s) {
    case SvlStrategy::Off: return "off";
    case SvlStrategy::ClassShuffle: return "ours";
    case SvlStrategy::NegLv: return "neg-lv";
    case SvlStrategy::NoiseProto: return "noise-proto";
  }
  return "?";
}

const char* to_string(RaStrategy s) {
  switch (s) {
    case RaStrategy::Off: return "off";
    case RaStrategy::Fused: return "ours";
    case RaStrategy::OnlyVision: return "only-vision";
    case RaStrategy::OnlyText: return "only-text";
  }
  return "?";
}

SvlStrategy parse_svl(const std::string& s) {
  if (s == "off") return SvlStrategy::Off;
  if (s == "ours" || s == "class-shuffle") return SvlStrategy::ClassShuffle;
  if (s == "neg-lv") return SvlStrategy::NegLv;
  if (s == "noise-proto") return SvlStrategy::NoiseProto;
  throw Error(ErrorCode::InvalidArgument, "unknown svl strategy '" + s + "'");
}

RaStrategy parse_ra(const std::string& s) {
  if (s == "off") return RaStrategy::Off;
  if (s == "ours" || s == "fused") return RaStrategy::Fused;
  if (s == "only-vision") return RaStrategy::OnlyVision;
  if (s == "only-text") return RaStrategy::OnlyText;
  throw Error(ErrorCode::InvalidArgument, "unknown ra strategy '" + s + "'");
}

void PhaseState::validate() const {
  if (total_epochs <= 0) throw Error(ErrorCode::InvalidArgument, "total epochs must be positive");
  if (init_epochs < 0 || init_epochs > total_epochs) {
    throw Error(ErrorCode::InvalidArgument, "init epochs must lie in [0, total epochs]");
  }
  if (window_begin < 0) throw Error(ErrorCode::InvalidArgument, "auxiliary window begins before epoch 0");
  if (epoch < 0 || epoch > total_epochs) throw Error(ErrorCode::InvalidArgument, "epoch outside [0, E]");
}

void LossConfig::validate() const {
  if (!(tau > 0.0) || !(tau_ra > 0.0)) {
    throw Error(ErrorCode::NonPositiveTemperature, "tau and tau_ra must be positive");
  }
  if (!(lambda >= 0.0) || !(beta >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "lambda and beta must be non-negative");
  }
}

namespace detail {

void check_labels(const LabelList& labels, Index rows, Index classes) {
  if (static_cast<Index>(labels.size()) != rows) {
    throw Error(ErrorCode::DimensionMismatch, "label count " + std::to_string(labels.size()) +
                                                  " does not match row count " + std::to_string(rows));
  }
  for (int l : labels) {
    if (l < 0 || l >= classes) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "label " + std::to_string(l) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace detail

namespace {

CrossEntropyResult cross_entropy(const FeatureMatrix& features, const FeatureMatrix& weights,
                                 const LabelList& labels, double tau) {
  detail::require_same_dim(features.cols(), weights.cols(), "cross-entropy feature dimension");
  detail::check_labels(labels, features.rows(), weights.rows());
  const Matrix logp = log_softmax_rows(features * weights.transpose(), tau);
  double sum = 0.0;
  for (Index i = 0; i < logp.rows(); ++i) sum -= logp(i, labels[i]);
  CrossEntropyResult out;
  out.loss = features.rows() > 0 ? sum / static_cast<double>(features.rows()) : 0.0;
  out.probs = logp.array().exp().matrix();
  return out;
}

}  // namespace

CrossEntropyResult vlm_loss(const FeatureMatrix& features, const FeatureMatrix& text, const LabelList& labels,
                            double tau) {
  return cross_entropy(features, text, labels, tau);
}

double visual_loss(const FeatureMatrix& features, const FeatureMatrix& weights, const LabelList& labels,
                   double tau) {
  return cross_entropy(features, weights, labels, tau).loss;
}

FeatureMatrix class_prototypes(const FeatureMatrix& features, const LabelList& labels, int num_classes) {
  detail::check_labels(labels, features.rows(), num_classes);
  FeatureMatrix sums = FeatureMatrix::Zero(num_classes, features.cols());
  std::vector<int> counts(static_cast<std::size_t>(num_classes), 0);
  for (Index i = 0; i < features.rows(); ++i) {
    sums.row(labels[i]) += features.row(i);
    ++counts[static_cast<std::size_t>(labels[i])];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw Error(ErrorCode::InsufficientSamples, "class " + std::to_string(c) + " has no samples");
    }
  }
  return normalize_rows(sums);
}

AntiVisualDraw draw_anti_visual(SvlStrategy strategy, const FeatureMatrix& support, const LabelList& labels,
                                int num_classes, Rng& rng) {
  AntiVisualDraw draw;
  draw.strategy = strategy;
  draw.num_classes = num_classes;
  switch (strategy) {
    case SvlStrategy::Off:
      break;
    case SvlStrategy::ClassShuffle: {
      const auto n = support.rows();
      if (n < num_classes) {
        throw Error(ErrorCode::InsufficientSamples, "class shuffle needs at least one support row per class");
      }
      // Partial Fisher-Yates: the first C entries are a uniform draw without replacement.
      std::vector<Index> pool(static_cast<std::size_t>(n));
      std::iota(pool.begin(), pool.end(), Index{0});
      for (int j = 0; j < num_classes; ++j) {
        std::uniform_int_distribution<Index> pick(j, n - 1);
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(rng))]);
      }
      draw.shuffle_index.assign(pool.begin(), pool.begin() + num_classes);
      break;
    }
    case SvlStrategy::NegLv:
      draw.frozen_weights = class_prototypes(support, labels, num_classes);
      break;
    case SvlStrategy::NoiseProto: {
      std::normal_distribution<double> gauss(0.0, 1.0);
      FeatureMatrix w(num_classes, support.cols());
      for (Index i = 0; i < w.rows(); ++i)
        for (Index j = 0; j < w.cols(); ++j) w(i, j) = gauss(rng);
      draw.frozen_weights = normalize_rows(w);
      break;
    }
  }
  return draw;
}

double anti_visual_loss(const FeatureMatrix& support, const LabelList& labels, const AntiVisualDraw& draw,
                        double tau) {
  switch (draw.strategy) {
    case SvlStrategy::Off:
      return 0.0;
    case SvlStrategy::ClassShuffle:
      // Logits A^v[:, I_rand] with A^v = F F^T.
      return visual_loss(support, gather_rows(support, draw.shuffle_index), labels, tau);
    case SvlStrategy::NegLv:
      return -visual_loss(support, draw.frozen_weights, labels, tau);
    case SvlStrategy::NoiseProto:
      return visual_loss(support, draw.frozen_weights, labels, tau);
  }
  return 0.0;
}

double anti_visual_loss(const FeatureMatrix& support, const LabelList& labels, SvlStrategy strategy,
                        int num_classes, Rng& rng, double tau) {
  return anti_visual_loss(support, labels, draw_anti_visual(strategy, support, labels, num_classes, rng), tau);
}

SimilarityMatrix fuse_matrix(const SimilarityMatrix& anchor, const SimilarityMatrix& text_gram,
                             const LabelList& labels, const PhaseState& phase) {
  detail::require_same_dim(anchor.rows(), anchor.cols(), "fuse_matrix anchor must be square");
  detail::require_same_dim(text_gram.rows(), text_gram.cols(), "fuse_matrix text gram must be square");
  detail::check_labels(labels, anchor.rows(), text_gram.rows());
  phase.validate();
  const double w = phase.progress();
  SimilarityMatrix out(anchor.rows(), anchor.cols());
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j)
      out(i, j) = (1.0 - w) * anchor(i, j) + w * text_gram(labels[i], labels[j]);
  return out;
}

SimilarityMatrix ra_target(RaStrategy strategy, const SimilarityMatrix& anchor, const SimilarityMatrix& text_gram,
                           const LabelList& labels, const PhaseState& phase) {
  switch (strategy) {
    case RaStrategy::Off:
      return {};
    case RaStrategy::Fused:
      return fuse_matrix(anchor, text_gram, labels, phase);
    case RaStrategy::OnlyVision:
      return anchor;
    case RaStrategy::OnlyText: {
      detail::check_labels(labels, anchor.rows(), text_gram.rows());
      SimilarityMatrix out(anchor.rows(), anchor.cols());
      for (Index i = 0; i < out.rows(); ++i)
        for (Index j = 0; j < out.cols(); ++j) out(i, j) = text_gram(labels[i], labels[j]);
      return out;
    }
  }
  return {};
}

double ra_loss(const SimilarityMatrix& current, const SimilarityMatrix& target, double tau_ra) {
  detail::require_same_dim(current.rows(), target.rows(), "ra_loss rows");
  detail::require_same_dim(current.cols(), target.cols(), "ra_loss cols");
  if (current.rows() == 0) return 0.0;
  const Matrix logp = log_softmax_rows(current, tau_ra);
  const Matrix logq = log_softmax_rows(target, tau_ra);
  const double kl = (logp.array().exp() * (logp - logq).array()).sum();
  return kl / static_cast<double>(current.rows());
}

LossBreakdown total_loss(const LossComponents& components, const LossConfig& config, const PhaseState& phase) {
  phase.validate();
  LossBreakdown out;
  out.vlm = components.vlm;
  out.auxiliary_active = phase.auxiliary_active();
  if (!out.auxiliary_active) {
    out.total = components.vlm;
    return out;
  }
  out.anti_visual = components.anti_visual;
  out.relation = components.relation;
  out.total = components.vlm + config.beta * components.relation + config.lambda * components.anti_visual;
  return out;
}

}  // namespace xmod
