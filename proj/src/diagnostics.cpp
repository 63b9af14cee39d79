#include "xmod/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace xmod {

Vector gap_vector(const FeatureMatrix& visual, const FeatureMatrix& text_expanded) {
  detail::require_same_dim(visual.cols(), text_expanded.cols(), "gap_vector dimension");
  detail::require_same_dim(visual.rows(), text_expanded.rows(), "gap_vector row count");
  if (visual.rows() == 0) throw Error(ErrorCode::InsufficientSamples, "gap of an empty set");
  return (visual.colwise().mean() - text_expanded.colwise().mean()).transpose();
}

ShiftedPair gap_shift(const FeatureMatrix& visual, const FeatureMatrix& text, const Vector& gap, double alpha) {
  detail::require_same_dim(visual.cols(), gap.size(), "gap_shift visual dimension");
  detail::require_same_dim(text.cols(), gap.size(), "gap_shift text dimension");
  if (alpha == 0.0) return {visual, text};
  const RowVector step = alpha * gap.transpose();
  return {normalize_rows(visual.rowwise() - step), normalize_rows(text.rowwise() + step)};
}

ShiftedPair gap_shift(const FeatureMatrix& visual, const FeatureMatrix& text_expanded, double alpha) {
  return gap_shift(visual, text_expanded, gap_vector(visual, text_expanded), alpha);
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int i = -20; i <= 30; ++i) grid.push_back(i * 0.05);
  return grid;
}

GapReport gap_sweep(const FeatureMatrix& visual, const LabelList& labels, const FeatureMatrix& class_text,
                    const std::vector<double>& alphas, double tau) {
  const auto zero = std::find(alphas.begin(), alphas.end(), 0.0);
  if (zero == alphas.end()) throw Error(ErrorCode::InvalidArgument, "alpha grid must contain 0");
  detail::check_labels(labels, visual.rows(), class_text.rows());

  const Vector gap = gap_vector(visual, gather_rows(class_text, labels));
  GapReport report;
  report.alphas = alphas;
  report.gap_norm = gap.norm();
  for (double alpha : alphas) {
    const ShiftedPair shifted = gap_shift(visual, class_text, gap, alpha);
    report.loss.push_back(vlm_loss(shifted.visual, shifted.text, labels, tau).loss);
    report.accuracy.push_back(accuracy_percent(classify(shifted.visual, shifted.text, tau), labels));
  }
  const auto zero_at = static_cast<std::size_t>(zero - alphas.begin());
  report.loss_at_zero = report.loss[zero_at];
  report.accuracy_at_zero = report.accuracy[zero_at];

  // Ties within 1e-12 resolve toward the smallest |alpha|.
  std::size_t best = zero_at;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double lb = report.loss[best];
    const double li = report.loss[i];
    const bool tied = std::abs(li - lb) <= 1e-12 * std::max(1.0, std::abs(lb));
    if ((!tied && li < lb) || (tied && std::abs(alphas[i]) < std::abs(alphas[best]))) best = i;
  }
  report.best_alpha = alphas[best];
  report.accuracy_at_best = report.accuracy[best];
  report.gap = std::max(0.0, report.loss_at_zero - report.loss[best]);
  return report;
}

DeltaCosTrace delta_cos_trace(const std::vector<LowRankAdapter>& snapshots, const FeatureMatrix& support,
                              const LabelList& labels) {
  detail::require_same_dim(static_cast<Index>(labels.size()), support.rows(), "delta_cos_trace labels");
  DeltaCosTrace trace;
  for (std::size_t i = 0; i < labels.size() && !trace.same_class_available; ++i)
    for (std::size_t k = i + 1; k < labels.size(); ++k)
      if (labels[i] == labels[k]) {
        trace.same_class_available = true;
        break;
      }
  if (snapshots.size() < 2) return trace;

  Matrix prev = gram_matrix(adapt_visual(snapshots.front(), support));
  int negative = 0;
  for (std::size_t s = 1; s < snapshots.size(); ++s) {
    const Matrix next = gram_matrix(adapt_visual(snapshots[s], support));
    double same = 0.0, diff = 0.0;
    int n_same = 0, n_diff = 0;
    for (Index i = 0; i < support.rows(); ++i) {
      for (Index k = i + 1; k < support.rows(); ++k) {
        const double delta = next(i, k) - prev(i, k);
        if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(k)]) {
          same += delta;
          ++n_same;
        } else {
          diff += delta;
          ++n_diff;
        }
      }
    }
    if (n_same) trace.same_class.push_back(same / n_same);
    if (n_diff) {
      trace.diff_class.push_back(diff / n_diff);
      negative += trace.diff_class.back() < 0.0;
    }
    prev = next;
  }
  if (!trace.diff_class.empty()) {
    trace.negative_diff_fraction = static_cast<double>(negative) / static_cast<double>(trace.diff_class.size());
  }
  return trace;
}

double ProbeReport::first_half_negative_fraction() const {
  const std::size_t half = records.size() / 2;
  if (half == 0) return 0.0;
  std::size_t negative = 0;
  for (std::size_t i = 0; i < half; ++i) negative += records[i].delta < 0.0;
  return static_cast<double>(negative) / static_cast<double>(half);
}

ProbeReport visual_probe(const std::vector<LowRankAdapter>& snapshots, const EpisodeInputs& inputs,
                         const ProbeConfig& config) {
  if (config.steps < 0 || !(config.eta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "bad probe settings");
  LossConfig measure;
  measure.tau = config.tau;
  LossConfig drive;
  drive.tau = config.probe_tau;

  ProbeReport report;
  StepContext none;
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    LowRankAdapter probe = snapshots[s];
    ProbeRecord rec;
    rec.snapshot = static_cast<int>(s);
    rec.vlm_before = loss_value(LossKind::Vlm, probe, inputs, none, measure);
    StepContext ctx;
    ctx.visual_weights =
        class_prototypes(adapt_visual(probe, inputs.support), inputs.labels, inputs.num_classes());
    for (int k = 0; k < config.steps && config.eta > 0.0; ++k) {
      const LossAndGrad g = analytic_grads(LossKind::Visual, probe, inputs, ctx, drive);
      probe = sgd_step(probe, g.grad, config.eta);
    }
    rec.vlm_after = loss_value(LossKind::Vlm, probe, inputs, none, measure);
    rec.delta = rec.vlm_after - rec.vlm_before;
    report.records.push_back(rec);
  }
  return report;
}

}  // namespace xmod
