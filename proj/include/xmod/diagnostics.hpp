#pragma once

#include <vector>

#include "xmod/trainer.hpp"

namespace xmod {

/// Mean visual row minus mean text row (one text row per sample).
Vector gap_vector(const FeatureMatrix& visual, const FeatureMatrix& text_expanded);

struct ShiftedPair {
  FeatureMatrix visual;
  FeatureMatrix text;
};

/// Moves visual rows by -alpha * gap and text rows by +alpha * gap, then
/// renormalizes. alpha == 0 returns the inputs untouched.
ShiftedPair gap_shift(const FeatureMatrix& visual, const FeatureMatrix& text, const Vector& gap, double alpha);

/// Convenience form computing the gap from the paired sets.
ShiftedPair gap_shift(const FeatureMatrix& visual, const FeatureMatrix& text_expanded, double alpha);

/// -1.0, -0.95, ..., 1.5.
std::vector<double> default_alpha_grid();

struct GapReport {
  std::vector<double> alphas;
  std::vector<double> loss;
  std::vector<double> accuracy;
  double gap_norm = 0.0;
  double gap = 0.0;  ///< loss(0) - min_alpha loss(alpha)
  double best_alpha = 0.0;
  double loss_at_zero = 0.0;
  double accuracy_at_zero = 0.0;
  double accuracy_at_best = 0.0;
};

/// Sweeps the gap shift over `alphas` (which must contain 0). The text side is
/// shifted once per class; the gap itself uses per-sample text expansion.
GapReport gap_sweep(const FeatureMatrix& visual, const LabelList& labels, const FeatureMatrix& class_text,
                    const std::vector<double>& alphas, double tau);

struct DeltaCosTrace {
  std::vector<double> same_class;  ///< per consecutive snapshot pair; empty without same-class pairs
  std::vector<double> diff_class;
  bool same_class_available = false;
  double negative_diff_fraction = 0.0;
};

/// Pairwise cosine changes among adapted support rows between consecutive
/// snapshots, averaged separately over same- and different-class pairs.
DeltaCosTrace delta_cos_trace(const std::vector<LowRankAdapter>& snapshots, const FeatureMatrix& support,
                              const LabelList& labels);

struct ProbeConfig {
  int steps = 10;
  double eta = 0.1;
  double tau = 0.01;        ///< temperature of the measured L_vlm
  double probe_tau = 0.1;   ///< temperature of the visual-learning loss driving the probe
};

struct ProbeRecord {
  int snapshot = 0;  ///< completed epochs at the snapshot
  double vlm_before = 0.0;
  double vlm_after = 0.0;
  double delta = 0.0;  ///< vlm_after - vlm_before
};

struct ProbeReport {
  std::vector<ProbeRecord> records;

  /// Fraction of records with index < count/2 whose delta is negative.
  double first_half_negative_fraction() const;
};

/// From each snapshot, takes `steps` gradient steps on L_v against class
/// prototypes of the snapshot's adapted support, and records the change of
/// L_vlm. Snapshots are never modified.
ProbeReport visual_probe(const std::vector<LowRankAdapter>& snapshots, const EpisodeInputs& inputs,
                         const ProbeConfig& config);

}  // namespace xmod
