#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xmod/adapter.hpp"
#include "xmod/episodes.hpp"
#include "xmod/gradients.hpp"
#include "xmod/losses.hpp"

namespace xmod {

enum class PhaseMode { Default, No, Begin, Middle, Last, All };

const char* to_string(PhaseMode m);
PhaseMode parse_phase(const std::string& s);

/// floor(3E / 5).
inline int default_init_epochs(int epochs) { return 3 * epochs / 5; }

struct TrainConfig {
  double eta = 1e-2;
  int epochs = 250;
  int init_epochs = 150;  ///< auxiliary window end
  int window_begin = 0;   ///< auxiliary window start
  LossConfig loss;
  int rank = 4;
  double lora_scale = 1.0;
  Branch branch = Branch::Visual;
  double init_sigma = 0.02;
  std::uint64_t seed = 0;
  int steps_per_epoch = 1;
  double jitter_sigma = 0.0;  ///< feature-space support augmentation; 0 disables
  int jitter_copies = 0;
  bool keep_snapshots = false;

  void validate() const;
  PhaseState phase_at(int epoch) const;
};

/// Rewrites the auxiliary window: begin [0, 3E/5), middle [E/5, 4E/5),
/// last [2E/5, E), all [0, E), no = empty. Default leaves it untouched.
TrainConfig disturb_phase_variant(TrainConfig config, PhaseMode mode);

/// Everything a step needs that does not depend on the adapter parameters.
struct EpisodeInputs {
  FeatureMatrix support;    ///< raw unit rows, before adaptation
  LabelList labels;
  FeatureMatrix text;       ///< C x d class prompts, before adaptation
  SimilarityMatrix anchor;  ///< gram of the raw support rows (frozen A^v)

  EpisodeInputs() = default;
  EpisodeInputs(FeatureMatrix support, LabelList labels, FeatureMatrix text);
  int num_classes() const { return static_cast<int>(text.rows()); }
};

/// Stop-gradient quantities for one optimization step.
struct StepContext {
  PhaseState phase;
  AntiVisualDraw draw;
  SimilarityMatrix relation_target;  ///< empty when the RA term is off
  FeatureMatrix visual_weights;      ///< classifier rows for LossKind::Visual
};

/// Samples I_rand / noise weights / prototypes and builds the RA target at the
/// current adapter state. Off strategies draw nothing from `aux`.
StepContext make_step_context(const LowRankAdapter& adapter, const EpisodeInputs& inputs, SvlStrategy svl,
                              RaStrategy ra, const PhaseState& phase, Rng& aux);

enum class LossKind { Vlm, Visual, AntiVisual, Relation };

struct LossAndGrad {
  double loss = 0.0;
  AdapterGrad grad;
};

/// One loss term and its gradient w.r.t. the adapter parameters, chained
/// through the adapter and the row renormalization.
LossAndGrad analytic_grads(LossKind kind, const LowRankAdapter& adapter, const EpisodeInputs& inputs,
                           const StepContext& context, const LossConfig& config);

/// Value only, computed from the plain loss functions (no gradient code).
double loss_value(LossKind kind, const LowRankAdapter& adapter, const EpisodeInputs& inputs,
                  const StepContext& context, const LossConfig& config);

struct ObjectiveResult {
  LossBreakdown breakdown;
  AdapterGrad grad;
};

/// Two-phase total loss and its gradient. Terms whose strategy is off in
/// `context` (or whose weight is 0) are skipped.
ObjectiveResult evaluate_objective(const LowRankAdapter& adapter, const EpisodeInputs& inputs,
                                   const StepContext& context, const LossConfig& config);

double objective_value(const LowRankAdapter& adapter, const EpisodeInputs& inputs, const StepContext& context,
                       const LossConfig& config);

struct EpochRecord {
  int epoch = 0;
  double vlm = 0.0;
  double anti_visual = 0.0;
  double relation = 0.0;
  double total = 0.0;
  double support_accuracy = 0.0;
  double delta_cos_same = 0.0;  ///< NaN without same-class pairs
  double delta_cos_diff = 0.0;
  int snapshot_id = 0;  ///< index into snapshots of the post-step adapter
};

struct TrainTrajectory {
  std::vector<EpochRecord> epochs;
  /// snapshots[0] is the initial adapter, snapshots[e + 1] the adapter after
  /// epoch e. Empty unless keep_snapshots.
  std::vector<LowRankAdapter> snapshots;
};

struct TrainResult {
  LowRankAdapter adapter;
  TrainTrajectory trajectory;
};

/// Full-batch gradient descent on the support set, auxiliary terms inside the
/// configured window. Deterministic given config.seed.
TrainResult train_episode(const FeatureMatrix& support, const LabelList& labels, const FeatureMatrix& text,
                          const TrainConfig& config);

TrainResult train_episode(const Episode& episode, const FeatureMatrix& text, const TrainConfig& config);

/// Adapted (visual, text) features of an episode under `adapter`.
FeatureMatrix adapt_visual(const LowRankAdapter& adapter, const FeatureMatrix& rows);
FeatureMatrix adapt_text(const LowRankAdapter& adapter, const FeatureMatrix& rows);

}  // namespace xmod
