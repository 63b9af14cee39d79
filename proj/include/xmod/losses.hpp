#pragma once

#include <string>
#include <variant>
#include <vector>

#include "xmod/linalg.hpp"
#include "xmod/rng.hpp"

namespace xmod {

/// Class index per row, each in [0, C).
using LabelList = std::vector<int>;

enum class SvlStrategy { Off, ClassShuffle, NegLv, NoiseProto };
enum class RaStrategy { Off, Fused, OnlyVision, OnlyText };

const char* to_string(SvlStrategy s);
const char* to_string(RaStrategy s);
SvlStrategy parse_svl(const std::string& s);
RaStrategy parse_ra(const std::string& s);

/// Training-schedule position. The auxiliary losses are active for
/// window_begin <= epoch < init_epochs; window_begin defaults to 0.
struct PhaseState {
  int epoch = 0;
  int total_epochs = 1;
  int init_epochs = 0;
  int window_begin = 0;

  bool auxiliary_active() const { return epoch >= window_begin && epoch < init_epochs; }
  double progress() const { return static_cast<double>(epoch) / static_cast<double>(total_epochs); }
  void validate() const;
};

struct LossConfig {
  double tau = 0.01;
  double tau_ra = 1.0;
  double lambda = 0.1;
  double beta = 3.0;
  SvlStrategy svl = SvlStrategy::ClassShuffle;
  RaStrategy ra = RaStrategy::Fused;

  void validate() const;
};

struct CrossEntropyResult {
  double loss = 0.0;
  Matrix probs;  ///< n x C softmax of the logits
};

/// -(1/n) sum_i log softmax(F T^T / tau)[i, labels_i].
CrossEntropyResult vlm_loss(const FeatureMatrix& features, const FeatureMatrix& text, const LabelList& labels,
                            double tau);

/// Same cross-entropy with classifier weights in place of text rows.
double visual_loss(const FeatureMatrix& features, const FeatureMatrix& weights, const LabelList& labels,
                   double tau);

/// Normalized per-class means of `features`.
FeatureMatrix class_prototypes(const FeatureMatrix& features, const LabelList& labels, int num_classes);

/// Randomness consumed by one evaluation of the anti-visual loss. Everything
/// in here is a constant as far as gradients are concerned, except that the
/// class-shuffle weights are live rows of the feature matrix.
struct AntiVisualDraw {
  SvlStrategy strategy = SvlStrategy::Off;
  int num_classes = 0;
  std::vector<Index> shuffle_index;  ///< class_shuffle: one support row per class slot
  FeatureMatrix frozen_weights;      ///< neg_lv prototypes or noise_proto weights
};

AntiVisualDraw draw_anti_visual(SvlStrategy strategy, const FeatureMatrix& support, const LabelList& labels,
                                int num_classes, Rng& rng);

double anti_visual_loss(const FeatureMatrix& support, const LabelList& labels, const AntiVisualDraw& draw,
                        double tau);

/// Draws from `rng` and evaluates in one go.
double anti_visual_loss(const FeatureMatrix& support, const LabelList& labels, SvlStrategy strategy,
                        int num_classes, Rng& rng, double tau);

/// (1 - e/E) A_anchor + (e/E) A_t[L, L].
SimilarityMatrix fuse_matrix(const SimilarityMatrix& anchor, const SimilarityMatrix& text_gram,
                             const LabelList& labels, const PhaseState& phase);

/// Target matrix for the relationship-alignment loss under `strategy`.
SimilarityMatrix ra_target(RaStrategy strategy, const SimilarityMatrix& anchor, const SimilarityMatrix& text_gram,
                           const LabelList& labels, const PhaseState& phase);

/// Mean over rows of KL(softmax(current/tau_ra) || softmax(target/tau_ra)).
double ra_loss(const SimilarityMatrix& current, const SimilarityMatrix& target, double tau_ra);

struct LossComponents {
  double vlm = 0.0;
  double anti_visual = 0.0;
  double relation = 0.0;
};

struct LossBreakdown {
  double total = 0.0;
  double vlm = 0.0;
  double anti_visual = 0.0;  ///< unweighted; 0 outside the auxiliary window
  double relation = 0.0;     ///< unweighted; 0 outside the auxiliary window
  bool auxiliary_active = false;
};

/// L_vlm + beta L_ra + lambda L_ad inside the auxiliary window, L_vlm outside.
LossBreakdown total_loss(const LossComponents& components, const LossConfig& config, const PhaseState& phase);

namespace detail {
void check_labels(const LabelList& labels, Index rows, Index classes);
}

}  // namespace xmod
