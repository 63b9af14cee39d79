#pragma once

#include <vector>

#include "xmod/dataset.hpp"

namespace xmod {

/// One N-way K-shot task. Labels are remapped to [0, N) following class_ids.
struct Episode {
  FeatureMatrix support;
  LabelList support_labels;
  FeatureMatrix query;
  LabelList query_labels;
  std::vector<int> class_ids;       ///< global class index of each local label
  std::vector<Index> support_rows;  ///< dataset row ids
  std::vector<Index> query_rows;

  int ways() const { return static_cast<int>(class_ids.size()); }
};

/// Uniform class and sample selection without replacement.
Episode sample_episode(const EmbeddingDataset& ds, int ways, int shots, int queries, Rng& rng);

/// Text rows of the episode's classes, in local label order.
FeatureMatrix episode_text(const EmbeddingDataset& ds, const Episode& episode);

/// argmax_j of f_i . t_j / tau per row; ties go to the lowest class index.
LabelList classify(const FeatureMatrix& queries, const FeatureMatrix& text, double tau);

/// Percentage of matching entries.
double accuracy_percent(const LabelList& predicted, const LabelList& truth);

}  // namespace xmod
