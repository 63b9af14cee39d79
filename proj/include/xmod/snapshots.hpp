#pragma once

#include <filesystem>
#include <vector>

#include "xmod/adapter.hpp"
#include "xmod/dataset.hpp"

namespace xmod {

/// Adapter trajectory of one episode plus the episode inputs it was trained
/// on, so probes can be re-run later without the dataset.
struct SnapshotSet {
  std::vector<LowRankAdapter> snapshots;  ///< snapshots[s] = adapter after s epochs
  FeatureMatrix support;
  LabelList labels;
  FeatureMatrix text;

  bool operator==(const SnapshotSet&) const = default;
};

/// Same manifest + checksummed payload layout as datasets, float64 payloads.
void save_snapshots(const SnapshotSet& set, const std::filesystem::path& dir);
SnapshotSet load_snapshots(const std::filesystem::path& dir);

}  // namespace xmod
