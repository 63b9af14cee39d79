#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xmod/losses.hpp"

namespace xmod {

/// Labeled visual embeddings plus one text embedding per class. Held in
/// double precision; persisted as little-endian float32.
struct EmbeddingDataset {
  FeatureMatrix visual;  ///< count x d
  LabelList labels;      ///< count entries in [0, C)
  std::vector<std::string> class_names;
  FeatureMatrix text;  ///< C x d
  std::string source = "unknown";
  std::map<std::string, std::string> metadata;  ///< extra manifest keys (e.g. skipped_images)

  Index dim() const { return visual.cols(); }
  Index count() const { return visual.rows(); }
  int classes() const { return static_cast<int>(text.rows()); }

  /// Row indices of class c, ascending.
  std::vector<Index> rows_of_class(int c) const;

  /// Throws on shape, label, empty-class or non-finite violations.
  void validate() const;

  bool operator==(const EmbeddingDataset&) const = default;
};

/// Rounds every feature through float32 (the on-disk precision) and
/// renormalizes the rows, exactly as load_dataset does.
EmbeddingDataset quantize(const EmbeddingDataset& ds);

struct SyntheticConfig {
  int classes = 20;
  int per_class = 40;
  int dim = 64;
  double noise = 0.25;     ///< expected norm of the intra-class Gaussian jitter
  double gap = 0.8;        ///< norm of the constant offset added to every visual feature
  double rotation = 1.4;   ///< angle (radians) by which visual class centers are rotated
  double max_anchor_cos = 0.95;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Text anchors are random unit vectors (pairwise cosine below
/// max_anchor_cos); visual rows are normalize(R a_label + noise + gap * u).
EmbeddingDataset gen_synthetic(const SyntheticConfig& config);

// --- persisted format -------------------------------------------------------

inline constexpr int kFormatVersion = 1;

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const unsigned char> bytes);

void save_dataset(const EmbeddingDataset& ds, const std::filesystem::path& dir);

struct LoadedDataset {
  EmbeddingDataset dataset;
  std::vector<std::string> warnings;
};

/// Reads a dataset directory. Rows are checked to be unit-norm within 1e-4
/// and re-normalized after widening to double.
LoadedDataset load_dataset(const std::filesystem::path& dir);

/// Tiny fixtures: both files have the header `label,v0,...,v{d-1}`. The text
/// file holds one row per class, the label column giving the class index.
EmbeddingDataset import_csv(const std::filesystem::path& visual_csv, const std::filesystem::path& text_csv);

// --- shared container helpers ----------------------------------------------

/// key=value manifest, one entry per line, '#' comments allowed.
struct Manifest {
  std::vector<std::pair<std::string, std::string>> entries;

  void set(const std::string& key, const std::string& value);
  const std::string* find(const std::string& key) const;
  const std::string& at(const std::string& key) const;
  std::string to_text() const;
  static Manifest parse(const std::string& text);
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);
std::string checksum_string(std::uint64_t h);

}  // namespace xmod
