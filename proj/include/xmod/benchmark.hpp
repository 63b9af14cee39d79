#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "xmod/diagnostics.hpp"

namespace xmod {

enum class BenchmarkMode { FineTune, ZeroShot };

struct BenchmarkConfig {
  int ways = 5;
  int shots = 1;
  int queries = 15;
  int tasks = 800;
  std::uint64_t seed = 0;
  BenchmarkMode mode = BenchmarkMode::FineTune;
  TrainConfig train;  ///< train.seed is replaced per task
  bool measure_gap = true;
  std::vector<double> alpha_grid = default_alpha_grid();
  int parallel = 1;

  void validate() const;
};

struct BenchmarkResult {
  std::vector<double> accuracies;  ///< percent, task order
  std::vector<double> gaps;        ///< Gap metric on the adapted query set; empty unless measured
  double mean = 0.0;
  double ci95 = 0.0;
  double mean_gap = 0.0;
  int task_count = 0;

  bool operator==(const BenchmarkResult&) const = default;
};

/// 1.96 * population standard deviation / sqrt(T).
double ci95(std::span<const double> values);

/// Episode and training seed of task `task`; run_benchmark uses exactly these.
Episode benchmark_episode(const EmbeddingDataset& ds, const BenchmarkConfig& config, int task);
std::uint64_t benchmark_train_seed(const BenchmarkConfig& config, int task);

/// Per-task streams derive from (seed, task index), so any worker count gives
/// the same result.
BenchmarkResult run_benchmark(const EmbeddingDataset& ds, const BenchmarkConfig& config);

}  // namespace xmod
