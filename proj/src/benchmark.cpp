#include "xmod/benchmark.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace xmod {

void BenchmarkConfig::validate() const {
  if (ways < 1 || shots < 1 || queries < 1 || tasks < 1) {
    throw Error(ErrorCode::InvalidArgument, "benchmark needs n, k, m, tasks >= 1");
  }
  if (parallel < 1) throw Error(ErrorCode::InvalidArgument, "parallel must be >= 1");
  if (mode == BenchmarkMode::FineTune) train.validate();
  else train.loss.validate();
}

double ci95(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return 1.96 * std::sqrt(ss / n) / std::sqrt(n);
}

Episode benchmark_episode(const EmbeddingDataset& ds, const BenchmarkConfig& config, int task) {
  Rng rng(derive_seed(config.seed, {kStreamEpisode, static_cast<std::uint64_t>(task)}));
  return sample_episode(ds, config.ways, config.shots, config.queries, rng);
}

std::uint64_t benchmark_train_seed(const BenchmarkConfig& config, int task) {
  return derive_seed(config.seed, {kStreamTrain, static_cast<std::uint64_t>(task)});
}

namespace {

struct TaskOutcome {
  double accuracy = 0.0;
  double gap = 0.0;
};

TaskOutcome run_task(const EmbeddingDataset& ds, const BenchmarkConfig& config, int task) {
  const Episode ep = benchmark_episode(ds, config, task);
  const FeatureMatrix text = episode_text(ds, ep);

  FeatureMatrix query = ep.query;
  FeatureMatrix prompts = text;
  if (config.mode == BenchmarkMode::FineTune) {
    TrainConfig train = config.train;
    train.seed = benchmark_train_seed(config, task);
    train.keep_snapshots = false;
    const TrainResult trained = train_episode(ep, text, train);
    query = adapt_visual(trained.adapter, ep.query);
    prompts = adapt_text(trained.adapter, text);
  }
  TaskOutcome out;
  out.accuracy = accuracy_percent(classify(query, prompts, config.train.loss.tau), ep.query_labels);
  if (config.measure_gap) {
    out.gap = gap_sweep(query, ep.query_labels, prompts, config.alpha_grid, config.train.loss.tau).gap;
  }
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const EmbeddingDataset& ds, const BenchmarkConfig& config) {
  config.validate();
  std::vector<TaskOutcome> outcomes(static_cast<std::size_t>(config.tasks));

  const int workers = std::min(config.parallel, config.tasks);
  if (workers <= 1) {
    for (int t = 0; t < config.tasks; ++t) outcomes[static_cast<std::size_t>(t)] = run_task(ds, config, t);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int t = next++; t < config.tasks; t = next++) {
          try {
            outcomes[static_cast<std::size_t>(t)] = run_task(ds, config, t);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = config.tasks;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  BenchmarkResult result;
  result.task_count = config.tasks;
  for (const auto& o : outcomes) {
    result.accuracies.push_back(o.accuracy);
    if (config.measure_gap) result.gaps.push_back(o.gap);
  }
  const double n = static_cast<double>(config.tasks);
  result.mean = std::accumulate(result.accuracies.begin(), result.accuracies.end(), 0.0) / n;
  result.ci95 = ci95(result.accuracies);
  if (config.measure_gap) result.mean_gap = std::accumulate(result.gaps.begin(), result.gaps.end(), 0.0) / n;
  return result;
}

}  // namespace xmod
