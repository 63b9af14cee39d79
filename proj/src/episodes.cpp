#include "xmod/episodes.hpp"

#include <numeric>

namespace xmod {

namespace {

// First `count` entries of a uniform shuffle of `pool`.
template <typename T>
std::vector<T> draw_without_replacement(std::vector<T> pool, std::size_t count, Rng& rng) {
  for (std::size_t j = 0; j < count; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
    std::swap(pool[j], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace

Episode sample_episode(const EmbeddingDataset& ds, int ways, int shots, int queries, Rng& rng) {
  if (ways < 1 || shots < 1 || queries < 0) {
    throw Error(ErrorCode::InvalidArgument, "episode needs ways >= 1, shots >= 1, queries >= 0");
  }
  if (ways > ds.classes()) {
    throw Error(ErrorCode::InsufficientClasses, std::to_string(ways) + "-way episode from a dataset with " +
                                                    std::to_string(ds.classes()) + " classes");
  }
  std::vector<int> all(static_cast<std::size_t>(ds.classes()));
  std::iota(all.begin(), all.end(), 0);
  Episode ep;
  ep.class_ids = draw_without_replacement(all, static_cast<std::size_t>(ways), rng);

  const auto need = static_cast<std::size_t>(shots + queries);
  for (int local = 0; local < ways; ++local) {
    auto rows = ds.rows_of_class(ep.class_ids[static_cast<std::size_t>(local)]);
    if (rows.size() < need) {
      throw Error(ErrorCode::InsufficientSamples, "class " + ds.class_names[static_cast<std::size_t>(ep.class_ids[static_cast<std::size_t>(local)])] +
                                                      " has " + std::to_string(rows.size()) + " samples, need " +
                                                      std::to_string(need));
    }
    const auto picked = draw_without_replacement(std::move(rows), need, rng);
    for (std::size_t j = 0; j < need; ++j) {
      if (j < static_cast<std::size_t>(shots)) {
        ep.support_rows.push_back(picked[j]);
        ep.support_labels.push_back(local);
      } else {
        ep.query_rows.push_back(picked[j]);
        ep.query_labels.push_back(local);
      }
    }
  }
  ep.support = gather_rows(ds.visual, ep.support_rows);
  ep.query = gather_rows(ds.visual, ep.query_rows);
  return ep;
}

FeatureMatrix episode_text(const EmbeddingDataset& ds, const Episode& episode) {
  return gather_rows(ds.text, episode.class_ids);
}

LabelList classify(const FeatureMatrix& queries, const FeatureMatrix& text, double tau) {
  detail::require_positive_temperature(tau);
  // tau > 0 never changes the argmax, so the raw similarities are compared.
  const Matrix logits = cross_gram(queries, text);
  LabelList out(static_cast<std::size_t>(queries.rows()));
  for (Index i = 0; i < logits.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy_percent(const LabelList& predicted, const LabelList& truth) {
  detail::require_same_dim(static_cast<Index>(predicted.size()), static_cast<Index>(truth.size()), "accuracy");
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return 100.0 * static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace xmod
