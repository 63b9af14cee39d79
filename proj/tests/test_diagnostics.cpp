#include "doctest.h"

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "xmod/diagnostics.hpp"

using namespace xmod;

TEST_CASE("gap_vector examples") {
  std::mt19937_64 rng(1);
  const FeatureMatrix f = testing::random_unit_rows(4, 3, rng);
  CHECK(gap_vector(f, f).isZero(0.0));

  FeatureMatrix v(2, 2), t(2, 2);
  v << 1, 0, 1, 0;
  t << 0, 1, 0, 1;
  const Vector g = gap_vector(v, t);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == -1.0);

  const FeatureMatrix one = f.topRows(1);
  const FeatureMatrix other = testing::random_unit_rows(1, 3, rng);
  CHECK((gap_vector(one, other) - (one - other).row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(gap_vector(f, f.topRows(2)), Error);
}

TEST_CASE("gap_shift examples") {
  FeatureMatrix f(1, 2), t(1, 2);
  f << 1, 0;
  t << 0, 1;
  const ShiftedPair s = gap_shift(f, t, 0.5);
  CHECK(std::abs(s.visual(0, 0) - 0.7071067811865476) < 1e-15);
  CHECK(std::abs(s.visual(0, 1) - 0.7071067811865476) < 1e-15);
  CHECK(std::abs(s.text(0, 0) - 0.7071067811865476) < 1e-15);
  CHECK(std::abs(s.text(0, 1) - 0.7071067811865476) < 1e-15);

  std::mt19937_64 rng(2);
  const FeatureMatrix a = testing::random_unit_rows(5, 4, rng);
  const FeatureMatrix b = testing::random_unit_rows(5, 4, rng);
  const ShiftedPair zero = gap_shift(a, b, 0.0);
  CHECK((zero.visual - a).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((zero.text - b).cwiseAbs().maxCoeff() <= 1e-12);
  for (double alpha : {-1.0, 0.3, 1.5}) {
    const ShiftedPair same = gap_shift(a, a, alpha);
    CHECK((same.visual - a).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((same.text - a).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("default alpha grid") {
  const auto grid = default_alpha_grid();
  CHECK(grid.size() == 51);
  CHECK(grid.front() == -1.0);
  CHECK(std::abs(grid.back() - 1.5) < 1e-15);
  CHECK(std::count(grid.begin(), grid.end(), 0.0) == 1);
}

TEST_CASE("gap_sweep on an aligned set") {
  SyntheticConfig cfg;
  cfg.classes = 6;
  cfg.per_class = 5;
  cfg.noise = 0.0;
  cfg.gap = 0.0;
  cfg.rotation = 0.0;
  const EmbeddingDataset ds = gen_synthetic(cfg);
  for (Index i = 0; i < ds.count(); ++i)
    CHECK((ds.visual.row(i) - ds.text.row(ds.labels[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff() < 1e-12);
  const GapReport r = gap_sweep(ds.visual, ds.labels, ds.text, default_alpha_grid(), 0.01);
  CHECK(r.best_alpha == 0.0);
  CHECK(r.gap < 1e-10);
  CHECK(r.gap >= 0.0);
  CHECK(r.accuracy_at_zero == 100.0);
  CHECK(r.loss.size() == 51);
}

TEST_CASE("gap_sweep on an injected offset") {
  SyntheticConfig cfg;
  cfg.classes = 10;
  cfg.per_class = 10;
  cfg.noise = 0.05;
  cfg.gap = 1.5;
  cfg.rotation = 0.0;
  const EmbeddingDataset ds = gen_synthetic(cfg);
  const GapReport r = gap_sweep(ds.visual, ds.labels, ds.text, default_alpha_grid(), 0.01);
  CHECK(r.gap > 0.0);
  CHECK(r.best_alpha > 0.0);
  CHECK(r.accuracy_at_best >= r.accuracy_at_zero);
  CHECK(r.gap_norm > 0.5);
}

TEST_CASE("gap_sweep gap is never negative") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const FeatureMatrix t = testing::random_unit_rows(4, 6, rng);
    const FeatureMatrix v = testing::random_unit_rows(12, 6, rng);
    const GapReport r = gap_sweep(v, testing::cyclic_labels(12, 4), t, {-0.5, 0.0, 0.5}, 0.07);
    CHECK(r.gap >= 0.0);
    CHECK(r.gap == doctest::Approx(r.loss_at_zero - *std::min_element(r.loss.begin(), r.loss.end())));
  }
  FeatureMatrix t(2, 2);
  t.setIdentity();
  CHECK_THROWS_AS(gap_sweep(t, {0, 1}, t, {0.5, 1.0}, 0.01), Error);
}

TEST_CASE("delta_cos_trace") {
  std::mt19937_64 rng(6);
  const FeatureMatrix support = testing::random_unit_rows(5, 8, rng);
  Rng init(1);
  const LowRankAdapter a = LowRankAdapter::initialized(8, 2, 1.0, Branch::Visual, 0.1, init);
  const DeltaCosTrace flat = delta_cos_trace({a, a, a}, support, {0, 1, 2, 3, 4});
  CHECK_FALSE(flat.same_class_available);
  CHECK(flat.same_class.empty());
  REQUIRE(flat.diff_class.size() == 2);
  CHECK(flat.diff_class[0] == 0.0);
  CHECK(flat.diff_class[1] == 0.0);

  const DeltaCosTrace two = delta_cos_trace({a, a}, support, {0, 1, 0, 1, 2});
  CHECK(two.same_class_available);
  REQUIRE(two.same_class.size() == 1);
  CHECK(two.same_class[0] == 0.0);
}

TEST_CASE("delta cos trace of a plain 5-shot fine-tune is mostly negative for different classes") {
  SyntheticConfig cfg;
  const EmbeddingDataset ds = gen_synthetic(cfg);
  Rng rng(3);
  const Episode ep = sample_episode(ds, 5, 5, 15, rng);
  TrainConfig tc;
  tc.keep_snapshots = true;
  tc.seed = 3;
  tc.loss.lambda = 0.0;
  tc.loss.beta = 0.0;
  const TrainResult r = train_episode(ep, episode_text(ds, ep), tc);
  const DeltaCosTrace trace = delta_cos_trace(r.trajectory.snapshots, ep.support, ep.support_labels);
  CHECK(trace.same_class_available);
  CHECK(trace.diff_class.size() == 250);
  MESSAGE("negative diff-class fraction " << trace.negative_diff_fraction);
  CHECK(trace.negative_diff_fraction > 0.9);
}

TEST_CASE("visual_probe trivial cases and purity") {
  std::mt19937_64 rng(8);
  const FeatureMatrix text = testing::random_unit_rows(3, 6, rng);
  const FeatureMatrix support = testing::random_unit_rows(6, 6, rng);
  const EpisodeInputs in(support, testing::cyclic_labels(6, 3), text);
  Rng init(2);
  LowRankAdapter a = LowRankAdapter::initialized(6, 2, 1.0, Branch::Visual, 0.3, init);
  a.up = testing::random_matrix(6, 2, rng, 0.3);
  const std::vector<LowRankAdapter> snaps{a, a};

  ProbeConfig k0;
  k0.steps = 0;
  for (const auto& rec : visual_probe(snaps, in, k0).records) CHECK(rec.delta == 0.0);
  ProbeConfig e0;
  e0.eta = 0.0;
  for (const auto& rec : visual_probe(snaps, in, e0).records) CHECK(rec.delta == 0.0);

  const std::vector<LowRankAdapter> copy = snaps;
  const ProbeReport r = visual_probe(snaps, in, ProbeConfig{});
  CHECK(snaps == copy);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].delta != 0.0);
  CHECK(r.records[0].delta == r.records[1].delta);

  ProbeReport manual;
  manual.records = {{0, 0, 0, -1}, {1, 0, 0, 1}, {2, 0, 0, -1}, {3, 0, 0, -1}};
  CHECK(manual.first_half_negative_fraction() == 0.5);
}
