// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "xmod/benchmark.hpp"
#include "xmod/dataset.hpp"
#include "xmod/gradients.hpp"

using namespace xmod;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::vector<double> kTaus{1.0, 0.07, 0.01};

EpisodeInputs random_inputs(std::mt19937_64& rng, int ways, int shots, Index dim) {
  FeatureMatrix text = testing::random_unit_rows(ways, dim, rng);
  LabelList labels = testing::cyclic_labels(ways * shots, ways);
  FeatureMatrix support(ways * shots, dim);
  for (Index i = 0; i < support.rows(); ++i) {
    Vector v = text.row(labels[static_cast<std::size_t>(i)]).transpose() +
               0.6 * testing::random_matrix(dim, 1, rng);
    support.row(i) = v.normalized().transpose();
  }
  return EpisodeInputs(support, labels, text);
}

struct LossCase {
  std::string name;
  LossKind kind;
  SvlStrategy svl;
  RaStrategy ra;
};

// 1. adapter-parameter gradients of every loss and strategy vs central differences
Outcome criterion_1() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::vector<LossCase> cases{
      {"vlm", LossKind::Vlm, SvlStrategy::ClassShuffle, RaStrategy::Fused},
      {"visual", LossKind::Visual, SvlStrategy::ClassShuffle, RaStrategy::Fused},
      {"ad/class_shuffle", LossKind::AntiVisual, SvlStrategy::ClassShuffle, RaStrategy::Fused},
      {"ad/neg_lv", LossKind::AntiVisual, SvlStrategy::NegLv, RaStrategy::Fused},
      {"ad/noise_proto", LossKind::AntiVisual, SvlStrategy::NoiseProto, RaStrategy::Fused},
      {"ra/fused", LossKind::Relation, SvlStrategy::ClassShuffle, RaStrategy::Fused},
      {"ra/only_vision", LossKind::Relation, SvlStrategy::ClassShuffle, RaStrategy::OnlyVision},
      {"ra/only_text", LossKind::Relation, SvlStrategy::ClassShuffle, RaStrategy::OnlyText},
  };
  const std::vector<Branch> branches{Branch::Visual, Branch::Text, Branch::Both};
  double worst = 0.0;
  int checked = 0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    std::mt19937_64 rng(1000 + c);
    double worst_case = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
      const int ways = 2 + inst % 4;
      const Index dim = 4 + (inst * 37) % 61;
      const Index rank = std::min<Index>(4, dim);
      const EpisodeInputs in = random_inputs(rng, ways, 1 + inst % 2, dim);
      const Branch branch = branches[static_cast<std::size_t>(inst) % branches.size()];
      Rng init(static_cast<std::uint64_t>(inst));
      LowRankAdapter adapter = LowRankAdapter::initialized(dim, rank, 1.0, branch, 0.3, init);
      adapter.up = testing::random_matrix(dim, rank, rng, 0.3);

      LossConfig cfg;
      cfg.tau = kTaus[static_cast<std::size_t>(inst) % kTaus.size()];
      cfg.svl = cases[c].svl;
      cfg.ra = cases[c].ra;
      Rng aux(static_cast<std::uint64_t>(inst) * 31 + c);
      StepContext ctx = make_step_context(adapter, in, cfg.svl, cfg.ra, PhaseState{3, 10, 6, 0}, aux);
      ctx.visual_weights = class_prototypes(adapt_visual(adapter, in.support), in.labels, ways);

      const auto g = analytic_grads(cases[c].kind, adapter, in, ctx, cfg);
      const auto res = check_gradient(
          [&](const Vector& p) {
            LowRankAdapter a = adapter;
            a.set_parameters(p);
            return loss_value(cases[c].kind, a, in, ctx, cfg);
          },
          g.grad.flatten(), adapter.parameters(), 1e-6);
      worst_case = std::max(worst_case, res.max_rel_err);
      ++checked;
    }
    o.require(worst_case < 1e-5, cases[c].name + " max rel err " + std::to_string(worst_case));
    worst = std::max(worst, worst_case);
  }
  const double secs = seconds_since(t0);
  o.require(secs < 30.0, "runtime " + std::to_string(secs) + " s");
  o.detail << checked << " instances over " << cases.size() << " losses, max rel err " << worst << ", " << secs
           << " s";
  return o;
}

// 2. closed-form feature gradient and second-order residual scaling
Outcome criterion_2(const TheoremSuiteResult& suite) {
  Outcome o;
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const int c = 2 + inst % 4;
    const Index d = 4 + (inst * 13) % 61;
    const double tau = kTaus[static_cast<std::size_t>(inst) % kTaus.size()];
    const FeatureMatrix t = testing::random_unit_rows(c, d, rng);
    const Vector f = testing::random_unit_rows(1, d, rng).row(0).transpose();
    const int label = inst % c;
    const Vector analytic = grad_vlm_wrt_feature(f, t, label, tau);
    const auto res = check_gradient(
        [&](const Vector& p) { return vlm_loss(p.transpose(), t, {label}, tau).loss; }, analytic, f, 1e-5 * tau);
    worst = std::max(worst, res.max_rel_err);
  }
  o.require(worst < 1e-6, "closed form max rel err " + std::to_string(worst));

  int instances = 0, skipped = 0;
  double lo = 1e300, hi = -1e300;
  std::vector<int> per_instance;
  for (const auto& r : suite.residuals) {
    if (r.skipped) {
      ++skipped;
      continue;
    }
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
    per_instance.push_back(r.instance);
  }
  std::sort(per_instance.begin(), per_instance.end());
  instances = static_cast<int>(std::unique(per_instance.begin(), per_instance.end()) - per_instance.begin());
  o.require(suite.residual_failures == 0, std::to_string(suite.residual_failures) + " residual ratios out of range");
  o.require(instances == 50, std::to_string(instances) + " instances with measurable residuals");
  o.detail << "closed form max rel err " << worst << "; " << suite.residuals.size() << " residual checks over "
           << instances << " instances, ratio in [" << lo << ", " << hi << "], skipped " << skipped;
  return o;
}

// 3. same-class positivity
Outcome criterion_3(const TheoremSuiteResult& suite) {
  Outcome o;
  double min_pred = 1e300;
  for (const auto& p : suite.positivity) min_pred = std::min(min_pred, p.predicted);
  o.require(suite.positivity.size() == 50, std::to_string(suite.positivity.size()) + " instances");
  o.require(suite.positivity_failures == 0, std::to_string(suite.positivity_failures) + " non-positive");
  o.require(min_pred > 0.0, "min predicted " + std::to_string(min_pred));
  o.detail << suite.positivity.size() << " instances, min predicted delta cos " << min_pred;
  return o;
}

// 4. loss identities
Outcome criterion_4() {
  Outcome o;
  std::mt19937_64 rng(4);
  double ra_worst = 0.0, fuse_worst = 0.0, total_worst = 0.0, logc_worst = 0.0;
  for (int inst = 0; inst < 50; ++inst) {
    const int c = 2 + inst % 4;
    const Index n = c * (1 + inst % 3);
    const Index d = 4 + inst % 30;
    const FeatureMatrix f = testing::random_unit_rows(n, d, rng);
    const FeatureMatrix t = testing::random_unit_rows(c, d, rng);
    const LabelList labels = testing::cyclic_labels(n, c);
    const Matrix a = f * f.transpose();
    for (double tau_ra : {1.0, 0.1, 0.01}) ra_worst = std::max(ra_worst, std::abs(ra_loss(a, a, tau_ra)));

    const Matrix tg = t * t.transpose();
    const int e_total = 10 + inst;
    const Matrix at_start = fuse_matrix(a, tg, labels, PhaseState{0, e_total, e_total, 0});
    const Matrix at_end = fuse_matrix(a, tg, labels, PhaseState{e_total, e_total, e_total, 0});
    Matrix expanded(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) expanded(i, j) = tg(labels[static_cast<std::size_t>(i)], labels[static_cast<std::size_t>(j)]);
    fuse_worst = std::max({fuse_worst, (at_start - a).cwiseAbs().maxCoeff(), (at_end - expanded).cwiseAbs().maxCoeff()});

    const LossComponents comp{0.3 + inst, 1.7, 0.9};
    const PhaseState late{6 + inst % 4, 10, 6, 0};
    LossConfig base;
    const double ref = total_loss(comp, base, late).total;
    for (double lambda : {0.0, 0.5, 7.0})
      for (double beta : {0.0, 0.5, 3.0, 11.0}) {
        LossConfig cfg = base;
        cfg.lambda = lambda;
        cfg.beta = beta;
        total_worst = std::max(total_worst, std::abs(total_loss(comp, cfg, late).total - ref));
      }

    FeatureMatrix same(n, d);
    for (Index i = 0; i < n; ++i) same.row(i) = f.row(0);
    Rng draw(static_cast<std::uint64_t>(inst));
    const double tau = kTaus[static_cast<std::size_t>(inst) % kTaus.size()];
    logc_worst = std::max(logc_worst, std::abs(anti_visual_loss(same, labels, SvlStrategy::ClassShuffle, c, draw, tau) -
                                               std::log(static_cast<double>(c))));
  }
  o.require(ra_worst <= 1e-12, "ra_loss(A,A) " + std::to_string(ra_worst));
  o.require(fuse_worst == 0.0, "fuse endpoints off by " + std::to_string(fuse_worst));
  o.require(total_worst == 0.0, "total_loss depends on lambda/beta after the window");
  o.require(logc_worst <= 1e-12, "anti-visual vs log C " + std::to_string(logc_worst));
  o.detail << "ra(A,A) " << ra_worst << ", fuse endpoints " << fuse_worst << ", late total spread " << total_worst
           << ", |L_ad - log C| " << logc_worst;
  return o;
}

// 5. gap shift
Outcome criterion_5() {
  Outcome o;
  std::mt19937_64 rng(5);
  double identity = 0.0, min_gap = 1e300;
  for (int inst = 0; inst < 40; ++inst) {
    const int c = 2 + inst % 6;
    const Index n = c * 3;
    const Index d = 4 + inst % 20;
    const FeatureMatrix v = testing::random_unit_rows(n, d, rng);
    const FeatureMatrix t = testing::random_unit_rows(c, d, rng);
    const LabelList labels = testing::cyclic_labels(n, c);
    FeatureMatrix expanded(n, d);
    for (Index i = 0; i < n; ++i) expanded.row(i) = t.row(labels[static_cast<std::size_t>(i)]);
    const ShiftedPair s = gap_shift(v, expanded, 0.0);
    identity = std::max({identity, (s.visual - v).cwiseAbs().maxCoeff(), (s.text - expanded).cwiseAbs().maxCoeff()});
    const GapReport r = gap_sweep(v, labels, t, default_alpha_grid(), kTaus[static_cast<std::size_t>(inst) % 3]);
    min_gap = std::min(min_gap, r.gap);
  }
  o.require(identity <= 1e-12, "alpha=0 moved rows by " + std::to_string(identity));
  o.require(min_gap >= 0.0, "negative Gap " + std::to_string(min_gap));

  SyntheticConfig aligned;
  aligned.noise = 0.0;
  aligned.gap = 0.0;
  aligned.rotation = 0.0;
  const EmbeddingDataset a = gen_synthetic(aligned);
  const GapReport ra = gap_sweep(a.visual, a.labels, a.text, default_alpha_grid(), 0.01);
  o.require(ra.gap < 1e-10 && ra.best_alpha == 0.0, "aligned set Gap " + std::to_string(ra.gap));

  SyntheticConfig offset;
  offset.noise = 0.05;
  offset.gap = 1.5;
  offset.rotation = 0.0;
  const EmbeddingDataset b = gen_synthetic(offset);
  const GapReport rb = gap_sweep(b.visual, b.labels, b.text, default_alpha_grid(), 0.01);
  o.require(rb.gap > 0.0, "offset set Gap not positive");
  o.require(rb.accuracy_at_best >= rb.accuracy_at_zero, "offset set acc(alpha*) < acc(0)");
  o.detail << "alpha=0 identity " << identity << ", min Gap " << min_gap << "; aligned Gap " << ra.gap
           << " alpha* " << ra.best_alpha << "; offset Gap " << rb.gap << " alpha* " << rb.best_alpha << " acc "
           << rb.accuracy_at_zero << " -> " << rb.accuracy_at_best;
  return o;
}

BenchmarkConfig default_benchmark(std::uint64_t seed) {
  BenchmarkConfig b;
  b.tasks = 100;
  b.seed = seed;
  b.train.init_epochs = default_init_epochs(b.train.epochs);
  return b;
}

EmbeddingDataset default_dataset(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.seed = seed;
  return gen_synthetic(cfg);
}

// 6 + 7. method vs baseline, begin vs last
void criteria_6_7(Outcome& six, Outcome& seven) {
  const auto t0 = Clock::now();
  int acc_wins = 0, gap_wins = 0, phase_wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const EmbeddingDataset ds = default_dataset(seed);
    const BenchmarkConfig method = default_benchmark(seed);
    BenchmarkConfig baseline = method;
    baseline.train.loss.lambda = 0.0;
    baseline.train.loss.beta = 0.0;
    const BenchmarkResult m = run_benchmark(ds, method);
    const BenchmarkResult b = run_benchmark(ds, baseline);
    acc_wins += m.mean > b.mean;
    gap_wins += m.mean_gap < b.mean_gap;
    six.detail << "seed " << seed << ": acc " << m.mean << " vs " << b.mean << ", Gap " << m.mean_gap << " vs "
               << b.mean_gap << "; ";

    BenchmarkConfig begin = method, last = method;
    begin.measure_gap = last.measure_gap = false;
    begin.train = disturb_phase_variant(method.train, PhaseMode::Begin);
    last.train = disturb_phase_variant(method.train, PhaseMode::Last);
    const double acc_begin = run_benchmark(ds, begin).mean;
    const double acc_last = run_benchmark(ds, last).mean;
    phase_wins += acc_begin >= acc_last;
    seven.detail << "seed " << seed << ": begin " << acc_begin << " last " << acc_last << "; ";
  }
  const double secs = seconds_since(t0);
  six.require(acc_wins >= 4, "accuracy wins " + std::to_string(acc_wins) + "/5");
  six.require(gap_wins >= 4, "Gap wins " + std::to_string(gap_wins) + "/5");
  six.require(secs < 600.0, "runtime " + std::to_string(secs) + " s");
  six.detail << "accuracy wins " << acc_wins << "/5, Gap wins " << gap_wins << "/5, " << secs << " s (with 7)";
  seven.require(phase_wins >= 4, "begin >= last on " + std::to_string(phase_wins) + "/5");
  seven.detail << "begin >= last on " << phase_wins << "/5";
}

// 8. visual probe, pooled over the first 20 tasks of the default benchmark
Outcome criterion_8() {
  Outcome o;
  SyntheticConfig synth;
  const EmbeddingDataset ds = gen_synthetic(synth);
  BenchmarkConfig b = default_benchmark(0);
  int negative = 0, total = 0;
  const int tasks = 20;
  for (int task = 0; task < tasks; ++task) {
    const Episode ep = benchmark_episode(ds, b, task);
    const FeatureMatrix text = episode_text(ds, ep);
    TrainConfig train = b.train;
    train.seed = benchmark_train_seed(b, task);
    train.keep_snapshots = true;
    const TrainResult r = train_episode(ep, text, train);
    ProbeConfig probe;
    probe.tau = train.loss.tau;
    const ProbeReport report =
        visual_probe(r.trajectory.snapshots, EpisodeInputs(ep.support, ep.support_labels, text), probe);
    const std::size_t half = report.records.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      negative += report.records[i].delta < 0.0;
      ++total;
    }
  }
  const double frac = static_cast<double>(negative) / total;
  o.require(frac >= 0.6, "fraction " + std::to_string(frac));
  o.detail << negative << "/" << total << " first-half snapshots with dL_vlm < 0 (" << frac << ") over " << tasks
           << " tasks";
  return o;
}

// 9. determinism, ci95, data round trip
Outcome criterion_9() {
  Outcome o;
  const EmbeddingDataset ds = default_dataset(9);
  BenchmarkConfig serial = default_benchmark(9);
  serial.tasks = 40;
  BenchmarkConfig parallel = serial;
  parallel.parallel = 8;
  const BenchmarkResult a = run_benchmark(ds, serial);
  const BenchmarkResult b = run_benchmark(ds, parallel);
  o.require(a == b, "serial and parallel results differ");

  long double sum = 0.0L, sq = 0.0L;
  for (double x : a.accuracies) sum += x;
  const long double mean = sum / a.accuracies.size();
  for (double x : a.accuracies) sq += (x - mean) * (x - mean);
  const double expected = static_cast<double>(1.96L * std::sqrt(sq / a.accuracies.size()) /
                                              std::sqrt(static_cast<long double>(a.accuracies.size())));
  const double ci_err = std::abs(a.ci95 - expected);
  o.require(ci_err <= 1e-12, "ci95 off by " + std::to_string(ci_err));

  const fs::path dir = fs::temp_directory_path() / ("xmod_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  save_dataset(ds, dir);
  const LoadedDataset loaded = load_dataset(dir);
  fs::remove_all(dir);
  o.require(loaded.dataset == quantize(ds), "load(save(ds)) != quantize(ds)");
  o.require(loaded.warnings.empty(), "round trip produced warnings");
  o.detail << "serial == parallel(8) over " << a.task_count << " tasks, ci95 err " << ci_err
           << ", round trip exact";
  return o;
}

bool report(int n, Outcome& o) {
  std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", n, o.detail.str().c_str());
  std::fflush(stdout);
  return o.pass;
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    Outcome o;
    o.require(false, std::string("exception: ") + e.what());
    return o;
  }
}

}  // namespace

int main() {
  bool ok = true;
  Outcome c1 = guarded(criterion_1);
  ok &= report(1, c1);

  TheoremSuiteResult suite;
  std::string suite_error;
  try {
    suite = verify_theorem(TheoremSuiteConfig{});
  } catch (const std::exception& e) {
    suite_error = e.what();
  }
  auto with_suite = [&](auto f) {
    if (!suite_error.empty()) {
      Outcome o;
      o.require(false, "theorem suite threw: " + suite_error);
      return o;
    }
    return guarded([&] { return f(suite); });
  };
  Outcome c2 = with_suite(criterion_2);
  ok &= report(2, c2);
  Outcome c3 = with_suite(criterion_3);
  ok &= report(3, c3);
  Outcome c4 = guarded(criterion_4);
  ok &= report(4, c4);
  Outcome c5 = guarded(criterion_5);
  ok &= report(5, c5);

  Outcome c6, c7;
  try {
    criteria_6_7(c6, c7);
  } catch (const std::exception& e) {
    c6.require(false, std::string("exception: ") + e.what());
    c7.require(false, std::string("exception: ") + e.what());
  }
  ok &= report(6, c6);
  ok &= report(7, c7);
  Outcome c8 = guarded(criterion_8);
  ok &= report(8, c8);
  Outcome c9 = guarded(criterion_9);
  ok &= report(9, c9);
  return ok ? 0 : 1;
}
