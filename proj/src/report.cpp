#include "xmod/report.hpp"

#include <cmath>
#include <cstdio>

namespace xmod {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string num(double v) { return fmt("%.17g", v); }

std::string kv(const std::string& key, const std::string& value) { return key + "=" + value + "\n"; }

}  // namespace

std::string acc_gap_line(double accuracy, double gap) {
  return "Acc / Gap: " + fmt("%.1f", accuracy) + " / " + fmt("%.3f", gap);
}

std::string format_theorem_report(const TheoremSuiteResult& result) {
  const TheoremReport& r = result.report;
  std::string out = "# theorem report\n";
  out += kv("eta", num(r.eta));
  std::string taus;
  for (double t : r.taus) taus += (taus.empty() ? "" : ",") + num(t);
  out += kv("taus", taus);
  out += kv("pairs", std::to_string(r.pairs.size()));
  out += kv("residual_checks", std::to_string(result.residuals.size()));
  out += kv("residual_failures", std::to_string(result.residual_failures));
  out += kv("positivity_checks", std::to_string(result.positivity.size()));
  out += kv("positivity_failures", std::to_string(result.positivity_failures));
  out += kv("status", result.ok() ? "pass" : "fail");

  out += "\n[pairs]\n# instance i k same_class actual predicted residual\n";
  for (const auto& p : r.pairs) {
    out += std::to_string(p.instance) + " " + std::to_string(p.i) + " " + std::to_string(p.k) + " " +
           (p.same_class ? "1" : "0") + " " + num(p.delta_cos_actual) + " " + num(p.delta_cos_predicted) + " " +
           num(p.residual) + "\n";
  }
  out += "\n[residual_scaling]\n# instance tau r_eta r_half ratio status\n";
  for (const auto& c : result.residuals) {
    out += std::to_string(c.instance) + " " + num(c.tau) + " " + num(c.residual_full) + " " + num(c.residual_half) +
           " " + num(c.ratio) + " " + (c.skipped ? "skipped" : c.passed ? "pass" : "fail") + "\n";
  }
  out += "\n[same_class_positivity]\n# instance tau predicted actual status\n";
  for (const auto& c : result.positivity) {
    out += std::to_string(c.instance) + " " + num(c.tau) + " " + num(c.predicted) + " " + num(c.actual) + " " +
           (c.passed ? "pass" : "fail") + "\n";
  }
  return out;
}

std::string format_benchmark_summary(const BenchmarkResult& result) {
  std::string out = "# benchmark summary\n";
  out += kv("tasks", std::to_string(result.task_count));
  out += kv("accuracy", fmt("%.2f", result.mean) + " +- " + fmt("%.2f", result.ci95));
  out += kv("mean", num(result.mean));
  out += kv("ci95", num(result.ci95));
  if (!result.gaps.empty()) {
    out += kv("mean_gap", num(result.mean_gap));
    out += acc_gap_line(result.mean, result.mean_gap) + "\n";
  }
  return out;
}

std::string format_benchmark_tasks(const BenchmarkResult& result) {
  std::string out = result.gaps.empty() ? "# task accuracy\n" : "# task accuracy gap\n";
  for (std::size_t t = 0; t < result.accuracies.size(); ++t) {
    out += std::to_string(t) + " " + num(result.accuracies[t]);
    if (!result.gaps.empty()) out += " " + num(result.gaps[t]);
    out += "\n";
  }
  return out;
}

std::string format_gap_report(const GapReport& report) {
  std::string out = "# gap report\n";
  out += kv("gap", num(report.gap));
  out += kv("gap_norm", num(report.gap_norm));
  out += kv("best_alpha", num(report.best_alpha));
  out += kv("loss_at_zero", num(report.loss_at_zero));
  out += kv("accuracy_at_zero", num(report.accuracy_at_zero));
  out += kv("accuracy_at_best", num(report.accuracy_at_best));
  out += acc_gap_line(report.accuracy_at_zero, report.gap) + "\n";
  out += "\n[loss]\n# alpha loss\n";
  for (std::size_t i = 0; i < report.alphas.size(); ++i) out += num(report.alphas[i]) + " " + num(report.loss[i]) + "\n";
  out += "\n[accuracy]\n# alpha accuracy\n";
  for (std::size_t i = 0; i < report.alphas.size(); ++i)
    out += num(report.alphas[i]) + " " + num(report.accuracy[i]) + "\n";
  return out;
}

std::string format_probe_report(const ProbeReport& report) {
  std::size_t negative = 0;
  for (const auto& r : report.records) negative += r.delta < 0.0 ? 1 : 0;
  std::string out = "# probe report\n";
  out += kv("snapshots", std::to_string(report.records.size()));
  out += kv("negative_fraction",
            num(report.records.empty() ? 0.0 : static_cast<double>(negative) / static_cast<double>(report.records.size())));
  out += kv("first_half_negative_fraction", num(report.first_half_negative_fraction()));
  out += "\n[delta]\n# snapshot delta_vlm\n";
  for (const auto& r : report.records) out += std::to_string(r.snapshot) + " " + num(r.delta) + "\n";
  out += "\n[records]\n# snapshot vlm_before vlm_after\n";
  for (const auto& r : report.records)
    out += std::to_string(r.snapshot) + " " + num(r.vlm_before) + " " + num(r.vlm_after) + "\n";
  return out;
}

std::string format_trajectory(const TrainTrajectory& trajectory) {
  std::string out = "# epoch vlm anti_visual relation total support_accuracy delta_cos_same delta_cos_diff snapshot\n";
  for (const auto& e : trajectory.epochs) {
    out += std::to_string(e.epoch) + " " + num(e.vlm) + " " + num(e.anti_visual) + " " + num(e.relation) + " " +
           num(e.total) + " " + num(e.support_accuracy) + " " + num(e.delta_cos_same) + " " + num(e.delta_cos_diff) +
           " " + std::to_string(e.snapshot_id) + "\n";
  }
  return out;
}

std::string format_sweep(const std::vector<SweepCell>& cells) {
  std::string out = "# lambda beta init_epochs mean ci95 mean_gap\n";
  for (const auto& c : cells) {
    out += num(c.lambda) + " " + num(c.beta) + " " + std::to_string(c.init_epochs) + " " + num(c.result.mean) +
           " " + num(c.result.ci95) + " " + num(c.result.mean_gap) + "\n";
  }
  return out;
}

}  // namespace xmod
