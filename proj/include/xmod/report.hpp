#pragma once

#include <string>
#include <vector>

#include "xmod/benchmark.hpp"
#include "xmod/diagnostics.hpp"
#include "xmod/gradients.hpp"

namespace xmod {

// Structured-text reports. Every file is a block of key=value lines followed
// by optional [section]s whose first line is a '#'-prefixed column header and
// whose rows are whitespace-separated. Data columns use round-trip precision.

/// "Acc / Gap: 95.8 / 0.014"
std::string acc_gap_line(double accuracy, double gap);

std::string format_theorem_report(const TheoremSuiteResult& result);

std::string format_benchmark_summary(const BenchmarkResult& result);
std::string format_benchmark_tasks(const BenchmarkResult& result);

/// Two-column loss(alpha) and accuracy(alpha) sections plus the Acc / Gap line.
std::string format_gap_report(const GapReport& report);

std::string format_probe_report(const ProbeReport& report);

std::string format_trajectory(const TrainTrajectory& trajectory);

struct SweepCell {
  double lambda = 0.0;
  double beta = 0.0;
  int init_epochs = 0;
  BenchmarkResult result;
};

std::string format_sweep(const std::vector<SweepCell>& cells);

}  // namespace xmod
