#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "xmod/benchmark.hpp"
#include "xmod/dataset.hpp"
#include "xmod/diagnostics.hpp"
#include "xmod/gradients.hpp"

namespace xmod {

/// Everything a subcommand needs, fully resolved. Written as run_config.json
/// next to every output; `--config` on that file reproduces the run.
struct RunConfig {
  std::string command;
  std::string data;       ///< dataset directory
  std::string out;        ///< output directory
  std::string snapshots;  ///< probe input (a `train` output's snapshots/ dir)

  SyntheticConfig synth;

  // benchmark / episode
  int ways = 5;
  int shots = 1;
  int queries = 15;
  int tasks = 800;
  std::uint64_t seed = 0;
  std::string mode = "finetune";
  bool measure_gap = true;
  int parallel = 1;
  int task = 0;  ///< episode index for train / probe / gap-shift --episode

  // training
  double eta = 1e-2;
  int epochs = 250;
  int init_epochs = 150;
  int window_begin = 0;
  std::string phase = "default";
  double lambda = 0.1;
  double beta = 3.0;
  double tau = 0.01;
  double tau_ra = 1.0;
  std::string svl = "ours";
  std::string ra = "ours";
  int rank = 4;
  double lora_scale = 1.0;
  std::string branch = "visual";
  double init_sigma = 0.02;
  int steps_per_epoch = 1;
  double jitter_sigma = 0.0;
  int jitter_copies = 0;

  TheoremSuiteConfig theorem;
  ProbeConfig probe;
  bool episode = false;  ///< gap-shift on one fine-tuned episode instead of the whole set

  std::vector<double> lambdas{0.0, 0.01, 0.1, 0.5, 1.0};
  std::vector<double> betas{0.0, 0.5, 1.0, 3.0, 5.0};
  std::vector<double> init_fractions;  ///< empty: use init_epochs as given

  TrainConfig train_config() const;
  BenchmarkConfig benchmark_config() const;

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
};

/// Exit status: 0 ok, 2 usage/config, 3 data, 4 numeric (or a failed
/// invariant suite).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace xmod
