#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "xmod/cli.hpp"
#include "xmod/dataset.hpp"
#include "xmod/snapshots.hpp"

using namespace xmod;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("xmod_cli_" + tag + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

struct Run {
  int code = 0;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "xmod-align");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const std::vector<std::string> kSmallSynth{"--classes", "8", "--per-class", "20", "--dim", "16"};
const std::vector<std::string> kFast{"--epochs", "20", "--tasks", "4"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("gen-synth is deterministic and needs --out") {
  TempDir d("gen");
  REQUIRE(cli(cat({"gen-synth", "--out", d / "a"}, kSmallSynth)).code == 0);
  REQUIRE(cli(cat({"gen-synth", "--out", d / "b"}, kSmallSynth)).code == 0);
  CHECK(read_file(d / "a/features.bin") == read_file(d / "b/features.bin"));
  CHECK(load_dataset(d / "a").dataset.classes() == 8);
  CHECK(fs::exists(d / "a/run_config.json"));

  const Run missing = cli({"gen-synth"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("--out") != std::string::npos);
  CHECK(cli({"gen-synth", "--bogus"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({}).code == 2);
}

TEST_CASE("error families map to exit codes") {
  TempDir d("codes");
  CHECK(cli({"benchmark", "--data", d / "missing", "--out", d / "o"}).code == 3);
  REQUIRE(cli(cat({"gen-synth", "--out", d / "ds"}, kSmallSynth)).code == 0);
  CHECK(cli(cat({"benchmark", "--data", d / "ds", "--out", d / "o", "--n", "20"}, kFast)).code == 3);
  CHECK(cli(cat({"benchmark", "--data", d / "ds", "--out", d / "o", "--tau", "-1"}, kFast)).code == 2);
}

TEST_CASE("benchmark phase no equals lambda = beta = 0") {
  TempDir d("phase");
  REQUIRE(cli(cat({"gen-synth", "--out", d / "ds"}, kSmallSynth)).code == 0);
  REQUIRE(cli(cat({"benchmark", "--data", d / "ds", "--out", d / "no", "--phase", "no"}, kFast)).code == 0);
  REQUIRE(cli(cat({"benchmark", "--data", d / "ds", "--out", d / "zero", "--lambda", "0", "--beta", "0"}, kFast))
              .code == 0);
  CHECK(read_file(d / "no/tasks.txt") == read_file(d / "zero/tasks.txt"));
}

TEST_CASE("config rerun reproduces the run") {
  TempDir d("rerun");
  REQUIRE(cli(cat({"gen-synth", "--out", d / "ds"}, kSmallSynth)).code == 0);
  REQUIRE(cli(cat({"benchmark", "--data", d / "ds", "--out", d / "a", "--beta", "0.5", "--phase", "middle"}, kFast))
              .code == 0);
  REQUIRE(cli({"benchmark", "--config", d / "a/run_config.json", "--out", d / "b"}).code == 0);
  CHECK(read_file(d / "a/tasks.txt") == read_file(d / "b/tasks.txt"));
  CHECK(read_file(d / "a/summary.txt") == read_file(d / "b/summary.txt"));

  const RunConfig a = RunConfig::from_json(read_file(d / "a/run_config.json"));
  CHECK(a.beta == 0.5);
  CHECK(a.window_begin == 4);
  CHECK(a.init_epochs == 16);
  CHECK(RunConfig::from_json(a.to_json()).to_json() == a.to_json());

  // explicit flags win over the file; a config for another command is rejected
  REQUIRE(cli({"benchmark", "--config", d / "a/run_config.json", "--out", d / "c", "--tasks", "2"}).code == 0);
  CHECK(RunConfig::from_json(read_file(d / "c/run_config.json")).tasks == 2);
  CHECK(cli({"train", "--config", d / "a/run_config.json", "--out", d / "t"}).code == 2);
}

TEST_CASE("text branch defaults lambda and init epochs") {
  TempDir d("defaults");
  REQUIRE(cli(cat({"gen-synth", "--out", d / "ds"}, kSmallSynth)).code == 0);
  REQUIRE(cli(cat({"benchmark", "--data", d / "ds", "--out", d / "t", "--branch", "text", "--no-gap"}, kFast))
              .code == 0);
  const RunConfig c = RunConfig::from_json(read_file(d / "t/run_config.json"));
  CHECK(c.lambda == 0.001);
  CHECK(c.init_epochs == 12);
  CHECK_FALSE(c.measure_gap);
}

TEST_CASE("verify-theorem with eta 0") {
  TempDir d("theorem");
  const Run r = cli({"verify-theorem", "--out", d / "t", "--eta", "0", "--instances", "6"});
  CHECK(r.code == 0);
  const std::string report = read_file(d / "t/theorem.txt");
  CHECK(report.find("residual_failures=0") != std::string::npos);
  CHECK(cli({"verify-theorem", "--out", d / "u", "--instances", "6"}).code == 0);
}

TEST_CASE("sweep with one cell equals benchmark") {
  TempDir d("sweep");
  REQUIRE(cli(cat({"gen-synth", "--out", d / "ds"}, kSmallSynth)).code == 0);
  REQUIRE(cli(cat({"benchmark", "--data", d / "ds", "--out", d / "b", "--lambda", "0.3", "--beta", "1"}, kFast))
              .code == 0);
  REQUIRE(cli(cat({"sweep", "--data", d / "ds", "--out", d / "s", "--lambdas", "0.3", "--betas", "1"}, kFast))
              .code == 0);
  const std::string sweep = read_file(d / "s/sweep.txt");
  std::istringstream summary(read_file(d / "b/summary.txt"));
  std::string line, mean;
  while (std::getline(summary, line))
    if (line.rfind("mean=", 0) == 0) mean = line.substr(5);
  REQUIRE_FALSE(mean.empty());
  CHECK(sweep.find(" " + mean + " ") != std::string::npos);
}

TEST_CASE("train writes snapshots that probe reads back") {
  TempDir d("train");
  REQUIRE(cli(cat({"gen-synth", "--out", d / "ds"}, kSmallSynth)).code == 0);
  REQUIRE(cli({"train", "--data", d / "ds", "--out", d / "tr", "--epochs", "12", "--task", "1"}).code == 0);
  const SnapshotSet set = load_snapshots(d / "tr/snapshots");
  CHECK(set.snapshots.size() == 13);
  CHECK(set.support.rows() == 5);

  REQUIRE(cli({"probe", "--snapshots", d / "tr/snapshots", "--out", d / "p1"}).code == 0);
  REQUIRE(cli({"probe", "--data", d / "ds", "--out", d / "p2", "--epochs", "12", "--task", "1"}).code == 0);
  CHECK(read_file(d / "p1/probe.txt") == read_file(d / "p2/probe.txt"));
}

TEST_CASE("gap-shift whole set and episode") {
  TempDir d("gap");
  REQUIRE(cli(cat({"gen-synth", "--out", d / "ds"}, kSmallSynth)).code == 0);
  const Run whole = cli({"gap-shift", "--data", d / "ds", "--out", d / "g"});
  CHECK(whole.code == 0);
  CHECK(whole.out.find("Acc / Gap:") != std::string::npos);
  CHECK(cli({"gap-shift", "--data", d / "ds", "--out", d / "e", "--episode", "--epochs", "10"}).code == 0);
  CHECK(fs::exists(d / "e/gap.txt"));
}

TEST_CASE("snapshot container round trip") {
  TempDir d("snap");
  SnapshotSet set;
  Rng rng(3);
  for (int i = 0; i < 3; ++i)
    set.snapshots.push_back(LowRankAdapter::initialized(6, 2, 0.5, Branch::Both, 0.1 * (i + 1), rng));
  set.support = Matrix::Random(4, 6);
  set.labels = {0, 1, 2, 1};
  set.text = Matrix::Random(3, 6);
  save_snapshots(set, d.path);
  CHECK(load_snapshots(d.path) == set);

  std::string bin = read_file(d / "snapshots.bin");
  bin[3] ^= 1;
  write_file(d / "snapshots.bin", bin);
  CHECK_THROWS_AS(load_snapshots(d.path), Error);
}
