#include "xmod/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "xmod/report.hpp"
#include "xmod/snapshots.hpp"

namespace xmod {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.eta = eta;
  t.epochs = epochs;
  t.init_epochs = init_epochs;
  t.window_begin = window_begin;
  t.loss.tau = tau;
  t.loss.tau_ra = tau_ra;
  t.loss.lambda = lambda;
  t.loss.beta = beta;
  t.loss.svl = parse_svl(svl);
  t.loss.ra = parse_ra(ra);
  t.rank = rank;
  t.lora_scale = lora_scale;
  t.branch = parse_branch(branch);
  t.init_sigma = init_sigma;
  t.steps_per_epoch = steps_per_epoch;
  t.jitter_sigma = jitter_sigma;
  t.jitter_copies = jitter_copies;
  return t;
}

BenchmarkConfig RunConfig::benchmark_config() const {
  BenchmarkConfig b;
  b.ways = ways;
  b.shots = shots;
  b.queries = queries;
  b.tasks = tasks;
  b.seed = seed;
  if (mode == "finetune") b.mode = BenchmarkMode::FineTune;
  else if (mode == "zeroshot") b.mode = BenchmarkMode::ZeroShot;
  else throw Error(ErrorCode::InvalidArgument, "unknown mode '" + mode + "'");
  b.train = train_config();
  b.measure_gap = measure_gap;
  b.parallel = parallel;
  return b;
}

namespace {

enum class Section { Synth, Episode, Train, Theorem, Probe, Sweep };

std::vector<Section> sections_of(const std::string& command) {
  if (command == "gen-synth") return {Section::Synth};
  if (command == "verify-theorem") return {Section::Theorem};
  if (command == "probe") return {Section::Episode, Section::Train, Section::Probe};
  if (command == "sweep") return {Section::Episode, Section::Train, Section::Sweep};
  return {Section::Episode, Section::Train};
}

}  // namespace

std::string RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["data"] = data;
  j["out"] = out;
  if (!snapshots.empty()) j["snapshots"] = snapshots;
  for (Section s : sections_of(command)) {
    switch (s) {
      case Section::Synth:
        j["synth"] = {{"classes", synth.classes}, {"per_class", synth.per_class}, {"dim", synth.dim},
                      {"noise", synth.noise},     {"gap", synth.gap},             {"rotation", synth.rotation},
                      {"max_anchor_cos", synth.max_anchor_cos}, {"seed", synth.seed}};
        break;
      case Section::Episode:
        j["episode"] = {{"n", ways},       {"k", shots},           {"m", queries},
                        {"tasks", tasks},  {"seed", seed},         {"mode", mode},
                        {"measure_gap", measure_gap}, {"parallel", parallel}, {"task", task},
                        {"gap_on_episode", episode}};
        break;
      case Section::Train:
        j["train"] = {{"eta", eta},
                      {"epochs", epochs},
                      {"init_epochs", init_epochs},
                      {"window_begin", window_begin},
                      {"phase", phase},
                      {"lambda", lambda},
                      {"beta", beta},
                      {"tau", tau},
                      {"tau_ra", tau_ra},
                      {"svl", svl},
                      {"ra", ra},
                      {"rank", rank},
                      {"lora_scale", lora_scale},
                      {"branch", branch},
                      {"init_sigma", init_sigma},
                      {"steps_per_epoch", steps_per_epoch},
                      {"jitter_sigma", jitter_sigma},
                      {"jitter_copies", jitter_copies}};
        break;
      case Section::Theorem:
        j["theorem"] = {{"instances", theorem.instances}, {"classes", theorem.classes}, {"dim", theorem.dim},
                        {"eta", theorem.eta},             {"taus", theorem.taus},       {"seed", theorem.seed},
                        {"ratio_low", theorem.ratio_low}, {"ratio_high", theorem.ratio_high}};
        break;
      case Section::Probe:
        j["probe"] = {{"steps", probe.steps}, {"eta", probe.eta}, {"tau", probe.tau}, {"probe_tau", probe.probe_tau}};
        break;
      case Section::Sweep:
        j["sweep"] = {{"lambdas", lambdas}, {"betas", betas}, {"init_fractions", init_fractions}};
        break;
    }
  }
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  RunConfig c;
  c.command = j.at("command").get<std::string>();
  c.data = j.value("data", c.data);
  c.out = j.value("out", c.out);
  c.snapshots = j.value("snapshots", c.snapshots);
  if (j.contains("synth")) {
    const json& s = j["synth"];
    c.synth.classes = s.value("classes", c.synth.classes);
    c.synth.per_class = s.value("per_class", c.synth.per_class);
    c.synth.dim = s.value("dim", c.synth.dim);
    c.synth.noise = s.value("noise", c.synth.noise);
    c.synth.gap = s.value("gap", c.synth.gap);
    c.synth.rotation = s.value("rotation", c.synth.rotation);
    c.synth.max_anchor_cos = s.value("max_anchor_cos", c.synth.max_anchor_cos);
    c.synth.seed = s.value("seed", c.synth.seed);
  }
  if (j.contains("episode")) {
    const json& e = j["episode"];
    c.ways = e.value("n", c.ways);
    c.shots = e.value("k", c.shots);
    c.queries = e.value("m", c.queries);
    c.tasks = e.value("tasks", c.tasks);
    c.seed = e.value("seed", c.seed);
    c.mode = e.value("mode", c.mode);
    c.measure_gap = e.value("measure_gap", c.measure_gap);
    c.parallel = e.value("parallel", c.parallel);
    c.task = e.value("task", c.task);
    c.episode = e.value("gap_on_episode", c.episode);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    c.eta = t.value("eta", c.eta);
    c.epochs = t.value("epochs", c.epochs);
    c.init_epochs = t.value("init_epochs", c.init_epochs);
    c.window_begin = t.value("window_begin", c.window_begin);
    c.phase = t.value("phase", c.phase);
    c.lambda = t.value("lambda", c.lambda);
    c.beta = t.value("beta", c.beta);
    c.tau = t.value("tau", c.tau);
    c.tau_ra = t.value("tau_ra", c.tau_ra);
    c.svl = t.value("svl", c.svl);
    c.ra = t.value("ra", c.ra);
    c.rank = t.value("rank", c.rank);
    c.lora_scale = t.value("lora_scale", c.lora_scale);
    c.branch = t.value("branch", c.branch);
    c.init_sigma = t.value("init_sigma", c.init_sigma);
    c.steps_per_epoch = t.value("steps_per_epoch", c.steps_per_epoch);
    c.jitter_sigma = t.value("jitter_sigma", c.jitter_sigma);
    c.jitter_copies = t.value("jitter_copies", c.jitter_copies);
  }
  if (j.contains("theorem")) {
    const json& t = j["theorem"];
    c.theorem.instances = t.value("instances", c.theorem.instances);
    c.theorem.classes = t.value("classes", c.theorem.classes);
    c.theorem.dim = t.value("dim", c.theorem.dim);
    c.theorem.eta = t.value("eta", c.theorem.eta);
    c.theorem.taus = t.value("taus", c.theorem.taus);
    c.theorem.seed = t.value("seed", c.theorem.seed);
    c.theorem.ratio_low = t.value("ratio_low", c.theorem.ratio_low);
    c.theorem.ratio_high = t.value("ratio_high", c.theorem.ratio_high);
  }
  if (j.contains("probe")) {
    const json& p = j["probe"];
    c.probe.steps = p.value("steps", c.probe.steps);
    c.probe.eta = p.value("eta", c.probe.eta);
    c.probe.tau = p.value("tau", c.probe.tau);
    c.probe.probe_tau = p.value("probe_tau", c.probe.probe_tau);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    c.lambdas = s.value("lambdas", c.lambdas);
    c.betas = s.value("betas", c.betas);
    c.init_fractions = s.value("init_fractions", c.init_fractions);
  }
  return c;
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Options of one subcommand. Values land in `parsed`; `apply` copies the
/// explicitly given ones onto a base config (defaults or a --config file).
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <typename Get>
  CLI::Option* option(const std::string& flags, Get get, const std::string& help) {
    auto* o = app_->add_option(flags, get(parsed_), help)->capture_default_str();
    remember(o, get);
    return o;
  }

  template <typename Get>
  CLI::Option* flag(const std::string& flags, Get get, const std::string& help) {
    auto* o = app_->add_flag(flags, get(parsed_), help);
    remember(o, get);
    return o;
  }

  bool given(const std::string& name) const {
    const auto it = by_name_.find(name);
    return it != by_name_.end() && it->second->count() > 0;
  }

  void apply(RunConfig& dst) const {
    for (const auto& [opt, copy] : links_)
      if (opt->count() > 0) copy(dst, parsed_);
  }

  CLI::App* app() const { return app_; }

 private:
  template <typename Get>
  void remember(CLI::Option* o, Get get) {
    links_.emplace_back(o, [get](RunConfig& dst, const RunConfig& src) { get(dst) = get(const_cast<RunConfig&>(src)); });
    by_name_[o->get_name()] = o;
  }

  CLI::App* app_;
  RunConfig parsed_;
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&, const RunConfig&)>>> links_;
  std::map<std::string, CLI::Option*> by_name_;
};

#define XMOD_FIELD(expr) [](RunConfig& c) -> auto& { return c.expr; }

void add_paths(Binder& b, bool needs_data) {
  if (needs_data) b.option("--data", XMOD_FIELD(data), "dataset directory");
  b.option("--out", XMOD_FIELD(out), "output directory");
}

void add_episode_options(Binder& b) {
  b.option("--n", XMOD_FIELD(ways), "ways per episode");
  b.option("--k", XMOD_FIELD(shots), "shots per class");
  b.option("--m", XMOD_FIELD(queries), "queries per class");
  b.option("--seed", XMOD_FIELD(seed), "master seed");
  b.option("--mode", XMOD_FIELD(mode), "finetune or zeroshot")->check(CLI::IsMember({"finetune", "zeroshot"}));
}

void add_train_options(Binder& b) {
  b.option("--eta", XMOD_FIELD(eta), "adapter learning rate");
  b.option("--epochs", XMOD_FIELD(epochs), "epochs per episode (E)");
  b.option("--init-epochs", XMOD_FIELD(init_epochs), "auxiliary window end (default 3E/5)");
  b.option("--phase", XMOD_FIELD(phase), "auxiliary window variant")
      ->check(CLI::IsMember({"default", "no", "begin", "middle", "last", "all"}));
  b.option("--lambda", XMOD_FIELD(lambda), "weight of the anti-visual term (0.001 default on the text branch)");
  b.option("--beta", XMOD_FIELD(beta), "weight of the relation term");
  b.option("--tau", XMOD_FIELD(tau), "temperature");
  b.option("--tau-ra", XMOD_FIELD(tau_ra), "relation softmax temperature");
  b.option("--svl", XMOD_FIELD(svl), "anti-visual strategy")
      ->check(CLI::IsMember({"off", "ours", "neg-lv", "noise-proto"}));
  b.option("--ra", XMOD_FIELD(ra), "relation target")->check(CLI::IsMember({"off", "ours", "only-vision", "only-text"}));
  b.option("--rank", XMOD_FIELD(rank), "adapter rank");
  b.option("--lora-scale", XMOD_FIELD(lora_scale), "adapter scale");
  b.option("--branch", XMOD_FIELD(branch), "adapted branch")->check(CLI::IsMember({"visual", "text", "both"}));
  b.option("--init-sigma", XMOD_FIELD(init_sigma), "std of the down-projection init");
  b.option("--steps-per-epoch", XMOD_FIELD(steps_per_epoch), "gradient steps per epoch");
  b.option("--jitter-sigma", XMOD_FIELD(jitter_sigma), "support augmentation noise norm");
  b.option("--jitter-copies", XMOD_FIELD(jitter_copies), "augmented copies per support row");
}

void add_parallel(Binder& b) { b.option("--parallel", XMOD_FIELD(parallel), "worker threads (env XMOD_ALIGN_THREADS)"); }

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Binder> binder;
  bool needs_data = false;
};

/// Defaults that depend on other values, then the phase window.
void resolve(RunConfig& c, const Binder& b, bool from_file) {
  if (!b.given("--init-epochs") && (b.given("--epochs") || !from_file)) c.init_epochs = default_init_epochs(c.epochs);
  if (!b.given("--lambda") && c.branch == "text" && (b.given("--branch") || !from_file)) c.lambda = 0.001;
  if (!b.given("--parallel") && !from_file) {
    if (const char* env = std::getenv("XMOD_ALIGN_THREADS")) {
      try {
        c.parallel = std::max(1, std::stoi(env));
      } catch (const std::exception&) {
        throw UsageError("XMOD_ALIGN_THREADS must be an integer");
      }
    }
  }
  if (c.phase != "default") {
    TrainConfig t;
    t.epochs = c.epochs;
    t.init_epochs = c.init_epochs;
    t.window_begin = c.window_begin;
    t = disturb_phase_variant(t, parse_phase(c.phase));
    c.init_epochs = t.init_epochs;
    c.window_begin = t.window_begin;
  }
}

fs::path prepare_out(const RunConfig& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + c.out + ": " + ec.message());
  write_file(fs::path(c.out) / "run_config.json", c.to_json());
  return c.out;
}

EmbeddingDataset load_data(const RunConfig& c, std::ostream& err) {
  if (c.data.empty()) throw UsageError("--data is required");
  LoadedDataset loaded = load_dataset(c.data);
  for (const auto& w : loaded.warnings) err << "warning: " << w << "\n";
  return std::move(loaded.dataset);
}

int cmd_gen_synth(const RunConfig& c, std::ostream& out) {
  if (c.out.empty()) throw UsageError("--out is required");
  const EmbeddingDataset ds = gen_synthetic(c.synth);
  save_dataset(ds, c.out);
  write_file(fs::path(c.out) / "run_config.json", c.to_json());
  out << "wrote " << ds.count() << " rows, " << ds.classes() << " classes, d=" << ds.dim() << " to " << c.out << "\n";
  return 0;
}

int cmd_benchmark(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const EmbeddingDataset ds = load_data(c, err);
  const BenchmarkConfig b = c.benchmark_config();
  b.validate();
  const fs::path dir = prepare_out(c);
  const BenchmarkResult r = run_benchmark(ds, b);
  const std::string summary = format_benchmark_summary(r);
  write_file(dir / "summary.txt", summary);
  write_file(dir / "tasks.txt", format_benchmark_tasks(r));
  out << summary;
  return 0;
}

int cmd_verify_theorem(const RunConfig& c, std::ostream& out) {
  const fs::path dir = prepare_out(c);
  const TheoremSuiteResult r = verify_theorem(c.theorem);
  write_file(dir / "theorem.txt", format_theorem_report(r));
  out << "pairs=" << r.report.pairs.size() << " residual_failures=" << r.residual_failures
      << " positivity_failures=" << r.positivity_failures << " status=" << (r.ok() ? "pass" : "fail") << "\n";
  return r.ok() ? 0 : 4;
}

struct TrainedEpisode {
  Episode episode;
  FeatureMatrix text;
  TrainResult result;
};

TrainedEpisode train_task(const EmbeddingDataset& ds, const RunConfig& c, bool keep_snapshots) {
  const BenchmarkConfig b = c.benchmark_config();
  b.validate();
  if (c.task < 0) throw UsageError("--task must be >= 0");
  TrainedEpisode t;
  t.episode = benchmark_episode(ds, b, c.task);
  t.text = episode_text(ds, t.episode);
  TrainConfig train = b.train;
  train.seed = benchmark_train_seed(b, c.task);
  train.keep_snapshots = keep_snapshots;
  t.result = train_episode(t.episode, t.text, train);
  return t;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const EmbeddingDataset ds = load_data(c, err);
  const fs::path dir = prepare_out(c);
  const TrainedEpisode t = train_task(ds, c, true);
  save_snapshots({t.result.trajectory.snapshots, t.episode.support, t.episode.support_labels, t.text}, dir / "snapshots");
  write_file(dir / "trajectory.txt", format_trajectory(t.result.trajectory));
  const FeatureMatrix query = adapt_visual(t.result.adapter, t.episode.query);
  const FeatureMatrix prompts = adapt_text(t.result.adapter, t.text);
  const double acc = accuracy_percent(classify(query, prompts, c.tau), t.episode.query_labels);
  const DeltaCosTrace trace = delta_cos_trace(t.result.trajectory.snapshots, t.episode.support, t.episode.support_labels);
  std::string summary = "# train summary\ntask=" + std::to_string(c.task) + "\n";
  summary += "query_accuracy=" + std::to_string(acc) + "\n";
  summary += "final_vlm=" + std::to_string(t.result.trajectory.epochs.back().vlm) + "\n";
  summary += "negative_diff_class_fraction=" + std::to_string(trace.negative_diff_fraction) + "\n";
  summary += std::string("same_class_available=") + (trace.same_class_available ? "1" : "0") + "\n";
  write_file(dir / "summary.txt", summary);
  out << summary;
  return 0;
}

int cmd_probe(const RunConfig& c, std::ostream& out, std::ostream& err) {
  SnapshotSet set;
  if (!c.snapshots.empty()) {
    set = load_snapshots(c.snapshots);
  } else {
    const EmbeddingDataset ds = load_data(c, err);
    TrainedEpisode t = train_task(ds, c, true);
    set = {std::move(t.result.trajectory.snapshots), t.episode.support, t.episode.support_labels, t.text};
  }
  const fs::path dir = prepare_out(c);
  ProbeConfig p = c.probe;
  p.tau = c.tau;
  const EpisodeInputs inputs(set.support, set.labels, set.text);
  const ProbeReport r = visual_probe(set.snapshots, inputs, p);
  write_file(dir / "probe.txt", format_probe_report(r));
  out << "snapshots=" << r.records.size() << " first_half_negative_fraction=" << r.first_half_negative_fraction()
      << "\n";
  return 0;
}

int cmd_gap_shift(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const EmbeddingDataset ds = load_data(c, err);
  GapReport r;
  if (c.episode) {
    const BenchmarkConfig b = c.benchmark_config();
    b.validate();
    const Episode ep = benchmark_episode(ds, b, c.task);
    FeatureMatrix query = ep.query;
    FeatureMatrix prompts = episode_text(ds, ep);
    if (b.mode == BenchmarkMode::FineTune) {
      TrainConfig train = b.train;
      train.seed = benchmark_train_seed(b, c.task);
      const TrainResult t = train_episode(ep, prompts, train);
      query = adapt_visual(t.adapter, query);
      prompts = adapt_text(t.adapter, prompts);
    }
    const fs::path dir = prepare_out(c);
    r = gap_sweep(query, ep.query_labels, prompts, default_alpha_grid(), c.tau);
    write_file(dir / "gap.txt", format_gap_report(r));
  } else {
    const fs::path dir = prepare_out(c);
    r = gap_sweep(ds.visual, ds.labels, ds.text, default_alpha_grid(), c.tau);
    write_file(dir / "gap.txt", format_gap_report(r));
  }
  out << acc_gap_line(r.accuracy_at_zero, r.gap) << "\nbest_alpha=" << r.best_alpha << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const EmbeddingDataset ds = load_data(c, err);
  if (c.lambdas.empty() || c.betas.empty()) throw UsageError("sweep needs at least one lambda and one beta");
  const BenchmarkConfig base = c.benchmark_config();
  base.validate();
  std::vector<int> windows;
  if (c.init_fractions.empty()) {
    windows.push_back(base.train.init_epochs);
  } else {
    for (double f : c.init_fractions) {
      if (!(f >= 0.0 && f <= 1.0)) throw UsageError("init fractions must lie in [0, 1]");
      windows.push_back(static_cast<int>(std::floor(f * c.epochs)));
    }
  }
  const fs::path dir = prepare_out(c);
  std::vector<SweepCell> cells;
  for (int w : windows)
    for (double lambda : c.lambdas)
      for (double beta : c.betas) {
        BenchmarkConfig b = base;
        b.train.init_epochs = w;
        b.train.loss.lambda = lambda;
        b.train.loss.beta = beta;
        b.validate();
        cells.push_back({lambda, beta, w, run_benchmark(ds, b)});
        out << "lambda=" << lambda << " beta=" << beta << " init_epochs=" << w << " mean=" << cells.back().result.mean
            << "\n";
      }
  write_file(dir / "sweep.txt", format_sweep(cells));
  return 0;
}

int exit_code_for(const Error& e) {
  switch (family_of(e.code())) {
    case ErrorFamily::Config: return 2;
    case ErrorFamily::Data: return 3;
    case ErrorFamily::Numeric: return 4;
  }
  return 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot VLM fine-tuning with visual disturbance and relation alignment", "xmod-align"};
  app.require_subcommand(1);
  std::string config_path;

  std::map<std::string, Command> commands;
  auto add = [&](const std::string& name, const std::string& help, bool needs_data) -> Binder& {
    Command cmd;
    cmd.app = app.add_subcommand(name, help);
    cmd.app->add_option("--config", config_path, "resolved run_config.json to start from");
    cmd.binder = std::make_unique<Binder>(cmd.app);
    cmd.needs_data = needs_data;
    return *commands.emplace(name, std::move(cmd)).first->second.binder;
  };

  {
    Binder& b = add("gen-synth", "write a synthetic embedding dataset", false);
    b.option("--classes", XMOD_FIELD(synth.classes), "classes");
    b.option("--per-class", XMOD_FIELD(synth.per_class), "samples per class");
    b.option("--dim", XMOD_FIELD(synth.dim), "feature dimension");
    b.option("--noise", XMOD_FIELD(synth.noise), "intra-class noise norm");
    b.option("--gap", XMOD_FIELD(synth.gap), "modality offset norm");
    b.option("--rotation", XMOD_FIELD(synth.rotation), "visual rotation angle (rad)");
    b.option("--max-anchor-cos", XMOD_FIELD(synth.max_anchor_cos), "max pairwise text anchor cosine");
    b.option("--seed", XMOD_FIELD(synth.seed), "generator seed");
    add_paths(b, false);
  }
  {
    Binder& b = add("benchmark", "run N-way K-shot tasks and report mean accuracy", true);
    add_paths(b, true);
    add_episode_options(b);
    b.option("--tasks", XMOD_FIELD(tasks), "number of tasks");
    b.flag("--no-gap{false}", XMOD_FIELD(measure_gap), "skip the per-task Gap metric");
    add_train_options(b);
    add_parallel(b);
  }
  {
    Binder& b = add("train", "fine-tune one episode and store its snapshots", true);
    add_paths(b, true);
    add_episode_options(b);
    b.option("--task", XMOD_FIELD(task), "task index (same episode as in benchmark)");
    add_train_options(b);
  }
  {
    Binder& b = add("probe", "visual-learning probe over stored or fresh snapshots", true);
    add_paths(b, true);
    b.option("--snapshots", XMOD_FIELD(snapshots), "snapshots/ directory written by train");
    add_episode_options(b);
    b.option("--task", XMOD_FIELD(task), "task index when training in place");
    add_train_options(b);
    b.option("--probe-steps", XMOD_FIELD(probe.steps), "probe gradient steps");
    b.option("--probe-eta", XMOD_FIELD(probe.eta), "probe learning rate");
    b.option("--probe-tau", XMOD_FIELD(probe.probe_tau), "temperature of the probe's visual loss");
  }
  {
    Binder& b = add("gap-shift", "sweep the modality gap shift", true);
    add_paths(b, true);
    b.flag("--episode", XMOD_FIELD(episode), "sweep one (fine-tuned) episode's query set");
    add_episode_options(b);
    b.option("--task", XMOD_FIELD(task), "task index with --episode");
    add_train_options(b);
  }
  {
    Binder& b = add("verify-theorem", "check the cosine-change prediction on seeded instances", false);
    b.option("--instances", XMOD_FIELD(theorem.instances), "instances");
    b.option("--classes", XMOD_FIELD(theorem.classes), "classes per instance");
    b.option("--dim", XMOD_FIELD(theorem.dim), "feature dimension");
    b.option("--eta", XMOD_FIELD(theorem.eta), "raw-feature step size");
    b.option("--taus", XMOD_FIELD(theorem.taus), "temperatures, cycled over instances")->delimiter(',');
    b.option("--seed", XMOD_FIELD(theorem.seed), "seed");
    add_paths(b, false);
  }
  {
    Binder& b = add("sweep", "benchmark over a lambda x beta (x window) grid", true);
    add_paths(b, true);
    add_episode_options(b);
    b.option("--tasks", XMOD_FIELD(tasks), "number of tasks per cell");
    b.flag("--no-gap{false}", XMOD_FIELD(measure_gap), "skip the per-task Gap metric");
    add_train_options(b);
    add_parallel(b);
    b.option("--lambdas", XMOD_FIELD(lambdas), "lambda grid")->delimiter(',');
    b.option("--betas", XMOD_FIELD(betas), "beta grid")->delimiter(',');
    b.option("--init-fracs", XMOD_FIELD(init_fractions), "auxiliary window ends as fractions of E")->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  std::string name;
  const Command* cmd = nullptr;
  for (const auto& [n, c] : commands)
    if (c.app->parsed()) {
      name = n;
      cmd = &c;
    }

  try {
    RunConfig cfg;
    const bool from_file = !config_path.empty();
    if (from_file) {
      try {
        cfg = RunConfig::from_json(read_file(config_path));
      } catch (const nlohmann::json::exception& e) {
        throw UsageError(std::string("bad config file: ") + e.what());
      }
      if (cfg.command != name) throw UsageError("config file is for '" + cfg.command + "', not '" + name + "'");
    }
    cfg.command = name;
    cmd->binder->apply(cfg);
    resolve(cfg, *cmd->binder, from_file);

    if (name == "gen-synth") return cmd_gen_synth(cfg, out);
    if (name == "benchmark") return cmd_benchmark(cfg, out, err);
    if (name == "train") return cmd_train(cfg, out, err);
    if (name == "probe") return cmd_probe(cfg, out, err);
    if (name == "gap-shift") return cmd_gap_shift(cfg, out, err);
    if (name == "verify-theorem") return cmd_verify_theorem(cfg, out);
    if (name == "sweep") return cmd_sweep(cfg, out, err);
    throw UsageError("unknown command");
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace xmod
