#include "xmod/trainer.hpp"

#include <cmath>
#include <limits>

namespace xmod {

const char* to_string(PhaseMode m) {
  switch (m) {
    case PhaseMode::Default: return "default";
    case PhaseMode::No: return "no";
    case PhaseMode::Begin: return "begin";
    case PhaseMode::Middle: return "middle";
    case PhaseMode::Last: return "last";
    case PhaseMode::All: return "all";
  }
  return "?";
}

PhaseMode parse_phase(const std::string& s) {
  if (s == "default") return PhaseMode::Default;
  if (s == "no") return PhaseMode::No;
  if (s == "begin") return PhaseMode::Begin;
  if (s == "middle") return PhaseMode::Middle;
  if (s == "last") return PhaseMode::Last;
  if (s == "all") return PhaseMode::All;
  throw Error(ErrorCode::InvalidArgument, "unknown phase '" + s + "'");
}

void TrainConfig::validate() const {
  loss.validate();
  if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (epochs <= 0) throw Error(ErrorCode::InvalidArgument, "epochs must be positive");
  if (init_epochs < 0 || init_epochs > epochs) throw Error(ErrorCode::InvalidArgument, "init epochs must lie in [0, E]");
  if (window_begin < 0 || window_begin > epochs) throw Error(ErrorCode::InvalidArgument, "window start outside [0, E]");
  if (rank < 1) throw Error(ErrorCode::InvalidArgument, "rank must be >= 1");
  if (steps_per_epoch < 1) throw Error(ErrorCode::InvalidArgument, "steps per epoch must be >= 1");
  if (!(jitter_sigma >= 0.0) || jitter_copies < 0) throw Error(ErrorCode::InvalidArgument, "bad jitter settings");
  if (!(init_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "init sigma must be >= 0");
}

PhaseState TrainConfig::phase_at(int epoch) const {
  return PhaseState{epoch, epochs, init_epochs, window_begin};
}

TrainConfig disturb_phase_variant(TrainConfig config, PhaseMode mode) {
  const int e = config.epochs;
  switch (mode) {
    case PhaseMode::Default:
      break;
    case PhaseMode::No:
      config.window_begin = 0;
      config.init_epochs = 0;
      break;
    case PhaseMode::Begin:
      config.window_begin = 0;
      config.init_epochs = 3 * e / 5;
      break;
    case PhaseMode::Middle:
      config.window_begin = e / 5;
      config.init_epochs = 4 * e / 5;
      break;
    case PhaseMode::Last:
      config.window_begin = 2 * e / 5;
      config.init_epochs = e;
      break;
    case PhaseMode::All:
      config.window_begin = 0;
      config.init_epochs = e;
      break;
  }
  return config;
}

EpisodeInputs::EpisodeInputs(FeatureMatrix support_rows, LabelList support_labels, FeatureMatrix text_rows)
    : support(std::move(support_rows)), labels(std::move(support_labels)), text(std::move(text_rows)) {
  detail::require_same_dim(support.cols(), text.cols(), "episode feature dimension");
  detail::check_labels(labels, support.rows(), text.rows());
  anchor = gram_matrix(support);
}

FeatureMatrix adapt_visual(const LowRankAdapter& adapter, const FeatureMatrix& rows) {
  return adapter.adapts_visual() ? apply_adapter(adapter, rows) : rows;
}

FeatureMatrix adapt_text(const LowRankAdapter& adapter, const FeatureMatrix& rows) {
  return adapter.adapts_text() ? apply_adapter(adapter, rows) : rows;
}

StepContext make_step_context(const LowRankAdapter& adapter, const EpisodeInputs& inputs, SvlStrategy svl,
                              RaStrategy ra, const PhaseState& phase, Rng& aux) {
  StepContext ctx;
  ctx.phase = phase;
  if (svl == SvlStrategy::Off && ra == RaStrategy::Off) return ctx;
  const FeatureMatrix support = adapt_visual(adapter, inputs.support);
  if (svl != SvlStrategy::Off) {
    ctx.draw = draw_anti_visual(svl, support, inputs.labels, inputs.num_classes(), aux);
  }
  if (ra != RaStrategy::Off) {
    const SimilarityMatrix text_gram = gram_matrix(adapt_text(adapter, inputs.text));
    ctx.relation_target = ra_target(ra, inputs.anchor, text_gram, inputs.labels, phase);
  }
  return ctx;
}

namespace {

struct Forward {
  AdapterForward visual;
  AdapterForward text;
  const FeatureMatrix* support = nullptr;
  const FeatureMatrix* prompts = nullptr;
};

Forward forward(const LowRankAdapter& adapter, const EpisodeInputs& inputs) {
  Forward f;
  if (adapter.adapts_visual()) {
    f.visual = adapter_forward(adapter, inputs.support);
    f.support = &f.visual.output;
  } else {
    f.support = &inputs.support;
  }
  if (adapter.adapts_text()) {
    f.text = adapter_forward(adapter, inputs.text);
    f.prompts = &f.text.output;
  } else {
    f.prompts = &inputs.text;
  }
  return f;
}

// Feature-space gradients of one term, scaled by `weight`, accumulated.
double accumulate_term(LossKind kind, const Forward& fwd, const EpisodeInputs& inputs, const StepContext& ctx,
                       const LossConfig& config, double weight, Matrix& d_support, Matrix& d_text) {
  FeatureGrad g;
  switch (kind) {
    case LossKind::Vlm:
      g = vlm_loss_grad(*fwd.support, *fwd.prompts, inputs.labels, config.tau);
      d_text += weight * g.d_weights;
      break;
    case LossKind::Visual:
      g = visual_loss_grad(*fwd.support, ctx.visual_weights, inputs.labels, config.tau);
      break;
    case LossKind::AntiVisual:
      g = anti_visual_loss_grad(*fwd.support, inputs.labels, ctx.draw, config.tau);
      break;
    case LossKind::Relation:
      g = ra_loss_grad(*fwd.support, ctx.relation_target, config.tau_ra);
      break;
  }
  d_support += weight * g.d_features;
  return g.loss;
}

AdapterGrad backward(const LowRankAdapter& adapter, const EpisodeInputs& inputs, const Forward& fwd,
                     const Matrix& d_support, const Matrix& d_text) {
  AdapterGrad grad = AdapterGrad::zeros_like(adapter);
  if (adapter.adapts_visual()) adapter_backward(adapter, inputs.support, fwd.visual, d_support, grad);
  if (adapter.adapts_text()) adapter_backward(adapter, inputs.text, fwd.text, d_text, grad);
  if (!grad.all_finite()) throw Error(ErrorCode::NonFiniteGradient, "adapter gradient has NaN or Inf entries");
  return grad;
}

bool term_enabled(LossKind kind, const StepContext& ctx) {
  switch (kind) {
    case LossKind::Vlm: return true;
    case LossKind::Visual: return ctx.visual_weights.size() > 0;
    case LossKind::AntiVisual: return ctx.draw.strategy != SvlStrategy::Off;
    case LossKind::Relation: return ctx.relation_target.size() > 0;
  }
  return false;
}

}  // namespace

LossAndGrad analytic_grads(LossKind kind, const LowRankAdapter& adapter, const EpisodeInputs& inputs,
                           const StepContext& context, const LossConfig& config) {
  if (!term_enabled(kind, context)) {
    throw Error(ErrorCode::InvalidArgument, "step context carries no draw/target for the requested loss");
  }
  const Forward fwd = forward(adapter, inputs);
  Matrix d_support = Matrix::Zero(fwd.support->rows(), fwd.support->cols());
  Matrix d_text = Matrix::Zero(fwd.prompts->rows(), fwd.prompts->cols());
  LossAndGrad out;
  out.loss = accumulate_term(kind, fwd, inputs, context, config, 1.0, d_support, d_text);
  out.grad = backward(adapter, inputs, fwd, d_support, d_text);
  return out;
}

double loss_value(LossKind kind, const LowRankAdapter& adapter, const EpisodeInputs& inputs,
                  const StepContext& context, const LossConfig& config) {
  const FeatureMatrix support = adapt_visual(adapter, inputs.support);
  switch (kind) {
    case LossKind::Vlm:
      return vlm_loss(support, adapt_text(adapter, inputs.text), inputs.labels, config.tau).loss;
    case LossKind::Visual:
      return visual_loss(support, context.visual_weights, inputs.labels, config.tau);
    case LossKind::AntiVisual:
      return anti_visual_loss(support, inputs.labels, context.draw, config.tau);
    case LossKind::Relation:
      return ra_loss(gram_matrix(support), context.relation_target, config.tau_ra);
  }
  return 0.0;
}

ObjectiveResult evaluate_objective(const LowRankAdapter& adapter, const EpisodeInputs& inputs,
                                   const StepContext& context, const LossConfig& config) {
  const Forward fwd = forward(adapter, inputs);
  Matrix d_support = Matrix::Zero(fwd.support->rows(), fwd.support->cols());
  Matrix d_text = Matrix::Zero(fwd.prompts->rows(), fwd.prompts->cols());
  const bool active = context.phase.auxiliary_active();

  LossComponents parts;
  parts.vlm = accumulate_term(LossKind::Vlm, fwd, inputs, context, config, 1.0, d_support, d_text);
  if (active && config.lambda > 0.0 && term_enabled(LossKind::AntiVisual, context)) {
    parts.anti_visual =
        accumulate_term(LossKind::AntiVisual, fwd, inputs, context, config, config.lambda, d_support, d_text);
  }
  if (active && config.beta > 0.0 && term_enabled(LossKind::Relation, context)) {
    parts.relation =
        accumulate_term(LossKind::Relation, fwd, inputs, context, config, config.beta, d_support, d_text);
  }
  ObjectiveResult out;
  out.breakdown = total_loss(parts, config, context.phase);
  if (!std::isfinite(out.breakdown.total)) throw Error(ErrorCode::NonFiniteLoss, "objective is not finite");
  out.grad = backward(adapter, inputs, fwd, d_support, d_text);
  return out;
}

double objective_value(const LowRankAdapter& adapter, const EpisodeInputs& inputs, const StepContext& context,
                       const LossConfig& config) {
  const bool active = context.phase.auxiliary_active();
  LossComponents parts;
  parts.vlm = loss_value(LossKind::Vlm, adapter, inputs, context, config);
  if (active && config.lambda > 0.0 && term_enabled(LossKind::AntiVisual, context)) {
    parts.anti_visual = loss_value(LossKind::AntiVisual, adapter, inputs, context, config);
  }
  if (active && config.beta > 0.0 && term_enabled(LossKind::Relation, context)) {
    parts.relation = loss_value(LossKind::Relation, adapter, inputs, context, config);
  }
  return total_loss(parts, config, context.phase).total;
}

namespace {

// Mean change of pairwise cosine among the first `rows` rows, split by class.
std::pair<double, double> mean_delta_cos(const FeatureMatrix& before, const FeatureMatrix& after,
                                         const LabelList& labels, Index rows) {
  double same = 0.0, diff = 0.0;
  int n_same = 0, n_diff = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index k = i + 1; k < rows; ++k) {
      const double delta = after.row(i).dot(after.row(k)) - before.row(i).dot(before.row(k));
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(k)]) {
        same += delta;
        ++n_same;
      } else {
        diff += delta;
        ++n_diff;
      }
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {n_same ? same / n_same : nan, n_diff ? diff / n_diff : nan};
}

}  // namespace

TrainResult train_episode(const FeatureMatrix& support, const LabelList& labels, const FeatureMatrix& text,
                          const TrainConfig& config) {
  config.validate();
  if (support.rows() == 0) throw Error(ErrorCode::InsufficientSamples, "empty support set");
  const Index original_rows = support.rows();

  FeatureMatrix train_rows = support;
  LabelList train_labels = labels;
  if (config.jitter_copies > 0 && config.jitter_sigma > 0.0) {
    Rng jitter(derive_seed(config.seed, {kStreamJitter}));
    std::normal_distribution<double> gauss(0.0, config.jitter_sigma / std::sqrt(static_cast<double>(support.cols())));
    train_rows.resize(original_rows * (1 + config.jitter_copies), support.cols());
    train_rows.topRows(original_rows) = support;
    for (int copy = 1; copy <= config.jitter_copies; ++copy) {
      for (Index i = 0; i < original_rows; ++i) {
        RowVector v = support.row(i);
        for (Index j = 0; j < v.size(); ++j) v[j] += gauss(jitter);
        train_rows.row(copy * original_rows + i) = l2_normalize(v);
        train_labels.push_back(labels[static_cast<std::size_t>(i)]);
      }
    }
  }
  const EpisodeInputs inputs(std::move(train_rows), std::move(train_labels), text);

  Rng init(derive_seed(config.seed, {kStreamInit}));
  Rng aux(derive_seed(config.seed, {kStreamAuxiliary}));
  TrainResult result;
  result.adapter = LowRankAdapter::initialized(support.cols(), config.rank, config.lora_scale, config.branch,
                                               config.init_sigma, init);
  if (config.keep_snapshots) result.trajectory.snapshots.push_back(result.adapter);

  FeatureMatrix current = adapt_visual(result.adapter, inputs.support);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const PhaseState phase = config.phase_at(epoch);
    const bool active = phase.auxiliary_active();
    const SvlStrategy svl = active && config.loss.lambda > 0.0 ? config.loss.svl : SvlStrategy::Off;
    const RaStrategy ra = active && config.loss.beta > 0.0 ? config.loss.ra : RaStrategy::Off;

    EpochRecord rec;
    rec.epoch = epoch;
    rec.support_accuracy = accuracy_percent(
        classify(current.topRows(original_rows), adapt_text(result.adapter, inputs.text), config.loss.tau), labels);
    const FeatureMatrix before = current;
    for (int step = 0; step < config.steps_per_epoch; ++step) {
      const StepContext ctx = make_step_context(result.adapter, inputs, svl, ra, phase, aux);
      const ObjectiveResult obj = evaluate_objective(result.adapter, inputs, ctx, config.loss);
      if (step == 0) {
        rec.vlm = obj.breakdown.vlm;
        rec.anti_visual = obj.breakdown.anti_visual;
        rec.relation = obj.breakdown.relation;
        rec.total = obj.breakdown.total;
      }
      result.adapter = sgd_step(result.adapter, obj.grad, config.eta);
    }
    current = adapt_visual(result.adapter, inputs.support);
    std::tie(rec.delta_cos_same, rec.delta_cos_diff) = mean_delta_cos(before, current, labels, original_rows);
    rec.snapshot_id = epoch + 1;
    if (config.keep_snapshots) result.trajectory.snapshots.push_back(result.adapter);
    result.trajectory.epochs.push_back(rec);
  }
  return result;
}

TrainResult train_episode(const Episode& episode, const FeatureMatrix& text, const TrainConfig& config) {
  return train_episode(episode.support, episode.support_labels, text, config);
}

}  // namespace xmod
