#include "freqbooth/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "freqbooth/codec.hpp"
#include "freqbooth/denoiser.hpp"
#include "freqbooth/errors.hpp"
#include "freqbooth/reference_encoder.hpp"

namespace freqbooth {

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Pretrain0: return "pretrain0";
    case Stage::Stage1: return "stage1";
    case Stage::Stage2: return "stage2";
  }
  return "?";
}

Stage stage_from_int(int stage) {
  if (stage < 0 || stage > 2) {
    throw ValidationError("stage must be 0, 1 or 2, got " + std::to_string(stage));
  }
  return static_cast<Stage>(stage);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning rate must be positive");
  }
  if (batch_size == 0) throw ValidationError("batch size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("Adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ValidationError("Adam epsilon must be positive");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight decay must be >= 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must be in [0, 1]");
  if (!(condition_dropout >= 0.0 && condition_dropout <= 1.0)) {
    throw ValidationError("condition dropout must be in [0, 1]");
  }
  if (smoothing_window == 0) throw ValidationError("smoothing window must be >= 1");
}

TrainConfig paper_scale_train_config(Stage stage) {
  TrainConfig c;
  c.stage = stage;
  c.learning_rate = 1e-5;
  c.weight_decay = 1e-2;
  c.batch_size = 4;
  return c;
}

ModelState ModelState::initial(const ModelConfig& config) {
  config.validate();
  ModelState s;
  s.config = config;
  s.params = init_parameters(config);
  return s;
}

bool ModelState::is_frozen(ParamGroup group) const {
  switch (group) {
    case ParamGroup::Encoder: return true;
    case ParamGroup::Backbone: return completed_stage >= 0;
    case ParamGroup::Identity: return completed_stage >= 1;
    case ParamGroup::Control: return completed_stage >= 2;
  }
  return true;
}

TrainingSet::TrainingSet(const std::vector<Sample>& samples, const ModelConfig& config,
                         const ParameterStore& params) {
  const ToyLatentCodec codec(config.patch);
  const TokenExtractor extractor = TokenExtractor::from_store(config, params);
  examples_.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.image.height() != config.image_size || s.image.width() != config.image_size) {
      throw DimensionError("training sample is " + std::to_string(s.image.height()) + "x" +
                           std::to_string(s.image.width()) + ", model expects " +
                           std::to_string(config.image_size));
    }
    if (s.context >= config.n_classes) {
      throw ValidationError("sample context " + std::to_string(s.context) +
                            " has no class embedding");
    }
    TrainingExample ex;
    ex.z0_tokens = latent_to_tokens(scale(codec.encode(s.image), config.latent_scale));
    ex.ref_inputs = reference_inputs(s.reference, codec, extractor);
    ex.ref_latent = scale(codec.encode(s.reference), config.latent_scale);
    ex.class_id = s.context;
    examples_.push_back(std::move(ex));
  }
}

Tensor TrainingSet::control_tokens(std::size_t i, MaskKind mask) const {
  return latent_to_tokens(make_control_signal(examples_.at(i).ref_latent, mask));
}

std::vector<BatchItem> draw_batch(const TrainingSet& set, const ModelConfig& config,
                                  const TrainConfig& train, RngState& rng) {
  if (set.size() == 0) throw ValidationError("training set is empty");
  std::vector<BatchItem> batch(train.batch_size);
  for (auto& item : batch) {
    item.example = static_cast<std::size_t>(rng.below(set.size()));
    item.t = 1 + static_cast<std::size_t>(rng.below(config.timesteps));
    item.eps = gaussian({config.tokens(), config.latent_channels}, rng);
    const double u = rng.uniform();
    item.drop_condition = train.stage != Stage::Stage2 && u < train.condition_dropout;
  }
  return batch;
}

LossResult stage_loss(Stage stage, const std::vector<BatchItem>& batch, const TrainingSet& set,
                      const ModelConfig& config, const ParameterStore& params,
                      const NoiseSchedule& schedule, const LossOptions& options) {
  if (batch.empty()) throw ValidationError("empty batch");
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  LossResult result;

  if (options.hook) {
    for (const auto& item : batch) {
      const auto& ex = set[item.example];
      const Tensor z_t = forward_noise(ex.z0_tokens, item.t, item.eps, schedule);
      const Tensor pred = (*options.hook)(item, z_t);
      if (pred.shape() != item.eps.shape()) {
        throw DimensionError("prediction hook returned " + shape_string(pred.shape()));
      }
      const Tensor diff = sub(pred, item.eps);
      double sq = 0.0;
      for (double d : diff.values()) sq += d * d;
      result.loss += sq / static_cast<double>(diff.size()) * inv_batch;
    }
    return result;
  }

  const bool grads = options.compute_gradients;
  const ParamGroup trainable = trainable_group(static_cast<int>(stage));
  Tape tape(grads);
  ParamBinding binding(tape, params,
                       grads ? std::optional<ParamGroup>(trainable) : std::nullopt);

  Tape::Var total;
  for (const auto& item : batch) {
    const auto& ex = set[item.example];
    TapeConditioning cond;
    cond.lambda = options.lambda;
    if (!item.drop_condition) {
      cond.class_id = ex.class_id;
      if (stage != Stage::Pretrain0) {
        cond.identity = identity_features(tape, binding, tape.constant(ex.ref_inputs), config);
      }
      if (stage == Stage::Stage2) {
        cond.control = tape.constant(set.control_tokens(item.example, options.mask));
      }
    }
    auto z_t = tape.constant(forward_noise(ex.z0_tokens, item.t, item.eps, schedule));
    auto pred = denoiser_forward(tape, binding, config, z_t, item.t, cond);
    auto term = tape.scale(tape.mse(pred, item.eps), inv_batch);
    total = total.valid() ? tape.add(total, term) : term;
  }
  result.loss = tape.value(total)[0];
  if (!grads) return result;

  tape.backward(total);
  const auto& list = params.parameters();
  result.grads.resize(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].group == trainable) result.grads[i] = tape.grad(binding.at(i));
  }
  return result;
}

LossResult stage1_loss(const std::vector<BatchItem>& batch, const TrainingSet& set,
                       const ModelConfig& config, const ParameterStore& params,
                       const NoiseSchedule& schedule, double lambda,
                       const PredictionHook* hook) {
  LossOptions o;
  o.lambda = lambda;
  o.hook = hook;
  return stage_loss(Stage::Stage1, batch, set, config, params, schedule, o);
}

LossResult stage2_loss(const std::vector<BatchItem>& batch, const TrainingSet& set,
                       const ModelConfig& config, const ParameterStore& params,
                       const NoiseSchedule& schedule, MaskKind mask, double lambda,
                       const PredictionHook* hook) {
  LossOptions o;
  o.lambda = lambda;
  o.mask = mask;
  o.hook = hook;
  return stage_loss(Stage::Stage2, batch, set, config, params, schedule, o);
}

AdamOptimizer::AdamOptimizer(const TrainConfig& c)
    : lr_(c.learning_rate),
      beta1_(c.beta1),
      beta2_(c.beta2),
      eps_(c.epsilon),
      weight_decay_(c.weight_decay) {}

void AdamOptimizer::step(ParameterStore& params, const std::vector<Tensor>& grads,
                         ParamGroup group) {
  auto& list = params.parameters();
  if (grads.size() != list.size()) {
    throw DimensionError("optimizer: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(list.size()) + " parameters");
  }
  if (m_.empty()) {
    m_.resize(list.size());
    v_.resize(list.size());
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].group != group || grads[i].empty()) continue;
    Tensor& w = list[i].value;
    const Tensor& g = grads[i];
    if (g.shape() != w.shape()) {
      throw DimensionError("optimizer: gradient " + shape_string(g.shape()) + " for " +
                           list[i].name + " " + shape_string(w.shape()));
    }
    if (m_[i].empty()) {
      m_[i] = Tensor(w.shape());
      v_[i] = Tensor(w.shape());
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g[k];
      v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g[k] * g[k];
      const double mh = m_[i][k] / c1, vh = v_[i][k] / c2;
      if (weight_decay_ > 0.0) w[k] -= lr_ * weight_decay_ * w[k];
      w[k] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

bool TrainReport::frozen_unchanged() const {
  return std::all_of(checksums.begin(), checksums.end(),
                     [](const GroupChecksum& c) { return c.trainable || c.before == c.after; });
}

namespace {

constexpr ParamGroup kGroups[] = {ParamGroup::Encoder, ParamGroup::Backbone,
                                  ParamGroup::Identity, ParamGroup::Control};

double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t count) {
  double s = 0.0;
  for (std::size_t i = begin; i < begin + count; ++i) s += v[i];
  return s / static_cast<double>(count);
}

}  // namespace

TrainReport train(const TrainConfig& config, const TrainingSet& set, ModelState& state) {
  config.validate();
  const int stage = static_cast<int>(config.stage);
  if (state.completed_stage < stage - 1) {
    throw StateError("stage " + std::to_string(stage) + " requires stage " +
                     std::to_string(stage - 1) + " to be completed first (completed: " +
                     std::to_string(state.completed_stage) + ")");
  }
  const auto start = std::chrono::steady_clock::now();
  const ParamGroup trainable = trainable_group(stage);
  const ModelConfig& mc = state.config;
  const NoiseSchedule schedule = NoiseSchedule::linear(mc.timesteps, mc.beta_start, mc.beta_end);

  TrainReport report;
  report.config = config;
  report.model = mc;
  for (ParamGroup g : kGroups) {
    report.checksums.push_back({g, state.params.group_checksum(g), 0, g == trainable});
  }

  LossOptions options;
  options.lambda = config.lambda;
  options.mask = config.mask;
  RngState rng{config.seed, 0};
  AdamOptimizer optimizer(config);

  if (config.steps == 0) {
    RngState probe = rng;
    const auto batch = draw_batch(set, mc, config, probe);
    options.compute_gradients = false;
    const double loss = stage_loss(config.stage, batch, set, mc, state.params, schedule, options).loss;
    report.initial_loss = report.final_loss = loss;
    report.initial_smoothed = report.final_smoothed = loss;
  } else {
    report.losses.reserve(config.steps);
    for (std::size_t step = 0; step < config.steps; ++step) {
      const auto batch = draw_batch(set, mc, config, rng);
      auto r = stage_loss(config.stage, batch, set, mc, state.params, schedule, options);
      if (!std::isfinite(r.loss)) {
        throw NumericalError("non-finite loss at step " + std::to_string(step));
      }
      report.losses.push_back(r.loss);
      optimizer.step(state.params, r.grads, trainable);
    }
    const std::size_t w = std::min(config.smoothing_window, report.losses.size());
    report.initial_loss = report.losses.front();
    report.final_loss = report.losses.back();
    report.initial_smoothed = window_mean(report.losses, 0, w);
    report.final_smoothed = window_mean(report.losses, report.losses.size() - w, w);
  }

  for (auto& c : report.checksums) c.after = state.params.group_checksum(c.group);
  state.completed_stage = std::max(state.completed_stage, stage);
  state.rng = rng;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

TrainReport train(const TrainConfig& config, const Dataset& dataset, ModelState& state) {
  const TrainingSet set(dataset.train, state.config, state.params);
  return train(config, set, state);
}

GradcheckReport gradcheck(const GradcheckOptions& options) {
  const ModelConfig mc = tiny_model_config();
  ParameterStore params = init_parameters(mc);
  RngState jitter{derive_seed(options.seed, 0x6772616463ULL), 0};
  for (auto& p : params.parameters()) {
    for (double& x : p.value.data()) x += 0.3 * jitter.normal();
  }

  ToyDatasetSpec spec;
  spec.n_identities = 2;
  spec.n_contexts = std::min<std::size_t>(mc.n_classes, 2);
  spec.image_size = mc.image_size;
  spec.train_size = 2;
  spec.test_size = 0;
  const Dataset ds = generate_dataset(spec, options.seed);
  const TrainingSet set(ds.train, mc, params);
  const NoiseSchedule schedule = NoiseSchedule::linear(mc.timesteps, mc.beta_start, mc.beta_end);

  TrainConfig tc;
  tc.stage = options.stage;
  tc.batch_size = 2;
  tc.condition_dropout = 0.0;
  RngState rng{options.seed, 0};
  auto batch = draw_batch(set, mc, tc, rng);
  batch[0].example = 0;
  batch[1].example = 1;

  LossOptions lo;
  lo.lambda = 0.7;
  lo.mask = MaskKind::All;
  const LossResult analytic = stage_loss(options.stage, batch, set, mc, params, schedule, lo);
  lo.compute_gradients = false;

  GradcheckReport report;
  report.stage = options.stage;
  report.tolerance = options.tolerance;
  const ParamGroup trainable = trainable_group(static_cast<int>(options.stage));
  auto& list = params.parameters();
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].group != trainable) continue;
    Tensor numeric(list[i].value.shape());
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      const double orig = list[i].value[k];
      list[i].value[k] = orig + options.step;
      const double up = stage_loss(options.stage, batch, set, mc, params, schedule, lo).loss;
      list[i].value[k] = orig - options.step;
      const double down = stage_loss(options.stage, batch, set, mc, params, schedule, lo).loss;
      list[i].value[k] = orig;
      numeric[k] = (up - down) / (2.0 * options.step);
    }
    Tensor a = analytic.grads[i];
    if (options.inject_sign_flip) a = scale(a, -1.0);
    const double denom = std::max(frobenius_norm(a), frobenius_norm(numeric));
    const double err = denom < 1e-12 ? 0.0 : frobenius_norm(sub(a, numeric)) / denom;
    report.entries.push_back({list[i].name, list[i].group, numeric.size(), err});
    report.max_relative_error = std::max(report.max_relative_error, err);
  }
  report.passed = !report.entries.empty() && report.max_relative_error <= options.tolerance;
  return report;
}

}  // namespace freqbooth
