#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freqbooth/dataset.hpp"
#include "freqbooth/dct.hpp"
#include "freqbooth/model_config.hpp"
#include "freqbooth/params.hpp"
#include "freqbooth/rng.hpp"
#include "freqbooth/schedule.hpp"

namespace freqbooth {

enum class Stage { Pretrain0 = 0, Stage1 = 1, Stage2 = 2 };

std::string_view to_string(Stage stage);
Stage stage_from_int(int stage);  // throws ValidationError outside {0, 1, 2}

struct TrainConfig {
  Stage stage = Stage::Pretrain0;
  double learning_rate = 1e-3;
  std::size_t batch_size = 4;
  std::size_t steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // > 0 selects decoupled (AdamW) decay
  std::uint64_t seed = 0;
  double lambda = 0.4;
  MaskKind mask = MaskKind::Low;  // stage 2 only
  double condition_dropout = 0.1;  // stages 0 and 1
  std::size_t smoothing_window = 50;

  void validate() const;
};

// AdamW, lr 1e-5, weight decay 1e-2, batch 4.
TrainConfig paper_scale_train_config(Stage stage);

// Model parameters plus training progress; this is what a checkpoint holds.
struct ModelState {
  ModelConfig config;
  ParameterStore params;
  int completed_stage = -1;
  RngState rng{};  // training stream position after the last run

  static ModelState initial(const ModelConfig& config);
  // Encoder parameters and every group whose stage has completed.
  bool is_frozen(ParamGroup group) const;
};

// Training inputs precomputed once: scaled target latents as tokens and the
// reference-branch inputs and scaled reference latents.
struct TrainingExample {
  Tensor z0_tokens;      // tokens x 4
  Tensor ref_inputs;     // patches x (d_tok + 4)
  Tensor ref_latent;     // 4 x h x w, scaled
  std::size_t class_id;  // background context
};

class TrainingSet {
 public:
  TrainingSet(const std::vector<Sample>& samples, const ModelConfig& config,
              const ParameterStore& params);
  std::size_t size() const { return examples_.size(); }
  const TrainingExample& operator[](std::size_t i) const { return examples_.at(i); }
  // C_freq of example i's reference latent, as tokens.
  Tensor control_tokens(std::size_t i, MaskKind mask) const;

 private:
  std::vector<TrainingExample> examples_;
};

struct BatchItem {
  std::size_t example = 0;
  std::size_t t = 1;  // uniform in [1, T]
  Tensor eps;         // tokens x 4
  bool drop_condition = false;
};

// Per item: example index, timestep, noise, dropout draw. The dropout draw is
// always consumed; it only takes effect for stages 0 and 1.
std::vector<BatchItem> draw_batch(const TrainingSet& set, const ModelConfig& config,
                                  const TrainConfig& train, RngState& rng);

// Replaces the denoiser output; receives the item and its noisy tokens.
using PredictionHook = std::function<Tensor(const BatchItem&, const Tensor& z_t_tokens)>;

struct LossOptions {
  double lambda = 0.4;
  MaskKind mask = MaskKind::Low;
  bool compute_gradients = true;
  const PredictionHook* hook = nullptr;  // disables gradients
};

struct LossResult {
  double loss = 0.0;
  // Indexed like ParameterStore::parameters(); empty for untrained tensors.
  std::vector<Tensor> grads;
};

// mean over items of mean((eps_theta - eps)^2). Stage 0 conditions on the
// class only, stage 1 adds identity features, stage 2 adds the control
// signal. Gradients cover exactly the stage's trainable group.
LossResult stage_loss(Stage stage, const std::vector<BatchItem>& batch, const TrainingSet& set,
                      const ModelConfig& config, const ParameterStore& params,
                      const NoiseSchedule& schedule, const LossOptions& options);

LossResult stage1_loss(const std::vector<BatchItem>& batch, const TrainingSet& set,
                       const ModelConfig& config, const ParameterStore& params,
                       const NoiseSchedule& schedule, double lambda,
                       const PredictionHook* hook = nullptr);

LossResult stage2_loss(const std::vector<BatchItem>& batch, const TrainingSet& set,
                       const ModelConfig& config, const ParameterStore& params,
                       const NoiseSchedule& schedule, MaskKind mask, double lambda,
                       const PredictionHook* hook = nullptr);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(const TrainConfig& config);
  // Updates the parameters of `group` for which grads are non-empty.
  void step(ParameterStore& params, const std::vector<Tensor>& grads, ParamGroup group);
  std::size_t steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

struct GroupChecksum {
  ParamGroup group;
  std::uint64_t before = 0;
  std::uint64_t after = 0;
  bool trainable = false;
};

struct TrainReport {
  TrainConfig config;
  ModelConfig model;
  std::vector<double> losses;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double initial_smoothed = 0.0;  // mean of the first window
  double final_smoothed = 0.0;    // mean of the last window
  std::vector<GroupChecksum> checksums;
  double wall_clock_seconds = 0.0;

  bool frozen_unchanged() const;
  double smoothed_ratio() const { return final_smoothed / initial_smoothed; }
};

// Throws StateError unless stage s - 1 has completed. Deterministic in the
// configuration and the dataset except for wall_clock_seconds.
TrainReport train(const TrainConfig& config, const TrainingSet& set, ModelState& state);
TrainReport train(const TrainConfig& config, const Dataset& dataset, ModelState& state);

struct GradcheckOptions {
  Stage stage = Stage::Stage1;
  std::uint64_t seed = 0;
  double step = 1e-5;
  double tolerance = 1e-4;
  bool inject_sign_flip = false;  // negates the analytic gradients
};

struct GradcheckEntry {
  std::string parameter;
  ParamGroup group;
  std::size_t elements = 0;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
};

struct GradcheckReport {
  Stage stage = Stage::Stage1;
  double tolerance = 1e-4;
  std::vector<GradcheckEntry> entries;
  double max_relative_error = 0.0;
  bool passed = false;
};

// Central differences on the tiny preset with a two-sample batch and every
// parameter (including zero-initialized ones) randomized.
GradcheckReport gradcheck(const GradcheckOptions& options);

}  // namespace freqbooth
