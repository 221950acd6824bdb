#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "freqbooth/attention.hpp"
#include "freqbooth/autodiff.hpp"
#include "freqbooth/model_config.hpp"
#include "freqbooth/params.hpp"

namespace freqbooth {

// Conditions for one noise prediction. Absent identity skips the cross
// summand of every adaptive attention block; absent control skips the
// control residual.
struct Conditioning {
  std::optional<std::size_t> class_id;  // nullopt -> the null condition
  const std::vector<IdentityFeatures>* identity = nullptr;
  const Tensor* control = nullptr;  // C_freq, latent-shaped
  double lambda = kDefaultLambda;
};

struct TapeConditioning {
  std::optional<std::size_t> class_id;
  std::vector<Tape::Var> identity;  // one per block, or empty
  Tape::Var control;                // tokens x 4, or invalid
  double lambda = kDefaultLambda;
};

// Sinusoidal embedding of the timestep, 1 x dim.
Tensor timestep_embedding(std::size_t t, std::size_t dim);

// Token-wise transformer denoiser. Per block:
//   h += time(t) W_time + class_table[c]
//   h += AdaptiveAttention(h, F_block)
//   h += gate * (C_freq W_control)
//   h += tanh(h W_ff1 + b1) W_ff2 + b2
// followed by a linear read-out to the 4 latent channels.
Tape::Var denoiser_forward(Tape& tape, const ParamBinding& params, const ModelConfig& config,
                           Tape::Var z_tokens, std::size_t t, const TapeConditioning& cond);

class Denoiser {
 public:
  Denoiser(const ModelConfig& config, const ParameterStore& store);

  // z_t is 4 x h x w; returns the predicted noise with the same shape.
  Tensor predict_eps(const Tensor& z_t, std::size_t t, const Conditioning& cond) const;

  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  const ParameterStore* store_;
};

}  // namespace freqbooth
