#include "freqbooth/denoiser.hpp"

#include <cmath>

#include "freqbooth/errors.hpp"

namespace freqbooth {

Tensor timestep_embedding(std::size_t t, std::size_t dim) {
  const std::size_t half = dim / 2;
  Tensor out({1, dim});
  for (std::size_t k = 0; k < half; ++k) {
    const double freq =
        std::exp(-std::log(1000.0) * static_cast<double>(k) / static_cast<double>(half));
    const double a = static_cast<double>(t) * freq;
    out(0, k) = std::sin(a);
    out(0, half + k) = std::cos(a);
  }
  return out;
}

Tape::Var denoiser_forward(Tape& tape, const ParamBinding& p, const ModelConfig& c,
                           Tape::Var z_tokens, std::size_t t, const TapeConditioning& cond) {
  const std::size_t class_id = cond.class_id.value_or(c.null_class());
  if (class_id > c.null_class()) {
    throw ValidationError("class id " + std::to_string(class_id) + " outside [0, " +
                          std::to_string(c.null_class()) + "]");
  }
  if (!cond.identity.empty() && cond.identity.size() != c.blocks) {
    throw DimensionError("denoiser: " + std::to_string(cond.identity.size()) +
                         " identity feature sets for " + std::to_string(c.blocks) + " blocks");
  }
  Tensor onehot({1, c.n_classes + 1});
  onehot(0, class_id) = 1.0;
  auto class_row = tape.constant(std::move(onehot));
  auto time_row = tape.constant(timestep_embedding(t, c.time_dim));

  auto h = tape.add_row(tape.matmul(z_tokens, p["in.weight"]), p["in.bias"]);
  h = tape.add(h, p["pos_embed"]);
  for (std::size_t k = 0; k < c.blocks; ++k) {
    auto cond_row = tape.add(tape.matmul(time_row, p[block_name(k, "time")]),
                             tape.matmul(class_row, p[block_name(k, "class")]));
    h = tape.add_row(h, cond_row);

    AttentionVars attn{p[block_name(k, "attn.w_q")], p[block_name(k, "attn.w_k")],
                       p[block_name(k, "attn.w_v")], p[block_name(k, "attn.w_k_id")],
                       p[block_name(k, "attn.w_v_id")]};
    Tape::Var features = cond.identity.empty() ? Tape::Var{} : cond.identity[k];
    h = tape.add(h, adaptive_attention(tape, h, features, attn, c.heads, cond.lambda));

    if (cond.control.valid()) {
      auto injected = tape.matmul(cond.control, p[block_name(k, "control.weight")]);
      h = tape.add(h, tape.mul_row(injected, p[block_name(k, "control.gate")]));
    }

    auto hidden = tape.tanh(tape.add_row(tape.matmul(h, p[block_name(k, "ff1.weight")]),
                                         p[block_name(k, "ff1.bias")]));
    h = tape.add(h, tape.add_row(tape.matmul(hidden, p[block_name(k, "ff2.weight")]),
                                 p[block_name(k, "ff2.bias")]));
  }
  return tape.add_row(tape.matmul(h, p["out.weight"]), p["out.bias"]);
}

Denoiser::Denoiser(const ModelConfig& config, const ParameterStore& store)
    : config_(config), store_(&store) {
  config_.validate();
}

Tensor Denoiser::predict_eps(const Tensor& z_t, std::size_t t, const Conditioning& cond) const {
  const std::size_t side = config_.latent_size();
  const Shape expected{config_.latent_channels, side, side};
  if (z_t.shape() != expected) {
    throw DimensionError("predict_eps: latent " + shape_string(z_t.shape()) + ", model expects " +
                         shape_string(expected));
  }
  if (cond.control && cond.control->shape() != expected) {
    throw DimensionError("predict_eps: control signal " + shape_string(cond.control->shape()) +
                         ", model expects " + shape_string(expected));
  }
  Tape tape(false);
  ParamBinding params(tape, *store_, std::nullopt);
  TapeConditioning tc;
  tc.class_id = cond.class_id;
  tc.lambda = cond.lambda;
  if (cond.identity) {
    for (const auto& f : *cond.identity) tc.identity.push_back(tape.constant(f.tokens));
  }
  if (cond.control) tc.control = tape.constant(latent_to_tokens(*cond.control));
  auto out = denoiser_forward(tape, params, config_, tape.constant(latent_to_tokens(z_t)), t, tc);
  return tokens_to_latent(tape.value(out), side, side);
}

}  // namespace freqbooth
