#pragma once

#include <cstddef>
#include <optional>

#include "freqbooth/autodiff.hpp"
#include "freqbooth/tensor.hpp"

namespace freqbooth {

// Projection matrices of one adaptive attention block. w_q/w_k/w_v belong to
// the frozen backbone; w_k_id/w_v_id are the trainable identity projections.
struct AdaptiveAttentionWeights {
  Tensor w_q;     // d_model x d
  Tensor w_k;     // d_model x d
  Tensor w_v;     // d_model x d
  Tensor w_k_id;  // d_id x d
  Tensor w_v_id;  // d_id x d
  std::size_t heads = 1;
};

// Identity token matrix F_a (n_tokens x d_id).
struct IdentityFeatures {
  Tensor tokens;

  IdentityFeatures() = default;
  explicit IdentityFeatures(Tensor t);
};

// Identity strength, validated to lie in [0, 1].
class LambdaScale {
 public:
  explicit LambdaScale(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

inline constexpr double kDefaultLambda = 0.4;

// O = Softmax(Q K^T / sqrt(d)) V + lambda * Softmax(Q K_id^T / sqrt(d)) V_id
// with Q = Z W_q, K = Z W_k, V = Z W_v, K_id = F W_k_id, V_id = F W_v_id.
// Both summands use the same Q. Without features the cross summand is skipped.
Tensor adaptive_attention(const Tensor& z, const IdentityFeatures* features,
                          const AdaptiveAttentionWeights& w, LambdaScale lambda);
Tensor self_attention_term(const Tensor& z, const AdaptiveAttentionWeights& w);
// Cross-attention summand without the lambda factor.
Tensor cross_term(const Tensor& z, const IdentityFeatures& features,
                  const AdaptiveAttentionWeights& w);

// Tape handles for the five projections of one block.
struct AttentionVars {
  Tape::Var w_q, w_k, w_v, w_k_id, w_v_id;
};

Tape::Var self_attention_term(Tape& tape, Tape::Var z, const AttentionVars& w,
                              std::size_t heads);
Tape::Var cross_term(Tape& tape, Tape::Var z, Tape::Var features, const AttentionVars& w,
                     std::size_t heads);
// features may be invalid (no identity condition).
Tape::Var adaptive_attention(Tape& tape, Tape::Var z, Tape::Var features, const AttentionVars& w,
                             std::size_t heads, double lambda);

}  // namespace freqbooth
