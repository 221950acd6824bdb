#include "freqbooth/attention.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "freqbooth/errors.hpp"

namespace freqbooth {

IdentityFeatures::IdentityFeatures(Tensor t) : tokens(std::move(t)) {
  require_rank(tokens, 2, "IdentityFeatures");
  if (!tokens.all_finite()) throw NumericalError("IdentityFeatures: non-finite entries");
}

LambdaScale::LambdaScale(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ValidationError("lambda must lie in [0, 1], got " + std::to_string(value));
  }
}

namespace {

void check_projection(const Tensor& input, const Tensor& w, const char* name, std::size_t d) {
  require_rank(w, 2, name);
  if (input.cols() != w.rows()) {
    throw DimensionError(std::string("adaptive attention: ") + name + " expects " +
                         std::to_string(w.rows()) + " input features, got " +
                         shape_string(input.shape()));
  }
  if (w.cols() != d) {
    throw DimensionError(std::string("adaptive attention: ") + name + " has " +
                         std::to_string(w.cols()) + " output features, W_q has " +
                         std::to_string(d));
  }
}

std::size_t head_dim(std::size_t d, std::size_t heads) {
  if (heads == 0 || d % heads != 0) {
    throw DimensionError("adaptive attention: width " + std::to_string(d) +
                         " is not divisible into " + std::to_string(heads) + " heads");
  }
  return d / heads;
}

// Softmax(q k^T / sqrt(dh)) v, split over heads along columns.
Tape::Var attend(Tape& tape, Tape::Var q, Tape::Var k, Tape::Var v, std::size_t heads) {
  const std::size_t d = tape.value(q).cols();
  const std::size_t dh = head_dim(d, heads);
  const double inv = 1.0 / std::sqrt(static_cast<double>(dh));
  if (heads == 1) {
    return tape.matmul(tape.softmax_rows(tape.scale(tape.matmul_nt(q, k), inv)), v);
  }
  std::vector<Tape::Var> outs;
  outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    auto qh = tape.slice_cols(q, h * dh, dh);
    auto kh = tape.slice_cols(k, h * dh, dh);
    auto vh = tape.slice_cols(v, h * dh, dh);
    outs.push_back(tape.matmul(tape.softmax_rows(tape.scale(tape.matmul_nt(qh, kh), inv)), vh));
  }
  return tape.concat_cols(outs);
}

void check_block(const Tensor& z, const AdaptiveAttentionWeights& w) {
  require_rank(z, 2, "adaptive attention input");
  require_rank(w.w_q, 2, "W_q");
  if (z.cols() != w.w_q.rows()) {
    throw DimensionError("adaptive attention: W_q expects " + std::to_string(w.w_q.rows()) +
                         " input features, got " + shape_string(z.shape()));
  }
  const std::size_t d = w.w_q.cols();
  check_projection(z, w.w_k, "W_k", d);
  check_projection(z, w.w_v, "W_v", d);
  head_dim(d, w.heads);
}

void check_identity(const IdentityFeatures& f, const AdaptiveAttentionWeights& w) {
  const std::size_t d = w.w_q.cols();
  check_projection(f.tokens, w.w_k_id, "W_k_ID", d);
  check_projection(f.tokens, w.w_v_id, "W_v_ID", d);
}

AttentionVars constants(Tape& tape, const AdaptiveAttentionWeights& w, bool with_identity) {
  AttentionVars v;
  v.w_q = tape.constant(w.w_q);
  v.w_k = tape.constant(w.w_k);
  v.w_v = tape.constant(w.w_v);
  if (with_identity) {
    v.w_k_id = tape.constant(w.w_k_id);
    v.w_v_id = tape.constant(w.w_v_id);
  }
  return v;
}

}  // namespace

Tape::Var self_attention_term(Tape& tape, Tape::Var z, const AttentionVars& w,
                              std::size_t heads) {
  auto q = tape.matmul(z, w.w_q);
  auto k = tape.matmul(z, w.w_k);
  auto v = tape.matmul(z, w.w_v);
  return attend(tape, q, k, v, heads);
}

Tape::Var cross_term(Tape& tape, Tape::Var z, Tape::Var features, const AttentionVars& w,
                     std::size_t heads) {
  auto q = tape.matmul(z, w.w_q);
  auto k_id = tape.matmul(features, w.w_k_id);
  auto v_id = tape.matmul(features, w.w_v_id);
  return attend(tape, q, k_id, v_id, heads);
}

Tape::Var adaptive_attention(Tape& tape, Tape::Var z, Tape::Var features, const AttentionVars& w,
                             std::size_t heads, double lambda) {
  auto q = tape.matmul(z, w.w_q);
  auto k = tape.matmul(z, w.w_k);
  auto v = tape.matmul(z, w.w_v);
  auto out = attend(tape, q, k, v, heads);
  if (!features.valid()) return out;
  auto k_id = tape.matmul(features, w.w_k_id);
  auto v_id = tape.matmul(features, w.w_v_id);
  auto cross = attend(tape, q, k_id, v_id, heads);
  return tape.add(out, tape.scale(cross, lambda));
}

Tensor adaptive_attention(const Tensor& z, const IdentityFeatures* features,
                          const AdaptiveAttentionWeights& w, LambdaScale lambda) {
  check_block(z, w);
  if (features) check_identity(*features, w);
  Tape tape(false);
  auto vars = constants(tape, w, features != nullptr);
  auto zv = tape.constant(z);
  Tape::Var fv;
  if (features) fv = tape.constant(features->tokens);
  return tape.value(adaptive_attention(tape, zv, fv, vars, w.heads, lambda.value()));
}

Tensor self_attention_term(const Tensor& z, const AdaptiveAttentionWeights& w) {
  check_block(z, w);
  Tape tape(false);
  auto vars = constants(tape, w, false);
  return tape.value(self_attention_term(tape, tape.constant(z), vars, w.heads));
}

Tensor cross_term(const Tensor& z, const IdentityFeatures& features,
                  const AdaptiveAttentionWeights& w) {
  check_block(z, w);
  check_identity(features, w);
  Tape tape(false);
  auto vars = constants(tape, w, true);
  return tape.value(
      cross_term(tape, tape.constant(z), tape.constant(features.tokens), vars, w.heads));
}

}  // namespace freqbooth
