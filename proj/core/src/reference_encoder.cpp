#include "freqbooth/reference_encoder.hpp"

#include <cmath>

#include "freqbooth/errors.hpp"

namespace freqbooth {

TokenExtractor::TokenExtractor(std::size_t patch, Tensor patch_embed, Tensor pos_code)
    : patch_(patch), patch_embed_(std::move(patch_embed)), pos_code_(std::move(pos_code)) {
  require_rank(patch_embed_, 2, "patch_embed");
  require_rank(pos_code_, 2, "pos_code");
  if (patch_embed_.rows() != 3 * patch_ * patch_ || pos_code_.cols() != patch_embed_.cols()) {
    throw DimensionError("token extractor: patch_embed " + shape_string(patch_embed_.shape()) +
                         " and pos_code " + shape_string(pos_code_.shape()) + " disagree");
  }
}

TokenExtractor TokenExtractor::from_store(const ModelConfig& config, const ParameterStore& store) {
  return TokenExtractor(config.patch, store.get("encoder.patch_embed"),
                        store.get("encoder.pos_code"));
}

Tensor TokenExtractor::extract(const Image& image) const {
  const std::size_t H = image.height(), W = image.width();
  if (H % patch_ != 0 || W % patch_ != 0) {
    throw DimensionError("extract_tokens: image " + std::to_string(H) + "x" + std::to_string(W) +
                         " is not divisible by the patch size");
  }
  const std::size_t ph = H / patch_, pw = W / patch_;
  if (ph * pw != pos_code_.rows()) {
    throw DimensionError("extract_tokens: image yields " + std::to_string(ph * pw) +
                         " patches, positional code covers " + std::to_string(pos_code_.rows()));
  }
  const std::size_t d = patch_embed_.cols();
  Tensor tokens({ph * pw, d});
  for (std::size_t pi = 0; pi < ph; ++pi) {
    for (std::size_t pj = 0; pj < pw; ++pj) {
      const std::size_t row = pi * pw + pj;
      const Tensor vec = extract_patch(image.pixels(), patch_, pi, pj);
      for (std::size_t k = 0; k < d; ++k) {
        double acc = 0.0;
        for (std::size_t q = 0; q < vec.size(); ++q) acc += vec[q] * patch_embed_(q, k);
        tokens(row, k) = acc + pos_code_(row, k);
      }
    }
  }
  return tokens;
}

ProjectionWeights ProjectionWeights::from_store(const ParameterStore& store) {
  return {store.get("identity.queries"), store.get("identity.w_key"),
          store.get("identity.w_value")};
}

namespace {

Tape::Var pool(Tape& tape, Tape::Var tokens, Tape::Var queries, Tape::Var w_key,
               Tape::Var w_value) {
  const double inv = 1.0 / std::sqrt(static_cast<double>(tape.value(queries).cols()));
  auto keys = tape.matmul(tokens, w_key);
  auto values = tape.matmul(tokens, w_value);
  return tape.matmul(tape.softmax_rows(tape.scale(tape.matmul_nt(queries, keys), inv)), values);
}

}  // namespace

IdentityFeatures project_identity(const Tensor& tokens, const ProjectionWeights& p) {
  require_rank(tokens, 2, "project_identity tokens");
  if (tokens.cols() != p.w_key.rows() || tokens.cols() != p.w_value.rows()) {
    throw DimensionError("project_identity: token width " + std::to_string(tokens.cols()) +
                         " vs key/value projections " + shape_string(p.w_key.shape()) + ", " +
                         shape_string(p.w_value.shape()));
  }
  if (p.queries.cols() != p.w_key.cols()) {
    throw DimensionError("project_identity: queries " + shape_string(p.queries.shape()) +
                         " vs key projection " + shape_string(p.w_key.shape()));
  }
  Tape tape(false);
  auto out = pool(tape, tape.constant(tokens), tape.constant(p.queries), tape.constant(p.w_key),
                  tape.constant(p.w_value));
  return IdentityFeatures(tape.value(out));
}

Tensor reference_inputs(const Image& reference, const ToyLatentCodec& codec,
                        const TokenExtractor& extractor) {
  const Tensor tokens = extractor.extract(reference);
  const Tensor latent = latent_to_tokens(codec.encode(reference));
  const std::size_t n = tokens.rows(), dt = tokens.cols(), dl = latent.cols();
  Tensor out({n, dt + dl});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dt; ++k) out(i, k) = tokens(i, k);
    for (std::size_t k = 0; k < dl; ++k) out(i, dt + k) = latent(i, k);
  }
  return out;
}

std::vector<Tape::Var> identity_features(Tape& tape, const ParamBinding& params,
                                         Tape::Var ref_inputs, const ModelConfig& config) {
  auto pooled = pool(tape, ref_inputs, params["identity.queries"], params["identity.w_key"],
                     params["identity.w_value"]);
  std::vector<Tape::Var> out;
  out.reserve(config.blocks);
  for (std::size_t k = 0; k < config.blocks; ++k) {
    out.push_back(tape.matmul(pooled, params[block_name(k, "identity_head")]));
  }
  return out;
}

AnimalNet::AnimalNet(const ModelConfig& config, const ParameterStore& store)
    : config_(config),
      store_(&store),
      codec_(config.patch),
      extractor_(TokenExtractor::from_store(config, store)) {}

std::vector<IdentityFeatures> AnimalNet::compute(const Image& reference) const {
  Tape tape(false);
  ParamBinding params(tape, *store_, std::nullopt);
  auto inputs = tape.constant(reference_inputs(reference, codec_, extractor_));
  std::vector<IdentityFeatures> out;
  for (auto v : identity_features(tape, params, inputs, config_)) {
    out.emplace_back(tape.value(v));
  }
  return out;
}

std::vector<IdentityFeatures> AnimalNet::forward(const Image& reference) {
  const std::uint64_t key = checksum(reference.pixels());
  if (cache_enabled_) {
    auto [lo, hi] = cache_.equal_range(key);
    for (auto it = lo; it != hi; ++it) {
      if (it->second.pixels == reference.pixels()) {
        ++cache_hits_;
        return it->second.features;
      }
    }
  }
  ++forward_passes_;
  auto features = compute(reference);
  if (cache_enabled_) cache_.emplace(key, Entry{reference.pixels(), features});
  return features;
}

}  // namespace freqbooth
