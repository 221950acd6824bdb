#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "freqbooth/attention.hpp"
#include "freqbooth/autodiff.hpp"
#include "freqbooth/codec.hpp"
#include "freqbooth/image.hpp"
#include "freqbooth/model_config.hpp"
#include "freqbooth/params.hpp"

namespace freqbooth {

// Frozen patch embedder standing in for a pretrained image encoder: one row
// per codec patch, patch_vector * patch_embed + pos_code[row].
class TokenExtractor {
 public:
  TokenExtractor(std::size_t patch, Tensor patch_embed, Tensor pos_code);
  static TokenExtractor from_store(const ModelConfig& config, const ParameterStore& store);

  // n_patches x d_tok
  Tensor extract(const Image& image) const;
  std::size_t token_dim() const { return patch_embed_.cols(); }

 private:
  std::size_t patch_;
  Tensor patch_embed_;
  Tensor pos_code_;
};

// Learned-query attention pooler (single layer) over the reference tokens.
struct ProjectionWeights {
  Tensor queries;  // n_query x d_id
  Tensor w_key;    // d_in x d_id
  Tensor w_value;  // d_in x d_id

  static ProjectionWeights from_store(const ParameterStore& store);
};

// F = Softmax(queries (tokens W_key)^T / sqrt(d_id)) (tokens W_value)
IdentityFeatures project_identity(const Tensor& tokens, const ProjectionWeights& p);

// Reference-branch input: [extracted tokens | codec latent per patch],
// n_patches x (d_tok + 4). Noise-free and independent of the timestep.
Tensor reference_inputs(const Image& reference, const ToyLatentCodec& codec,
                        const TokenExtractor& extractor);

// Tape version of pooling plus one linear head per generation block.
std::vector<Tape::Var> identity_features(Tape& tape, const ParamBinding& params,
                                         Tape::Var ref_inputs, const ModelConfig& config);

// Reference branch. A forward pass runs the codec, the token extractor, the
// pooler and the per-block heads once per distinct image; later calls with
// the same pixels are answered from a per-instance cache.
class AnimalNet {
 public:
  AnimalNet(const ModelConfig& config, const ParameterStore& store);

  std::vector<IdentityFeatures> forward(const Image& reference);
  std::vector<IdentityFeatures> compute(const Image& reference) const;

  void set_cache_enabled(bool enabled) { cache_enabled_ = enabled; }
  std::size_t forward_passes() const { return forward_passes_; }
  std::size_t cache_hits() const { return cache_hits_; }

 private:
  struct Entry {
    Tensor pixels;
    std::vector<IdentityFeatures> features;
  };

  ModelConfig config_;
  const ParameterStore* store_;
  ToyLatentCodec codec_;
  TokenExtractor extractor_;
  bool cache_enabled_ = true;
  std::multimap<std::uint64_t, Entry> cache_;
  std::size_t forward_passes_ = 0;
  std::size_t cache_hits_ = 0;
};

}  // namespace freqbooth
