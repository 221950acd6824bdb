#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace freqbooth {

// Sizes of every learned and frozen component. The toy preset keeps a full
// two-stage run under a few minutes on one CPU core.
struct ModelConfig {
  std::size_t image_size = 32;
  std::size_t patch = 4;            // codec downsample factor f
  std::size_t latent_channels = 4;  // fixed by the codec
  std::size_t d_model = 32;
  std::size_t heads = 1;
  std::size_t d_ff = 64;
  std::size_t blocks = 2;
  std::size_t time_dim = 16;
  std::size_t n_classes = 4;  // text/context ids; id n_classes is the null condition
  std::size_t d_tok = 16;
  std::size_t d_id = 32;
  std::size_t n_query = 8;
  double latent_scale = 0.5;
  std::size_t timesteps = 200;
  double beta_start = 1e-4;  // at the 1000-step reference length
  double beta_end = 0.02;
  std::uint64_t init_seed = 1;

  std::size_t latent_size() const { return image_size / patch; }
  std::size_t tokens() const { return latent_size() * latent_size(); }
  std::size_t null_class() const { return n_classes; }

  // Throws ValidationError on inconsistent sizes.
  void validate() const;
};

ModelConfig toy_model_config();
// 512x512 images, f = 8, 64x64 latents, T = 1000.
ModelConfig paper_scale_model_config();
// Dims <= 8 for finite-difference gradient checks.
ModelConfig tiny_model_config();
ModelConfig model_config_for_preset(std::string_view preset);

}  // namespace freqbooth
