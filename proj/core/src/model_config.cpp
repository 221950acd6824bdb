#include "freqbooth/model_config.hpp"

#include "freqbooth/errors.hpp"

namespace freqbooth {

void ModelConfig::validate() const {
  if (patch == 0 || image_size == 0 || image_size % patch != 0) {
    throw ValidationError("image size " + std::to_string(image_size) +
                          " must be a positive multiple of the patch size " +
                          std::to_string(patch));
  }
  if (latent_channels != 4) throw ValidationError("the toy codec emits exactly 4 latent channels");
  if (d_model == 0 || heads == 0 || d_model % heads != 0) {
    throw ValidationError("d_model must be divisible by the head count");
  }
  if (time_dim == 0 || time_dim % 2 != 0) throw ValidationError("time_dim must be even and > 0");
  if (n_classes == 0) throw ValidationError("n_classes must be >= 1");
  if (n_query == 0) throw ValidationError("n_query must be >= 1");
  if (d_ff == 0 || blocks == 0 || d_tok == 0 || d_id == 0) {
    throw ValidationError("model widths and block count must be positive");
  }
  if (timesteps < 1) throw ValidationError("timesteps must be >= 1");
  if (!(latent_scale > 0.0)) throw ValidationError("latent_scale must be positive");
}

ModelConfig toy_model_config() { return ModelConfig{}; }

ModelConfig paper_scale_model_config() {
  ModelConfig c;
  c.image_size = 512;
  c.patch = 8;
  c.timesteps = 1000;
  return c;
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.image_size = 8;
  c.patch = 4;
  c.d_model = 8;
  c.heads = 2;
  c.d_ff = 8;
  c.blocks = 2;
  c.time_dim = 4;
  c.n_classes = 2;
  c.d_tok = 4;
  c.d_id = 6;
  c.n_query = 3;
  c.timesteps = 50;
  return c;
}

ModelConfig model_config_for_preset(std::string_view preset) {
  if (preset == "toy") return toy_model_config();
  if (preset == "paper-scale") return paper_scale_model_config();
  if (preset == "tiny") return tiny_model_config();
  throw ValidationError("unknown preset '" + std::string(preset) +
                        "' (expected toy|paper-scale|tiny)");
}

}  // namespace freqbooth
