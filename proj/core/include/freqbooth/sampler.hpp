#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "freqbooth/codec.hpp"
#include "freqbooth/dct.hpp"
#include "freqbooth/denoiser.hpp"
#include "freqbooth/image.hpp"
#include "freqbooth/reference_encoder.hpp"
#include "freqbooth/schedule.hpp"

namespace freqbooth {

inline constexpr double kDefaultGuidance = 3.0;
inline constexpr std::size_t kDefaultSamplingSteps = 20;

struct SampleRequest {
  const Image* reference = nullptr;
  std::optional<std::size_t> class_id;  // text condition; nullopt -> null id
  std::optional<MaskKind> mask;         // frequency control; requires a reference
  std::size_t steps = kDefaultSamplingSteps;
  double guidance = kDefaultGuidance;
  double lambda = kDefaultLambda;
  std::uint64_t seed = 0;
  // Evaluate only the conditional branch (used to check the w = 1 identity).
  bool conditional_only = false;
};

struct SampleResult {
  Tensor latent;   // final z_0 in diffusion (scaled) units
  Tensor decoded;  // codec output, unclamped
  Image image;     // decoded, clamped to [0, 1]
};

// Called once per DDIM step with the timestep and the identity features used.
using StepObserver =
    std::function<void(std::size_t t, const std::vector<IdentityFeatures>* identity)>;

// DDIM sampling with classifier-free guidance. Identity features and the
// frequency control signal are computed once per run from the reference and
// held fixed across steps.
class Sampler {
 public:
  Sampler(const ModelConfig& config, const ParameterStore& store);

  SampleResult sample(const SampleRequest& request, const StepObserver& observer = {});

  // Diffusion-space latent of an image: latent_scale * encode(image).
  Tensor image_latent(const Image& image) const;
  Tensor decode_latent(const Tensor& latent) const;

  AnimalNet& animal_net() { return animal_net_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  const Denoiser& denoiser() const { return denoiser_; }
  const ModelConfig& config() const { return config_; }

 private:
  ModelConfig config_;
  const ParameterStore* store_;
  ToyLatentCodec codec_;
  NoiseSchedule schedule_;
  Denoiser denoiser_;
  AnimalNet animal_net_;
};

}  // namespace freqbooth
