#include "freqbooth/sampler.hpp"

#include "freqbooth/errors.hpp"
#include "freqbooth/rng.hpp"

namespace freqbooth {

Sampler::Sampler(const ModelConfig& config, const ParameterStore& store)
    : config_(config),
      store_(&store),
      codec_(config.patch),
      schedule_(NoiseSchedule::linear(config.timesteps, config.beta_start, config.beta_end)),
      denoiser_(config, store),
      animal_net_(config, store) {}

Tensor Sampler::image_latent(const Image& image) const {
  return scale(codec_.encode(image), config_.latent_scale);
}

Tensor Sampler::decode_latent(const Tensor& latent) const {
  return codec_.decode(scale(latent, 1.0 / config_.latent_scale));
}

SampleResult Sampler::sample(const SampleRequest& req, const StepObserver& observer) {
  if (req.steps < 1) throw ValidationError("sampling steps must be >= 1");
  const LambdaScale lambda(req.lambda);
  if (req.mask && !req.reference) {
    throw ValidationError("a frequency mask needs a reference image");
  }
  if (req.class_id && *req.class_id >= config_.n_classes) {
    throw ValidationError("text id " + std::to_string(*req.class_id) + " outside [0, " +
                          std::to_string(config_.n_classes) + ")");
  }

  std::optional<std::vector<IdentityFeatures>> identity;
  std::optional<Tensor> control;
  if (req.reference) {
    identity = animal_net_.forward(*req.reference);
    if (req.mask) control = make_control_signal(image_latent(*req.reference), *req.mask);
  }

  const std::size_t side = config_.latent_size();
  RngState rng{req.seed, 0};
  Tensor z = gaussian({config_.latent_channels, side, side}, rng);

  Conditioning cond;
  cond.class_id = req.class_id;
  cond.identity = identity ? &*identity : nullptr;
  cond.control = control ? &*control : nullptr;
  cond.lambda = lambda.value();
  Conditioning uncond;
  uncond.lambda = lambda.value();

  const auto ts = ddim_timesteps(config_.timesteps, req.steps);
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const std::size_t t = ts[i], t_prev = ts[i + 1];
    if (observer) observer(t, cond.identity);
    Tensor eps = denoiser_.predict_eps(z, t, cond);
    if (!req.conditional_only) {
      eps = cfg_combine(eps, denoiser_.predict_eps(z, t, uncond), req.guidance);
    }
    z = ddim_step(z, eps, t, t_prev, schedule_);
    if (!z.all_finite()) throw NumericalError("sampling diverged at t = " + std::to_string(t));
  }

  SampleResult out;
  out.decoded = decode_latent(z);
  out.image = Image::from_unclamped(out.decoded);
  out.latent = std::move(z);
  return out;
}

}  // namespace freqbooth
