#pragma once

#include <cstddef>
#include <vector>

#include "freqbooth/tensor.hpp"

namespace freqbooth {

// Discrete noise schedule over steps 1..T. alpha_bar(0) == 1 by convention.
class NoiseSchedule {
 public:
  // Linear betas from beta_start to beta_end, both given at the 1000-step
  // reference length and rescaled by 1000/T so the total noise level does not
  // depend on T.
  static NoiseSchedule linear(std::size_t steps, double beta_start = 1e-4,
                              double beta_end = 0.02);
  explicit NoiseSchedule(std::vector<double> betas);

  std::size_t steps() const { return betas_.size(); }
  double beta(std::size_t t) const;
  double alpha(std::size_t t) const { return 1.0 - beta(t); }
  double alpha_bar(std::size_t t) const;
  const std::vector<double>& betas() const { return betas_; }

 private:
  std::vector<double> betas_;
  std::vector<double> alpha_bars_;  // index t, with [0] = 1
};

// z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps, for 0 <= t <= T.
Tensor forward_noise(const Tensor& z0, std::size_t t, const Tensor& eps,
                     const NoiseSchedule& schedule);

// eps_hat = w * eps_cond + (1 - w) * eps_uncond
Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, double w);

// Deterministic DDIM update (eta = 0) from t to t_prev <= t.
Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, std::size_t t, std::size_t t_prev,
                 const NoiseSchedule& schedule);

// Uniformly strided descending timesteps: floor(k T / steps) for
// k = steps..1, followed by 0. Length steps + 1.
std::vector<std::size_t> ddim_timesteps(std::size_t total_steps, std::size_t sampling_steps);

}  // namespace freqbooth
