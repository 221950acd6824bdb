#include "freqbooth/schedule.hpp"

#include <cmath>

#include "freqbooth/errors.hpp"

namespace freqbooth {

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
  if (steps < 1) throw ValidationError("noise schedule needs at least one step");
  const double scale = 1000.0 / static_cast<double>(steps);
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[i] = scale * (beta_start + frac * (beta_end - beta_start));
  }
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule::NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
  if (betas_.empty()) throw ValidationError("noise schedule needs at least one step");
  double prev = 0.0;
  for (double b : betas_) {
    if (!(b > 0.0 && b < 1.0)) throw ValidationError("betas must lie in (0, 1)");
    if (b < prev) throw ValidationError("betas must be non-decreasing");
    prev = b;
  }
  alpha_bars_.resize(betas_.size() + 1);
  alpha_bars_[0] = 1.0;
  for (std::size_t t = 1; t <= betas_.size(); ++t) {
    alpha_bars_[t] = alpha_bars_[t - 1] * (1.0 - betas_[t - 1]);
  }
}

double NoiseSchedule::beta(std::size_t t) const {
  if (t < 1 || t > betas_.size()) {
    throw ValidationError("timestep " + std::to_string(t) + " outside [1, " +
                          std::to_string(betas_.size()) + "]");
  }
  return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(std::size_t t) const {
  if (t > betas_.size()) {
    throw ValidationError("timestep " + std::to_string(t) + " outside [0, " +
                          std::to_string(betas_.size()) + "]");
  }
  return alpha_bars_[t];
}

Tensor forward_noise(const Tensor& z0, std::size_t t, const Tensor& eps,
                     const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(t);
  if (z0.shape() != eps.shape()) {
    throw DimensionError("forward_noise: z0 " + shape_string(z0.shape()) + " vs eps " +
                         shape_string(eps.shape()));
  }
  const double a = std::sqrt(ab), s = std::sqrt(1.0 - ab);
  Tensor out(z0.shape());
  for (std::size_t i = 0; i < z0.size(); ++i) out[i] = a * z0[i] + s * eps[i];
  return out;
}

Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_uncond, double w) {
  if (eps_cond.shape() != eps_uncond.shape()) {
    throw DimensionError("cfg_combine: " + shape_string(eps_cond.shape()) + " vs " +
                         shape_string(eps_uncond.shape()));
  }
  if (!std::isfinite(w)) throw ValidationError("guidance scale must be finite");
  Tensor out(eps_cond.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = w * eps_cond[i] + (1.0 - w) * eps_uncond[i];
  }
  return out;
}

Tensor ddim_step(const Tensor& z_t, const Tensor& eps_hat, std::size_t t, std::size_t t_prev,
                 const NoiseSchedule& schedule) {
  if (t_prev > t) {
    throw ValidationError("ddim_step: t_prev " + std::to_string(t_prev) + " exceeds t " +
                          std::to_string(t));
  }
  if (z_t.shape() != eps_hat.shape()) {
    throw DimensionError("ddim_step: z " + shape_string(z_t.shape()) + " vs eps " +
                         shape_string(eps_hat.shape()));
  }
  if (t_prev == t) return z_t;
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t_prev);
  if (!(ab > 0.0)) throw NumericalError("ddim_step: alpha_bar is zero at t = " + std::to_string(t));
  const double sa = std::sqrt(ab), s1 = std::sqrt(1.0 - ab);
  const double sp = std::sqrt(ab_prev), s1p = std::sqrt(1.0 - ab_prev);
  Tensor out(z_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x0 = (z_t[i] - s1 * eps_hat[i]) / sa;
    out[i] = sp * x0 + s1p * eps_hat[i];
  }
  return out;
}

std::vector<std::size_t> ddim_timesteps(std::size_t total_steps, std::size_t sampling_steps) {
  if (sampling_steps < 1) throw ValidationError("sampling steps must be >= 1");
  if (sampling_steps > total_steps) {
    throw ValidationError("sampling steps " + std::to_string(sampling_steps) +
                          " exceed schedule length " + std::to_string(total_steps));
  }
  std::vector<std::size_t> ts;
  ts.reserve(sampling_steps + 1);
  for (std::size_t k = sampling_steps; k >= 1; --k) ts.push_back(k * total_steps / sampling_steps);
  ts.push_back(0);
  return ts;
}

}  // namespace freqbooth
