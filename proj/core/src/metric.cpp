#include "freqbooth/metric.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "freqbooth/errors.hpp"

namespace freqbooth {

std::array<double, kOrientationBins> orientation_histogram(const Image& image) {
  const std::size_t h = image.height(), w = image.width();
  const Tensor& p = image.pixels();
  auto luma = [&](std::size_t i, std::size_t j) {
    return (p(0, i, j) + p(1, i, j) + p(2, i, j)) / 3.0;
  };
  std::array<double, kOrientationBins> hist{};
  for (std::size_t i = 1; i + 1 < h; ++i) {
    for (std::size_t j = 1; j + 1 < w; ++j) {
      const double gx = 0.5 * (luma(i, j + 1) - luma(i, j - 1));
      const double gy = 0.5 * (luma(i + 1, j) - luma(i - 1, j));
      const double energy = gx * gx + gy * gy;
      if (energy == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += std::numbers::pi;
      if (angle >= std::numbers::pi) angle -= std::numbers::pi;
      const auto bin = std::min<std::size_t>(
          kOrientationBins - 1,
          static_cast<std::size_t>(angle / std::numbers::pi * static_cast<double>(kOrientationBins)));
      hist[bin] += energy;
    }
  }
  return hist;
}

IdentityScore identity_metric(const Image& generated, const Image& reference) {
  if (generated.height() != reference.height() || generated.width() != reference.width()) {
    throw DimensionError("identity_metric: images differ in size");
  }
  const auto a = orientation_histogram(generated);
  const auto b = orientation_histogram(reference);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < kOrientationBins; ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {dot / (std::sqrt(na) * std::sqrt(nb)), false};
}

}  // namespace freqbooth
