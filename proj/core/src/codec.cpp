#include "freqbooth/codec.hpp"

#include <cmath>

#include "freqbooth/errors.hpp"

namespace freqbooth {

ToyLatentCodec::ToyLatentCodec(std::size_t patch) : patch_(patch) {
  if (patch < 2) throw ValidationError("codec patch size must be >= 2");
  const std::size_t f = patch, area = f * f;
  analysis_ = Tensor({kChannels, 3 * area});
  const double centre = (static_cast<double>(f) - 1.0) / 2.0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < f; ++y) {
      for (std::size_t x = 0; x < f; ++x) {
        const std::size_t col = c * area + y * f + x;
        analysis_(0, col) = 1.0;
        analysis_(1, col) = static_cast<double>(x) - centre;
        analysis_(2, col) = static_cast<double>(y) - centre;
        analysis_(3, col) = c == 0 ? 1.0 : (c == 2 ? -1.0 : 0.0);
      }
    }
  }
  for (std::size_t r = 0; r < kChannels; ++r) {
    double norm = 0.0;
    for (std::size_t k = 0; k < analysis_.cols(); ++k) norm += analysis_(r, k) * analysis_(r, k);
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < analysis_.cols(); ++k) analysis_(r, k) /= norm;
  }
}

Tensor extract_patch(const Tensor& pixels, std::size_t patch, std::size_t pi, std::size_t pj) {
  Tensor out({3 * patch * patch});
  std::size_t k = 0;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < patch; ++y)
      for (std::size_t x = 0; x < patch; ++x) out[k++] = pixels(c, pi * patch + y, pj * patch + x);
  return out;
}

Tensor ToyLatentCodec::encode(const Tensor& pixels) const {
  if (pixels.rank() != 3 || pixels.dim(0) != 3) {
    throw DimensionError("encode_latent: expected 3 x H x W, got " + shape_string(pixels.shape()));
  }
  const std::size_t H = pixels.dim(1), W = pixels.dim(2), f = patch_;
  if (H % f != 0 || W % f != 0) {
    throw DimensionError("encode_latent: image " + std::to_string(H) + "x" + std::to_string(W) +
                         " is not divisible by the patch size " + std::to_string(f));
  }
  const std::size_t h = H / f, w = W / f, area = f * f;
  Tensor z({kChannels, h, w});
  for (std::size_t pi = 0; pi < h; ++pi) {
    for (std::size_t pj = 0; pj < w; ++pj) {
      for (std::size_t r = 0; r < kChannels; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < 3; ++c)
          for (std::size_t y = 0; y < f; ++y)
            for (std::size_t x = 0; x < f; ++x)
              acc += analysis_(r, c * area + y * f + x) * pixels(c, pi * f + y, pj * f + x);
        z(r, pi, pj) = acc;
      }
    }
  }
  return z;
}

Tensor ToyLatentCodec::decode(const Tensor& latent) const {
  if (latent.rank() != 3 || latent.dim(0) != kChannels) {
    throw DimensionError("decode_latent: expected 4 x h x w, got " + shape_string(latent.shape()));
  }
  const std::size_t h = latent.dim(1), w = latent.dim(2), f = patch_, area = f * f;
  Tensor px({3, h * f, w * f});
  for (std::size_t pi = 0; pi < h; ++pi) {
    for (std::size_t pj = 0; pj < w; ++pj) {
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t y = 0; y < f; ++y) {
          for (std::size_t x = 0; x < f; ++x) {
            double acc = 0.0;
            for (std::size_t r = 0; r < kChannels; ++r)
              acc += analysis_(r, c * area + y * f + x) * latent(r, pi, pj);
            px(c, pi * f + y, pj * f + x) = acc;
          }
        }
      }
    }
  }
  return px;
}

}  // namespace freqbooth
