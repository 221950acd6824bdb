#pragma once

#include <cstddef>

#include "freqbooth/image.hpp"
#include "freqbooth/tensor.hpp"

namespace freqbooth {

// Frozen linear stand-in for a VAE. Each f x f x 3 patch is projected onto
// four orthonormal patterns: luma mean, luma horizontal ramp, luma vertical
// ramp, red-minus-blue chroma. Decoding applies the transpose, so
// decode(encode(x)) is the orthogonal projection onto the codec range and
// encode(decode(z)) == z.
class ToyLatentCodec {
 public:
  static constexpr std::size_t kChannels = 4;

  explicit ToyLatentCodec(std::size_t patch = 4);

  std::size_t patch() const { return patch_; }
  // kChannels x (3 f f), row-major over (channel, y, x) of a patch.
  const Tensor& analysis() const { return analysis_; }

  // 3 x H x W -> 4 x H/f x W/f. Throws DimensionError on indivisible sizes.
  Tensor encode(const Tensor& pixels) const;
  Tensor encode(const Image& image) const { return encode(image.pixels()); }
  // 4 x h x w -> 3 x hf x wf, unclamped.
  Tensor decode(const Tensor& latent) const;

 private:
  std::size_t patch_;
  Tensor analysis_;
};

// Flattens patch (pi, pj) of a 3 x H x W tensor in (channel, y, x) order.
Tensor extract_patch(const Tensor& pixels, std::size_t patch, std::size_t pi, std::size_t pj);

}  // namespace freqbooth
