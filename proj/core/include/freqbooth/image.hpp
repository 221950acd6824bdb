#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include "freqbooth/tensor.hpp"

namespace freqbooth {

// RGB image, pixels in [0, 1], stored as a 3 x H x W tensor.
class Image {
 public:
  Image() = default;
  // Throws ValidationError if pixels leave [0, 1] or the tensor is not 3 x H x W.
  explicit Image(Tensor pixels);
  static Image filled(std::size_t height, std::size_t width, double value);
  // Clamps to [0, 1]; non-finite values become 0.
  static Image from_unclamped(const Tensor& pixels);

  std::size_t height() const { return pixels_.dim(1); }
  std::size_t width() const { return pixels_.dim(2); }
  const Tensor& pixels() const { return pixels_; }

  friend bool operator==(const Image& a, const Image& b) { return a.pixels_ == b.pixels_; }

 private:
  Tensor pixels_;
};

// Binary Netpbm. Writing emits P6 with maxval 255 (round to nearest).
// Reading accepts P6 and P5 (grey replicated to RGB), maxval up to 65535,
// and '#' comments in the header.
std::string encode_ppm(const Image& image);
Image decode_ppm(std::string_view bytes);
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

// Same quantization as the writer, for comparing against on-disk images.
Image quantize_8bit(const Image& image);

}  // namespace freqbooth
