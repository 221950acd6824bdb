#include "freqbooth/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "freqbooth/errors.hpp"

namespace freqbooth {

Image::Image(Tensor pixels) : pixels_(std::move(pixels)) {
  if (pixels_.rank() != 3 || pixels_.dim(0) != 3) {
    throw ValidationError("image tensor must be 3 x H x W, got " + shape_string(pixels_.shape()));
  }
  for (double v : pixels_.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("image pixel outside [0, 1]");
  }
}

Image Image::filled(std::size_t height, std::size_t width, double value) {
  return Image(Tensor({3, height, width}, value));
}

Image Image::from_unclamped(const Tensor& pixels) {
  Tensor t = pixels;
  for (auto& v : t.data()) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  return Image(std::move(t));
}

namespace {

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ValidationError("malformed Netpbm header");
    }
    std::size_t value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (value > (1u << 24)) throw ValidationError("Netpbm header value too large");
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw ValidationError("malformed Netpbm header terminator");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

std::string encode_ppm(const Image& image) {
  const std::size_t h = image.height(), w = image.width();
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + 3 * h * w);
  const Tensor& p = image.pixels();
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < w; ++j)
      for (std::size_t c = 0; c < 3; ++c) out.push_back(static_cast<char>(to_byte(p(c, i, j))));
  return out;
}

Image decode_ppm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
    throw ValidationError("not a binary Netpbm image (expected P6 or P5 magic)");
  }
  const bool grey = bytes[1] == '5';
  HeaderReader header(bytes);
  const std::size_t w = header.next_int();
  const std::size_t h = header.next_int();
  const std::size_t maxval = header.next_int();
  if (w == 0 || h == 0) throw ValidationError("Netpbm image has zero size");
  if (maxval == 0 || maxval > 65535) throw ValidationError("Netpbm maxval out of range");
  const std::size_t offset = header.raster_offset();
  const std::size_t channels = grey ? 1 : 3;
  const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
  const std::size_t need = h * w * channels * sample_bytes;
  if (bytes.size() < offset + need) throw ValidationError("Netpbm raster is truncated");

  Tensor px({3, h, w});
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  const double scale = static_cast<double>(maxval);
  std::size_t k = 0;
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      for (std::size_t c = 0; c < channels; ++c) {
        std::size_t sample = raster[k++];
        if (sample_bytes == 2) sample = (sample << 8) | raster[k++];
        if (sample > maxval) throw ValidationError("Netpbm sample exceeds maxval");
        const double v = static_cast<double>(sample) / scale;
        if (grey) {
          px(0, i, j) = px(1, i, j) = px(2, i, j) = v;
        } else {
          px(c, i, j) = v;
        }
      }
    }
  }
  return Image(std::move(px));
}

void write_ppm(const std::filesystem::path& path, const Image& image) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path.string() + "' for writing");
  const std::string bytes = encode_ppm(image);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ValidationError("failed writing '" + path.string() + "'");
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open image '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_ppm(bytes);
}

Image quantize_8bit(const Image& image) {
  Tensor t = image.pixels();
  for (auto& v : t.data()) v = static_cast<double>(to_byte(v)) / 255.0;
  return Image(std::move(t));
}

}  // namespace freqbooth
