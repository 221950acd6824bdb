#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freqbooth/tensor.hpp"

namespace freqbooth {

// Channel-wise orthonormal 2D DCT-II of a C x h x w latent:
//   F(n,u,v) = 2/sqrt(hw) m(u) m(v) sum_ij L(n,i,j) cos((2i+1)u pi/2h) cos((2j+1)v pi/2w)
// with m(0) = 1/sqrt(2), m(k>0) = 1. Evaluated separably (rows, then columns).
Tensor dct2(const Tensor& latent);
// Inverse of dct2 (the transpose of the orthonormal basis).
Tensor idct2(const Tensor& spectrum);

// n x n orthonormal DCT-II basis, row u = frequency, column i = sample.
Tensor dct_basis(std::size_t n);

enum class MaskKind { Mini, Low, Mid, High, All };

std::string_view to_string(MaskKind kind);
// Accepts mini|low|mid|high|all; throws ValidationError otherwise.
MaskKind parse_mask_kind(std::string_view name);
// As above, plus "none" -> nullopt.
std::optional<MaskKind> parse_optional_mask(std::string_view name);
std::string_view to_string(const std::optional<MaskKind>& kind);

// Absolute u+v thresholds. Not rescaled with latent resolution.
struct MaskThresholds {
  std::size_t mini_max = 10;  // mini: u+v <= mini_max
  std::size_t low_max = 20;   // low:  u+v <= low_max
  std::size_t mid_min = 20;   // mid:  mid_min < u+v <= mid_max
  std::size_t mid_max = 40;
  std::size_t high_min = 50;  // high: u+v >= high_min
};

struct FrequencyMask {
  MaskKind kind = MaskKind::All;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> bits;  // row-major h x w

  bool at(std::size_t u, std::size_t v) const { return bits[u * width + v] != 0; }
  std::size_t count() const;
};

bool mask_predicate(MaskKind kind, std::size_t u, std::size_t v,
                    const MaskThresholds& thresholds = {});
FrequencyMask build_mask(MaskKind kind, std::size_t height, std::size_t width,
                         const MaskThresholds& thresholds = {});

// Multiplies every channel of a spectrum by the mask.
Tensor apply_mask(const Tensor& spectrum, const FrequencyMask& mask);

// C_freq = idct2(dct2(L0) * mask)
Tensor make_control_signal(const Tensor& latent, MaskKind kind,
                           const MaskThresholds& thresholds = {});

// Index sums s with 0 <= s <= (h-1)+(w-1) selected by none of mini/low/mid/high.
std::vector<std::size_t> uncovered_index_sums(std::size_t height, std::size_t width,
                                              const MaskThresholds& thresholds = {});

}  // namespace freqbooth
