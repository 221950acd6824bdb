#include "freqbooth/dct.hpp"

#include <cmath>
#include <numbers>

#include "freqbooth/errors.hpp"

namespace freqbooth {

Tensor dct_basis(std::size_t n) {
  Tensor basis({n, n});
  const double nn = static_cast<double>(n);
  for (std::size_t u = 0; u < n; ++u) {
    const double m = u == 0 ? 1.0 / std::numbers::sqrt2 : 1.0;
    const double s = std::sqrt(2.0 / nn) * m;
    for (std::size_t i = 0; i < n; ++i) {
      basis(u, i) = s * std::cos((2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(u) *
                                 std::numbers::pi / (2.0 * nn));
    }
  }
  return basis;
}

namespace {

// out(n) = left * in(n) * right^T per channel
Tensor separable(const Tensor& in, const Tensor& left, const Tensor& right) {
  require_rank(in, 3, "dct");
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  Tensor out({c, h, w});
  std::vector<double> tmp(h * w);
  for (std::size_t n = 0; n < c; ++n) {
    // rows: tmp(i, v) = sum_j in(n,i,j) right(v,j)
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t v = 0; v < w; ++v) {
        double acc = 0.0;
        for (std::size_t j = 0; j < w; ++j) acc += in(n, i, j) * right(v, j);
        tmp[i * w + v] = acc;
      }
    }
    // columns: out(u, v) = sum_i left(u,i) tmp(i,v)
    for (std::size_t u = 0; u < h; ++u) {
      for (std::size_t v = 0; v < w; ++v) {
        double acc = 0.0;
        for (std::size_t i = 0; i < h; ++i) acc += left(u, i) * tmp[i * w + v];
        out(n, u, v) = acc;
      }
    }
  }
  return out;
}

}  // namespace

Tensor dct2(const Tensor& latent) {
  require_rank(latent, 3, "dct2");
  return separable(latent, dct_basis(latent.dim(1)), dct_basis(latent.dim(2)));
}

Tensor idct2(const Tensor& spectrum) {
  require_rank(spectrum, 3, "idct2");
  return separable(spectrum, transpose(dct_basis(spectrum.dim(1))),
                   transpose(dct_basis(spectrum.dim(2))));
}

std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::Mini: return "mini";
    case MaskKind::Low: return "low";
    case MaskKind::Mid: return "mid";
    case MaskKind::High: return "high";
    case MaskKind::All: return "all";
  }
  return "all";
}

std::string_view to_string(const std::optional<MaskKind>& kind) {
  return kind ? to_string(*kind) : std::string_view("none");
}

MaskKind parse_mask_kind(std::string_view name) {
  if (name == "mini") return MaskKind::Mini;
  if (name == "low") return MaskKind::Low;
  if (name == "mid") return MaskKind::Mid;
  if (name == "high") return MaskKind::High;
  if (name == "all") return MaskKind::All;
  throw ValidationError("unknown mask kind '" + std::string(name) +
                        "' (expected mini|low|mid|high|all)");
}

std::optional<MaskKind> parse_optional_mask(std::string_view name) {
  if (name == "none") return std::nullopt;
  return parse_mask_kind(name);
}

bool mask_predicate(MaskKind kind, std::size_t u, std::size_t v, const MaskThresholds& t) {
  const std::size_t s = u + v;
  switch (kind) {
    case MaskKind::Mini: return s <= t.mini_max;
    case MaskKind::Low: return s <= t.low_max;
    case MaskKind::Mid: return s > t.mid_min && s <= t.mid_max;
    case MaskKind::High: return s >= t.high_min;
    case MaskKind::All: return true;
  }
  return false;
}

std::size_t FrequencyMask::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b;
  return n;
}

FrequencyMask build_mask(MaskKind kind, std::size_t height, std::size_t width,
                         const MaskThresholds& thresholds) {
  if (height == 0 || width == 0) throw DimensionError("build_mask: h and w must be >= 1");
  FrequencyMask mask{kind, height, width, std::vector<std::uint8_t>(height * width, 0)};
  for (std::size_t u = 0; u < height; ++u)
    for (std::size_t v = 0; v < width; ++v)
      mask.bits[u * width + v] = mask_predicate(kind, u, v, thresholds) ? 1 : 0;
  return mask;
}

Tensor apply_mask(const Tensor& spectrum, const FrequencyMask& mask) {
  require_rank(spectrum, 3, "apply_mask");
  if (spectrum.dim(1) != mask.height || spectrum.dim(2) != mask.width) {
    throw DimensionError("apply_mask: spectrum " + shape_string(spectrum.shape()) + " vs mask " +
                         std::to_string(mask.height) + "x" + std::to_string(mask.width));
  }
  Tensor out = spectrum;
  for (std::size_t n = 0; n < spectrum.dim(0); ++n)
    for (std::size_t u = 0; u < mask.height; ++u)
      for (std::size_t v = 0; v < mask.width; ++v)
        if (!mask.at(u, v)) out(n, u, v) = 0.0;
  return out;
}

Tensor make_control_signal(const Tensor& latent, MaskKind kind, const MaskThresholds& thresholds) {
  require_rank(latent, 3, "make_control_signal");
  const auto mask = build_mask(kind, latent.dim(1), latent.dim(2), thresholds);
  return idct2(apply_mask(dct2(latent), mask));
}

std::vector<std::size_t> uncovered_index_sums(std::size_t height, std::size_t width,
                                              const MaskThresholds& thresholds) {
  std::vector<std::size_t> gap;
  const std::size_t max_sum = (height - 1) + (width - 1);
  for (std::size_t s = 0; s <= max_sum; ++s) {
    bool covered = false;
    for (auto k : {MaskKind::Mini, MaskKind::Low, MaskKind::Mid, MaskKind::High}) {
      covered = covered || mask_predicate(k, s, 0, thresholds);
    }
    if (!covered) gap.push_back(s);
  }
  return gap;
}

}  // namespace freqbooth
