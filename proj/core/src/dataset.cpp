#include "freqbooth/dataset.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "freqbooth/errors.hpp"

namespace freqbooth {

void ToyDatasetSpec::validate() const {
  if (n_identities == 0) throw ValidationError("n_identities must be >= 1");
  if (n_contexts == 0 || n_contexts > 4) throw ValidationError("n_contexts must be in [1, 4]");
  if (image_size < 8) throw ValidationError("image_size must be >= 8");
  if (train_size == 0) throw ValidationError("train_size must be >= 1");
}

namespace {

constexpr std::uint64_t kPermStream = 0x7065726dULL;
constexpr std::uint64_t kIdentityStream = 0x6964656eULL;

std::vector<std::size_t> angle_slots(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  RngState rng{derive_seed(seed, kPermStream), 0};
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  return perm;
}

RngState sample_rng(std::uint64_t seed, std::size_t split, std::size_t index, std::size_t which) {
  const std::uint64_t stream = (static_cast<std::uint64_t>(split) << 40) ^
                               (static_cast<std::uint64_t>(index) << 2) ^ which;
  return RngState{derive_seed(seed, stream), 0};
}

}  // namespace

IdentityParams identity_params(const ToyDatasetSpec& spec, std::uint64_t seed,
                               std::size_t identity) {
  const auto slots = angle_slots(spec.n_identities, seed);
  RngState rng{derive_seed(seed, kIdentityStream + 1000003ULL * identity), 0};
  IdentityParams p;
  const double slot = static_cast<double>(slots.at(identity));
  p.theta = (slot + 0.5 + rng.uniform(-0.25, 0.25)) * std::numbers::pi /
            static_cast<double>(spec.n_identities);
  p.period = rng.uniform(8.0, 14.0);
  p.spot_density = rng.uniform(0.0, 0.01);
  p.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (auto& c : p.color_a) c = rng.uniform(0.65, 1.0);
  for (auto& c : p.color_b) c = rng.uniform(0.0, 0.35);
  return p;
}

Image render_identity(const IdentityParams& p, std::size_t context, std::size_t size,
                      RngState& jitter) {
  const double S = static_cast<double>(size);
  const double unit = S / 32.0;
  const double cx = S / 2.0 + jitter.uniform(-2.0, 2.0) * unit;
  const double cy = S / 2.0 + jitter.uniform(-2.0, 2.0) * unit;
  const double theta = p.theta + jitter.uniform(-0.05, 0.05);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double period = p.period * unit;
  const double radius = 15.0 * unit;
  const std::size_t cell = std::max<std::size_t>(1, size / 4);

  Tensor px({3, size, size});
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double y = static_cast<double>(i) + 0.5, x = static_cast<double>(j) + 0.5;
      // Draws are taken unconditionally so the stream layout is fixed.
      const bool spot = jitter.uniform() < p.spot_density;
      std::array<double, 3> noise{};
      for (auto& n : noise) n = jitter.uniform(-1.0, 1.0);

      std::array<double, 3> bg{};
      for (std::size_t c = 0; c < 3; ++c) {
        switch (context) {
          case 0: bg[c] = 0.5; break;
          case 1: bg[c] = 0.35 + 0.3 * y / S; break;
          case 2: bg[c] = 0.5 + 0.05 * noise[c]; break;
          default: bg[c] = static_cast<double>((i / cell + j / cell) % 2) * 0.2 + 0.4; break;
        }
      }
      const double dx = x - cx, dy = y - cy;
      const bool inside = dx * dx + dy * dy < radius * radius;
      for (std::size_t c = 0; c < 3; ++c) {
        double v = bg[c];
        if (inside) {
          const double s =
              std::cos(2.0 * std::numbers::pi * (dx * ct + dy * st) / period + p.phase);
          const double w = 0.5 * (s + 1.0);
          v = w * p.color_a[c] + (1.0 - w) * p.color_b[c];
          if (spot) v = 1.0 - v;
        }
        px(c, i, j) = v;
      }
    }
  }
  return Image(std::move(px));
}

Dataset generate_dataset(const ToyDatasetSpec& spec, std::uint64_t seed) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  ds.seed = seed;
  std::vector<IdentityParams> params;
  for (std::size_t i = 0; i < spec.n_identities; ++i) params.push_back(identity_params(spec, seed, i));

  auto build = [&](std::size_t split, std::size_t count, std::vector<Sample>& out) {
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      Sample s;
      s.identity = k % spec.n_identities;
      s.context = (k / spec.n_identities) % spec.n_contexts;
      RngState image_rng = sample_rng(seed, split, k, 0);
      RngState ref_rng = sample_rng(seed, split, k, 1);
      s.image = render_identity(params[s.identity], s.context, spec.image_size, image_rng);
      s.reference = render_identity(params[s.identity], 0, spec.image_size, ref_rng);
      out.push_back(std::move(s));
    }
  };
  build(0, spec.train_size, ds.train);
  build(1, spec.test_size, ds.test);
  return ds;
}

Image stripe_image(std::size_t size, double theta, double period, double phase) {
  Tensor px({3, size, size});
  const double ct = std::cos(theta), st = std::sin(theta);
  for (std::size_t i = 0; i < size; ++i) {
    for (std::size_t j = 0; j < size; ++j) {
      const double x = static_cast<double>(j) + 0.5, y = static_cast<double>(i) + 0.5;
      const double v =
          0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * (x * ct + y * st) / period + phase);
      for (std::size_t c = 0; c < 3; ++c) px(c, i, j) = v;
    }
  }
  return Image(std::move(px));
}

}  // namespace freqbooth
