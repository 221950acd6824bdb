#include "freqbooth/rng.hpp"

#include <cmath>
#include <numbers>

namespace freqbooth {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t lane(std::uint64_t seed, std::uint64_t counter, std::uint64_t which) {
  return mix64(mix64(seed ^ (which * 0xD1B54A32D192ED03ULL)) + counter * kGolden);
}

double to_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

std::uint64_t RngState::next_u64() { return lane(seed, counter++, 0); }

double RngState::uniform() { return to_unit(next_u64()); }

double RngState::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngState::below(std::uint64_t n) {
  if (n == 0) return 0;
  // 53-bit uniform scaled to [0, n); exact enough for the index ranges used here.
  const auto k = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return k < n ? k : n - 1;
}

double RngState::normal() {
  const double u1 = to_unit(lane(seed, counter, 1));
  const double u2 = to_unit(lane(seed, counter, 2));
  ++counter;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Tensor gaussian(const Shape& shape, RngState& rng) {
  Tensor out(shape);
  for (auto& v : out.data()) v = rng.normal();
  return out;
}

}  // namespace freqbooth
