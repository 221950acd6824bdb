#pragma once

#include <cstdint>

#include "freqbooth/tensor.hpp"

namespace freqbooth {

// Counter-based generator: draw k of a stream is a pure function of
// (seed, k). Every draw, uniform or normal, consumes exactly one counter slot.
// A normal draw hashes (seed, k) into two lanes and applies Box-Muller
// (cosine branch only).
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  std::uint64_t next_u64();
  // Uniform in the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  friend bool operator==(const RngState&, const RngState&) = default;
};

// Stateless mixing used by RngState; exposed for deriving child seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// i.i.d. N(0, 1) draws; advances rng.counter by the element count.
Tensor gaussian(const Shape& shape, RngState& rng);

}  // namespace freqbooth
