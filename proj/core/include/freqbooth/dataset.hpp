#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "freqbooth/image.hpp"
#include "freqbooth/rng.hpp"

namespace freqbooth {

// Procedural identity-texture dataset. Each identity is a striped, spotted
// disk with two base colours; contexts are background classes
// (plain, gradient, noise, checker) and double as text condition ids.
struct ToyDatasetSpec {
  std::size_t n_identities = 16;
  std::size_t n_contexts = 4;
  std::size_t image_size = 32;
  std::size_t train_size = 512;
  std::size_t test_size = 64;

  void validate() const;
};

struct IdentityParams {
  double theta = 0.0;   // stripe normal angle in [0, pi)
  double period = 0.0;  // stripe period in pixels at 32 px
  double spot_density = 0.0;
  double phase = 0.0;
  std::array<double, 3> color_a{};  // bright
  std::array<double, 3> color_b{};  // dark
};

struct Sample {
  Image image;
  Image reference;  // same identity, plain background, independent pose jitter
  std::size_t identity = 0;
  std::size_t context = 0;
};

struct Dataset {
  ToyDatasetSpec spec;
  std::uint64_t seed = 0;
  std::vector<Sample> train;
  std::vector<Sample> test;
};

inline constexpr const char* kContextNames[] = {"plain", "gradient", "noise", "checker"};

// Deterministic in (seed, identity). Stripe angles are stratified over
// [0, pi) through a seeded permutation so identities stay distinguishable.
IdentityParams identity_params(const ToyDatasetSpec& spec, std::uint64_t seed,
                               std::size_t identity);

// Draws pose jitter (centre shift, angle wobble), spots and background noise
// from `jitter`.
Image render_identity(const IdentityParams& params, std::size_t context, std::size_t size,
                      RngState& jitter);

Dataset generate_dataset(const ToyDatasetSpec& spec, std::uint64_t seed);

// Pure stripes at angle theta (radians) and period (pixels), 3 x size x size.
Image stripe_image(std::size_t size, double theta, double period, double phase = 0.0);

}  // namespace freqbooth
