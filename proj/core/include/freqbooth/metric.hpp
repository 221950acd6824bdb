#pragma once

#include <array>
#include <cstddef>

#include "freqbooth/image.hpp"

namespace freqbooth {

inline constexpr std::size_t kOrientationBins = 16;

// Luma gradient-orientation histogram over [0, pi), each interior pixel
// weighted by its squared central-difference gradient magnitude.
std::array<double, kOrientationBins> orientation_histogram(const Image& image);

struct IdentityScore {
  double value = 0.0;       // cosine similarity in [-1, 1]
  bool degenerate = false;  // an input had no gradient energy; value is 0
};

// Cosine similarity of the two orientation histograms. Symmetric.
IdentityScore identity_metric(const Image& generated, const Image& reference);

}  // namespace freqbooth
