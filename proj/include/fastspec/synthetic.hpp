#pragma once

#include <array>
#include <cstdint>

#include "fastspec/image.hpp"
#include "fastspec/metrics.hpp"

namespace fastspec {

enum class SyntheticKind {
  two_region,   // left | right split at `split` (fraction of the side)
  four_region,  // quadrants split at `split` both ways, four intensities
  rectangle,    // axis-aligned foreground rectangle on background
};

struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::two_region;
  std::size_t side = 64;
  double low = 0.2;
  double high = 0.8;
  double noise_sigma = 0.0;
  double split = 0.5;
  std::uint64_t seed = 1;
};

struct SyntheticImage {
  GrayImage image;
  GroundTruth truth;
};

/// Piecewise-constant image with exact ground truth; Gaussian noise is
/// added then clamped to [0,1].
SyntheticImage make_synthetic(const SyntheticSpec& spec);

}  // namespace fastspec
