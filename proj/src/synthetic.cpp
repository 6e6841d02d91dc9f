#include "fastspec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fastspec/errors.hpp"

namespace fastspec {

SyntheticImage make_synthetic(const SyntheticSpec& spec) {
  if (spec.side < 2) throw ArgumentError("synthetic: side must be >= 2");
  if (!(spec.split > 0.0 && spec.split < 1.0)) throw ArgumentError("synthetic: split must lie in (0,1)");
  const std::size_t n = spec.side;
  const auto cut = static_cast<std::size_t>(std::lround(spec.split * static_cast<double>(n)));
  SyntheticImage out{GrayImage(n, n), GroundTruth{n, n, std::vector<int>(n * n, 0), 2}};
  const std::array<double, 4> quad_levels{spec.low, spec.high,
                                          spec.low + 0.5 * (spec.high - spec.low),
                                          std::min(1.0, spec.high + 0.15)};
  const std::size_t lo = (n - cut) / 2;  // rectangle spans [lo, lo + cut)
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      int cls = 0;
      switch (spec.kind) {
        case SyntheticKind::two_region:
          cls = x >= cut ? 1 : 0;
          break;
        case SyntheticKind::four_region:
          cls = (y >= cut ? 2 : 0) + (x >= cut ? 1 : 0);
          break;
        case SyntheticKind::rectangle:
          cls = (x >= lo && x < lo + cut && y >= lo && y < lo + cut) ? 1 : 0;
          break;
      }
      out.truth.labels[y * n + x] = cls;
      out.image.at(x, y) = spec.kind == SyntheticKind::four_region
                               ? quad_levels[static_cast<std::size_t>(cls)]
                               : (cls ? spec.high : spec.low);
    }
  }
  if (spec.kind == SyntheticKind::four_region) out.truth.classes = 4;
  if (spec.noise_sigma > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (double& v : out.image.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
  }
  return out;
}

}  // namespace fastspec
