#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fastspec/image.hpp"

namespace fastspec {

/// Per-pixel ground-truth classes; 0 is background, 1..classes-1 are objects.
struct GroundTruth {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<int> labels;
  int classes = 0;

  bool is_binary() const { return classes <= 2; }
};

/// Reads a PNG/PGM mask: 0 is background, each distinct nonzero value is an
/// object (numbered in increasing order of value).
GroundTruth load_ground_truth(const std::filesystem::path& path);

/// Nearest-neighbor resampling of a mask to side x side.
GroundTruth resize_nearest(const GroundTruth& gt, std::size_t side);

/// Contingency counts m[p][g] between predicted and true labels.
std::vector<std::vector<std::uint64_t>> contingency(const LabelMap& pred, const GroundTruth& gt);

/// Best bijection from predicted labels to ground-truth labels by optimal
/// assignment on the contingency table. Entry p holds the matched gt label,
/// or -1 when the prediction has more labels than the ground truth.
std::vector<int> best_mapping(const LabelMap& pred, const GroundTruth& gt);

double acc(const LabelMap& pred, const GroundTruth& gt);

/// (N + 2T - P - Q) / N over the contingency table.
double rand_index(const LabelMap& pred, const GroundTruth& gt);

/// Dice of the foreground after mapping predictions with best_mapping.
/// `literal` drops the factor 2 of the standard definition.
double dice(const LabelMap& pred, const GroundTruth& gt, bool literal = false);

/// Dice per object class (1..classes-1), averaged.
double mean_object_dice(const LabelMap& pred, const GroundTruth& gt, bool literal = false);

/// Minimum-cost assignment on a square cost matrix; returns column per row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost);

}  // namespace fastspec
