#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "fastspec/image.hpp"

namespace fastspec {

/// One square block of the decomposition. Children are indices into
/// QuadTree::nodes in the order upper-left, upper-right, lower-left,
/// lower-right; -1 for leaves.
struct QuadNode {
  int level = 1;
  std::size_t x0 = 0;
  std::size_t y0 = 0;
  std::size_t side = 0;
  std::array<std::int32_t, 4> children{-1, -1, -1, -1};
  std::int32_t superpixel_id = -1;
  double mean = 0.0;
  double variance = 0.0;
  // Superpixel ids under this node form the range [first_leaf, first_leaf + leaf_count).
  std::size_t first_leaf = 0;
  std::size_t leaf_count = 0;

  bool is_leaf() const { return children[0] < 0; }
};

struct QuadTree {
  std::vector<QuadNode> nodes;  // nodes[0] is the root
  std::vector<std::size_t> leaves;  // node index per superpixel id
  int depth = 0;
  std::size_t image_side = 0;

  const QuadNode& root() const { return nodes.front(); }
  const QuadNode& leaf(std::size_t superpixel) const { return nodes[leaves[superpixel]]; }
  std::size_t superpixel_count() const { return leaves.size(); }
  std::size_t pixel_count() const { return image_side * image_side; }

  /// Superpixel id of every pixel, row-major.
  std::vector<std::int32_t> pixel_labels() const;
};

/// Splits a block iff its population variance is >= t and its side exceeds
/// min_block_side. Leaves are numbered in depth-first child order, so the
/// superpixels under any node occupy a contiguous id range.
QuadTree decompose(const GrayImage& img, double t, std::size_t min_block_side = 2);

struct SuperpixelStats {
  double cx = 0.0;  // block center, pixels
  double cy = 0.0;
  double mean_intensity = 0.0;
  std::size_t size = 0;
};

std::vector<SuperpixelStats> superpixel_stats(const QuadTree& tree, const GrayImage& img);

/// The cut of the tree at level l: nodes whose level equals l plus leaves
/// that terminate above l (leaf passthrough), ordered by (y0, x0).
/// Returns node indices.
std::vector<std::size_t> nodes_at_level(const QuadTree& tree, int level);

}  // namespace fastspec
