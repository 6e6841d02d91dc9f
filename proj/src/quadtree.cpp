#include "fastspec/quadtree.hpp"

#include <algorithm>
#include <bit>

#include "fastspec/errors.hpp"

namespace fastspec {

namespace {

struct BlockMoments {
  double mean;
  double variance;
};

// Two-pass population variance.
BlockMoments block_moments(const GrayImage& img, std::size_t x0, std::size_t y0,
                           std::size_t side) {
  double sum = 0.0;
  for (std::size_t y = y0; y < y0 + side; ++y) {
    for (std::size_t x = x0; x < x0 + side; ++x) sum += img.at(x, y);
  }
  const double count = static_cast<double>(side * side);
  const double mean = sum / count;
  double ss = 0.0;
  for (std::size_t y = y0; y < y0 + side; ++y) {
    for (std::size_t x = x0; x < x0 + side; ++x) {
      const double d = img.at(x, y) - mean;
      ss += d * d;
    }
  }
  return {mean, ss / count};
}

class Builder {
 public:
  Builder(const GrayImage& img, double t, std::size_t min_side, QuadTree& tree)
      : img_(img), t_(t), min_side_(min_side), tree_(tree) {}

  std::size_t build(std::size_t x0, std::size_t y0, std::size_t side, int level) {
    const std::size_t idx = tree_.nodes.size();
    tree_.nodes.emplace_back();
    const auto [mean, var] = block_moments(img_, x0, y0, side);
    {
      QuadNode& n = tree_.nodes[idx];
      n.level = level;
      n.x0 = x0;
      n.y0 = y0;
      n.side = side;
      n.mean = mean;
      n.variance = var;
      n.first_leaf = tree_.leaves.size();
    }
    tree_.depth = std::max(tree_.depth, level);
    if (var >= t_ && side > min_side_) {
      const std::size_t h = side / 2;
      const std::array<std::array<std::size_t, 2>, 4> origins{
          {{x0, y0}, {x0 + h, y0}, {x0, y0 + h}, {x0 + h, y0 + h}}};
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t child = build(origins[c][0], origins[c][1], h, level + 1);
        tree_.nodes[idx].children[c] = static_cast<std::int32_t>(child);
      }
    } else {
      tree_.nodes[idx].superpixel_id = static_cast<std::int32_t>(tree_.leaves.size());
      tree_.leaves.push_back(idx);
    }
    QuadNode& n = tree_.nodes[idx];
    n.leaf_count = tree_.leaves.size() - n.first_leaf;
    return idx;
  }

 private:
  const GrayImage& img_;
  double t_;
  std::size_t min_side_;
  QuadTree& tree_;
};

}  // namespace

QuadTree decompose(const GrayImage& img, double t, std::size_t min_block_side) {
  if (!img.is_square_pow2()) {
    throw ArgumentError("decompose: image must be square with power-of-two side");
  }
  if (!(t >= 0.0)) throw ArgumentError("decompose: threshold must be >= 0");
  if (min_block_side == 0 || !std::has_single_bit(min_block_side)) {
    throw ArgumentError("decompose: min_block_side must be a power of two >= 1");
  }
  QuadTree tree;
  tree.image_side = img.width;
  Builder(img, t, min_block_side, tree).build(0, 0, img.width, 1);
  return tree;
}

std::vector<std::int32_t> QuadTree::pixel_labels() const {
  std::vector<std::int32_t> out(pixel_count(), -1);
  for (std::size_t s = 0; s < leaves.size(); ++s) {
    const QuadNode& n = nodes[leaves[s]];
    for (std::size_t y = n.y0; y < n.y0 + n.side; ++y) {
      std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(y * image_side + n.x0),
                  n.side, static_cast<std::int32_t>(s));
    }
  }
  return out;
}

std::vector<SuperpixelStats> superpixel_stats(const QuadTree& tree, const GrayImage& img) {
  if (img.width != tree.image_side || img.height != tree.image_side) {
    throw ArgumentError("superpixel_stats: image does not match tree");
  }
  std::vector<SuperpixelStats> out(tree.superpixel_count());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const QuadNode& n = tree.leaf(s);
    const double half = static_cast<double>(n.side) / 2.0;
    out[s].cx = static_cast<double>(n.x0) + half - 0.5;
    out[s].cy = static_cast<double>(n.y0) + half - 0.5;
    out[s].size = n.side * n.side;
    out[s].mean_intensity = n.mean;
  }
  return out;
}

std::vector<std::size_t> nodes_at_level(const QuadTree& tree, int level) {
  if (level < 1 || level > tree.depth) {
    throw ArgumentError("nodes_at_level: level " + std::to_string(level) +
                        " outside [1, " + std::to_string(tree.depth) + "]");
  }
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    const QuadNode& n = tree.nodes[i];
    if (n.level == level || n.is_leaf()) {
      out.push_back(i);
      continue;
    }
    for (auto c : n.children) stack.push_back(static_cast<std::size_t>(c));
  }
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    const QuadNode& na = tree.nodes[a];
    const QuadNode& nb = tree.nodes[b];
    return std::tie(na.y0, na.x0) < std::tie(nb.y0, nb.x0);
  });
  return out;
}

}  // namespace fastspec
