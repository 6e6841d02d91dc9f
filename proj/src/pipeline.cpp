#include "fastspec/pipeline.hpp"

#include "fastspec/errors.hpp"

namespace fastspec {

std::vector<int> cluster_rows(const Eigen::MatrixXd& points, std::size_t k, Clusterer which,
                              const SegmentOptions& opts) {
  if (which == Clusterer::kmeans) return kmeans(points, k, opts.seed).labels;
  return fuzzy_cmeans(points, k, opts.seed, opts.fcm).labels;
}

Eigen::MatrixXd normalize_rows(Eigen::MatrixXd x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (norm > 0.0) x.row(i) /= norm;
  }
  return x;
}

Eigen::MatrixXd lift_to_pixels(const QuadTree& tree, const Eigen::MatrixXd& x, LiftMode mode) {
  if (static_cast<std::size_t>(x.rows()) != tree.superpixel_count()) {
    throw ArgumentError("lift_to_pixels: row count differs from superpixel count");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tree.pixel_count()), x.cols());
  const std::size_t side = tree.image_side;
  for (std::size_t s = 0; s < tree.superpixel_count(); ++s) {
    const QuadNode& leaf = tree.leaf(s);
    const double scale =
        mode == LiftMode::indicator ? 1.0 / static_cast<double>(leaf.side) : 1.0;
    const Eigen::RowVectorXd row = scale * x.row(static_cast<Eigen::Index>(s));
    for (std::size_t y = leaf.y0; y < leaf.y0 + leaf.side; ++y) {
      for (std::size_t xx = leaf.x0; xx < leaf.x0 + leaf.side; ++xx) {
        out.row(static_cast<Eigen::Index>(y * side + xx)) = row;
      }
    }
  }
  return out;
}

LabelMap make_label_map(const GrayImage& img, std::vector<int> labels, std::size_t k) {
  LabelMap out;
  out.width = img.width;
  out.height = img.height;
  out.labels = std::move(labels);
  out.k = static_cast<int>(k);
  out.pad_right = img.pad_right;
  out.pad_bottom = img.pad_bottom;
  return out;
}

EigenResult smallest_eigenpairs(const SparseSymMatrix& a, std::size_t k,
                                const LanczosOptions& opts) {
  if (k == 0 || k > a.order()) {
    throw ArgumentError("requested " + std::to_string(k) + " eigenpairs of an order-" +
                        std::to_string(a.order()) + " matrix");
  }
  if (k >= a.order() || a.order() <= 64) return dense_smallest_k(a.to_dense(), k);
  return smallest_k(a, k, opts);
}

}  // namespace fastspec
