#include "fastspec/fsc.hpp"

#include <cmath>

#include "fastspec/errors.hpp"

namespace fastspec {

SparseSymMatrix superpixel_graph(const GrayImage& img, const EdgeMap& edges,
                                 const QuadTree& tree, const SegmentOptions& opts) {
  if (opts.mode == WeightMode::exact) {
    return superpixel_W_exact(img, edges, opts.affinity, tree, opts.pixel_cap);
  }
  return superpixel_W_approx(superpixel_stats(tree, img), edges, opts.affinity);
}

FscEmbedding fsc_embedding(const GrayImage& img, const SegmentOptions& opts,
                           StageTimings* timings) {
  StageTimings local;
  StageTimings& tm = timings ? *timings : local;
  FscEmbedding out;
  {
    StageTimer timer(tm.decompose);
    out.tree = decompose(img, opts.t, opts.min_block_side);
  }
  const std::size_t m = out.tree.superpixel_count();
  if (opts.k == 0 || opts.k > m) {
    throw ArgumentError("fsc: k = " + std::to_string(opts.k) + " exceeds the " +
                        std::to_string(m) + " superpixels (m); lower the threshold t");
  }
  NormalizedLaplacian lap;
  {
    StageTimer timer(tm.affinity);
    const EdgeMap edges = edge_map(img);
    out.w_tilde = superpixel_graph(img, edges, out.tree, opts);
    lap = degree_and_laplacian(out.w_tilde, opts.affinity.regularize_degree);
  }
  {
    StageTimer timer(tm.eigen);
    out.eigen = smallest_eigenpairs(lap.laplacian, opts.k, opts.eigen);
  }
  out.degree = std::move(lap.degree);
  out.g = out.eigen.vectors;
  for (std::size_t i = 0; i < m; ++i) {
    out.g.row(static_cast<Eigen::Index>(i)) /= std::sqrt(out.degree[i]);
  }
  out.g_p = lift_to_pixels(out.tree, out.g, opts.lift);
  return out;
}

namespace {

std::vector<int> broadcast(const QuadTree& tree, const std::vector<int>& per_superpixel) {
  const auto owner = tree.pixel_labels();
  std::vector<int> out(owner.size());
  for (std::size_t i = 0; i < owner.size(); ++i) {
    out[i] = per_superpixel[static_cast<std::size_t>(owner[i])];
  }
  return out;
}

}  // namespace

Segmentation fsc(const GrayImage& img, const SegmentOptions& opts) {
  Segmentation seg;
  StageTimer total(seg.timings.total);
  const FscEmbedding emb = fsc_embedding(img, opts, &seg.timings);
  std::vector<int> labels;
  {
    StageTimer timer(seg.timings.fcm);
    if (opts.cluster_superpixels) {
      const Eigen::MatrixXd points = opts.row_normalize ? normalize_rows(emb.g) : emb.g;
      labels = broadcast(emb.tree, cluster_rows(points, opts.k, opts.spectral_clusterer, opts));
    } else {
      const Eigen::MatrixXd points = opts.row_normalize ? normalize_rows(emb.g_p) : emb.g_p;
      labels = cluster_rows(points, opts.k, opts.spectral_clusterer, opts);
    }
  }
  seg.superpixels = emb.tree.superpixel_count();
  seg.tree_depth = emb.tree.depth;
  seg.labels = make_label_map(img, std::move(labels), opts.k);
  return seg;
}

}  // namespace fastspec
