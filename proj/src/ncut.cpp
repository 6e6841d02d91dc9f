#include "fastspec/ncut.hpp"

#include <cmath>

#include "fastspec/errors.hpp"

namespace fastspec {

NcutEmbedding ncut_embedding(const GrayImage& img, const SegmentOptions& opts,
                             StageTimings* timings) {
  StageTimings local;
  StageTimings& tm = timings ? *timings : local;
  const std::size_t n = img.size();
  if (n > opts.ncut_cap) {
    throw CapacityError("ncut: " + std::to_string(n) + " pixels exceeds the Ncut cap of " +
                        std::to_string(opts.ncut_cap) + "; use --algorithm fsc or mfsc");
  }
  if (opts.k == 0 || opts.k > n) {
    throw ArgumentError("ncut: k must lie in [1, " + std::to_string(n) + "]");
  }
  NcutEmbedding out;
  NormalizedLaplacian lap;
  {
    StageTimer timer(tm.affinity);
    const EdgeMap edges = edge_map(img);
    out.w = pixel_W(img, edges, opts.affinity, opts.pixel_cap);
    lap = degree_and_laplacian(out.w, opts.affinity.regularize_degree);
  }
  {
    StageTimer timer(tm.eigen);
    out.eigen = smallest_eigenpairs(lap.laplacian, opts.k, opts.eigen);
  }
  out.degree = std::move(lap.degree);
  out.u = out.eigen.vectors;
  for (std::size_t i = 0; i < n; ++i) {
    out.u.row(static_cast<Eigen::Index>(i)) /= std::sqrt(out.degree[i]);
  }
  return out;
}

Segmentation ncut(const GrayImage& img, const SegmentOptions& opts) {
  Segmentation seg;
  StageTimer total(seg.timings.total);
  const NcutEmbedding emb = ncut_embedding(img, opts, &seg.timings);
  std::vector<int> labels;
  {
    StageTimer timer(seg.timings.fcm);
    const Eigen::MatrixXd points = opts.row_normalize ? normalize_rows(emb.u) : emb.u;
    labels = cluster_rows(points, opts.k, opts.ncut_clusterer, opts);
  }
  seg.superpixels = img.size();
  seg.labels = make_label_map(img, std::move(labels), opts.k);
  return seg;
}

}  // namespace fastspec
