#pragma once

#include "fastspec/pipeline.hpp"

namespace fastspec {

struct FscEmbedding {
  QuadTree tree;
  SparseSymMatrix w_tilde;
  std::vector<double> degree;
  EigenResult eigen;    // T: eigenvectors of the normalized superpixel Laplacian
  Eigen::MatrixXd g;    // D^{-1/2} T, m x k
  Eigen::MatrixXd g_p;  // lifted to pixels, n x k
};

/// Builds the superpixel graph for `img` in the requested weight mode.
SparseSymMatrix superpixel_graph(const GrayImage& img, const EdgeMap& edges,
                                 const QuadTree& tree, const SegmentOptions& opts);

FscEmbedding fsc_embedding(const GrayImage& img, const SegmentOptions& opts,
                           StageTimings* timings = nullptr);

/// Fast spectral clustering over quad-tree superpixels.
Segmentation fsc(const GrayImage& img, const SegmentOptions& opts);

}  // namespace fastspec
