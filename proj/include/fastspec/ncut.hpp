#pragma once

#include "fastspec/pipeline.hpp"

namespace fastspec {

struct NcutEmbedding {
  Eigen::MatrixXd u;           // n x k generalized eigenvectors D^{-1/2} Y
  EigenResult eigen;           // pairs of the normalized Laplacian
  std::vector<double> degree;
  SparseSymMatrix w;
};

/// Pixel-level generalized eigenproblem L u = lambda D u, solved through
/// the normalized Laplacian.
NcutEmbedding ncut_embedding(const GrayImage& img, const SegmentOptions& opts,
                             StageTimings* timings = nullptr);

/// Normalized-cut baseline: pixel graph, k generalized eigenvectors, k-means.
Segmentation ncut(const GrayImage& img, const SegmentOptions& opts);

}  // namespace fastspec
