#pragma once

#include <array>
#include <optional>

#include "fastspec/fsc.hpp"
#include "fastspec/pipeline.hpp"

namespace fastspec {

/// Clustering indicator of one quad-tree node. Rows are the node's
/// superpixels, ids [first_superpixel, first_superpixel + rows), in order.
/// An identity indicator is stored implicitly.
struct NodeClustering {
  std::size_t node = 0;
  std::size_t first_superpixel = 0;
  std::size_t rows = 0;
  bool identity = true;
  Eigen::MatrixXd q;       // rows x columns when !identity
  std::size_t deficit = 0;  // requested minus retained columns at the last merge

  std::size_t columns() const { return identity ? rows : static_cast<std::size_t>(q.cols()); }
  std::vector<std::size_t> superpixel_ids() const;
  Eigen::MatrixXd dense() const;
};

/// Identity clusterings for the cut of the tree at l_init.
std::vector<NodeClustering> init_level(const QuadTree& tree, int l_init);

struct MergeOptions {
  bool regularize_degree = false;
  // ritz: the matrix passed to merges is already D^{-1/2} W D^{-1/2}
  MergeRule rule = MergeRule::projected;
  LanczosOptions eigen;
};

/// Re-clusters the block indicator Q of a node on the node's principal
/// submatrix W_S: forms Q^T W_S Q, the reduced Laplacian per opts.rule, and
/// keeps its first k_out eigenvectors (all of them when fewer columns
/// exist). Returns Q * Q~.
NodeClustering reduce_node(const QuadTree& tree, std::size_t node,
                           const std::vector<const NodeClustering*>& blocks,
                           const SparseSymMatrix& w_tilde, std::size_t k_out,
                           const MergeOptions& opts = {}, LevelRecord* record = nullptr);

/// Block-diagonal assembly of four children (ul, ur, dl, dr) followed by reduce_node.
NodeClustering merge_children(const QuadTree& tree, std::size_t parent,
                              const std::array<const NodeClustering*, 4>& children,
                              const SparseSymMatrix& w_tilde, std::size_t k_out,
                              const MergeOptions& opts = {}, LevelRecord* record = nullptr);

struct MfscEmbedding {
  QuadTree tree;
  SparseSymMatrix w_tilde;
  std::vector<double> degree;
  NodeClustering root;
  Eigen::MatrixXd c_sup;  // D~^{-1/2} Q^1, m x k
  Eigen::MatrixXd c_p;    // lifted to pixels
  int start_level = 0;
  std::vector<LevelRecord> levels;
};

MfscEmbedding mfsc_embedding(const GrayImage& img, const SegmentOptions& opts,
                             StageTimings* timings = nullptr);

/// Multiscale fast spectral clustering: bottom-up merges along the quad-tree.
Segmentation mfsc(const GrayImage& img, const SegmentOptions& opts);

}  // namespace fastspec
