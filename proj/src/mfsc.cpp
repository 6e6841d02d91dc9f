#include "fastspec/mfsc.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>

#include "fastspec/errors.hpp"

namespace fastspec {

namespace {

using Eigen::Index;
using SpMat = Eigen::SparseMatrix<double>;

// Above this many columns the reduced Laplacian is solved by Lanczos.
constexpr std::size_t kDenseMergeLimit = 512;

SpMat to_eigen(const SparseSymMatrix& a) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(a.nnz());
  const auto ptr = a.row_ptr();
  const auto cols = a.cols();
  const auto vals = a.values();
  for (std::size_t i = 0; i < a.order(); ++i) {
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      trips.emplace_back(static_cast<Index>(i), static_cast<Index>(cols[k]), vals[k]);
    }
  }
  SpMat out(static_cast<Index>(a.order()), static_cast<Index>(a.order()));
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

SparseSymMatrix from_eigen_symmetric(const SpMat& a) {
  // average with the transpose, then mirror the upper triangle so the
  // stored matrix is exactly symmetric
  const SpMat sym = 0.5 * (a + SpMat(a.transpose()));
  std::vector<SparseSymMatrix::Row> rows(static_cast<std::size_t>(sym.rows()));
  for (Index c = 0; c < sym.outerSize(); ++c) {
    for (SpMat::InnerIterator it(sym, c); it; ++it) {
      if (it.row() > it.col()) continue;
      const auto i = static_cast<std::size_t>(it.row());
      const auto j = static_cast<std::size_t>(it.col());
      rows[i].emplace_back(static_cast<std::uint32_t>(j), it.value());
      if (i != j) rows[j].emplace_back(static_cast<std::uint32_t>(i), it.value());
    }
  }
  const std::size_t order = rows.size();
  return SparseSymMatrix::from_rows(order, std::move(rows));
}

// D^{-1/2} W D^{-1/2}
SparseSymMatrix symmetric_scale(const SparseSymMatrix& w, const std::vector<double>& degree) {
  const auto ptr = w.row_ptr();
  const auto cols = w.cols();
  const auto vals = w.values();
  std::vector<SparseSymMatrix::Row> rows(w.order());
  for (std::size_t i = 0; i < w.order(); ++i) {
    const double si = 1.0 / std::sqrt(degree[i]);
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      rows[i].emplace_back(cols[k], vals[k] * si / std::sqrt(degree[cols[k]]));
    }
  }
  return SparseSymMatrix::from_rows(w.order(), std::move(rows));
}

}  // namespace

std::vector<std::size_t> NodeClustering::superpixel_ids() const {
  std::vector<std::size_t> ids(rows);
  for (std::size_t i = 0; i < rows; ++i) ids[i] = first_superpixel + i;
  return ids;
}

Eigen::MatrixXd NodeClustering::dense() const {
  if (identity) return Eigen::MatrixXd::Identity(static_cast<Index>(rows), static_cast<Index>(rows));
  return q;
}

std::vector<NodeClustering> init_level(const QuadTree& tree, int l_init) {
  std::vector<NodeClustering> out;
  for (std::size_t idx : nodes_at_level(tree, l_init)) {
    const QuadNode& n = tree.nodes[idx];
    NodeClustering c;
    c.node = idx;
    c.first_superpixel = n.first_leaf;
    c.rows = n.leaf_count;
    c.identity = true;
    out.push_back(std::move(c));
  }
  return out;
}

NodeClustering reduce_node(const QuadTree& tree, std::size_t node,
                           const std::vector<const NodeClustering*>& blocks,
                           const SparseSymMatrix& w_tilde, std::size_t k_out,
                           const MergeOptions& opts, LevelRecord* record) {
  const QuadNode& parent = tree.nodes[node];
  const std::size_t s = parent.leaf_count;
  const std::size_t first = parent.first_leaf;
  if (k_out == 0) throw ArgumentError("merge: k_out must be >= 1");

  // Q^l: block diagonal over the children in order
  std::vector<Eigen::Triplet<double>> trips;
  std::size_t row = first;
  std::size_t e = 0;
  for (const NodeClustering* b : blocks) {
    if (b->first_superpixel != row) {
      throw ArgumentError("merge: child superpixel ranges do not tile the parent");
    }
    const std::size_t ro = row - first;
    if (b->identity) {
      for (std::size_t i = 0; i < b->rows; ++i) {
        trips.emplace_back(static_cast<Index>(ro + i), static_cast<Index>(e + i), 1.0);
      }
    } else {
      for (Index i = 0; i < b->q.rows(); ++i) {
        for (Index j = 0; j < b->q.cols(); ++j) {
          if (b->q(i, j) != 0.0) {
            trips.emplace_back(static_cast<Index>(ro) + i, static_cast<Index>(e) + j, b->q(i, j));
          }
        }
      }
    }
    row += b->rows;
    e += b->columns();
  }
  if (row != first + s) throw ArgumentError("merge: children do not cover the parent");

  SpMat q(static_cast<Index>(s), static_cast<Index>(e));
  q.setFromTriplets(trips.begin(), trips.end());

  const SpMat w_s = to_eigen(w_tilde.principal_submatrix(first, s));
  const SpMat projected = SpMat(q.transpose()) * (w_s * q);
  SparseSymMatrix reduced;
  if (opts.rule == MergeRule::ritz) {
    SpMat eye(projected.rows(), projected.cols());
    eye.setIdentity();
    reduced = from_eigen_symmetric(eye - projected);
  } else {
    reduced = degree_and_laplacian(from_eigen_symmetric(projected), opts.regularize_degree,
                                   DegreeKind::absolute)
                  .laplacian;
  }

  const std::size_t keep = std::min(k_out, e);
  EigenResult eig = e <= kDenseMergeLimit
                        ? dense_smallest_k(reduced.to_dense(), keep)
                        : smallest_k(reduced, keep, opts.eigen);

  NodeClustering out;
  out.node = node;
  out.first_superpixel = first;
  out.rows = s;
  out.identity = false;
  out.q = q * eig.vectors;
  out.deficit = k_out - keep;

  if (record) {
    record->level = parent.level;
    record->x0 = parent.x0;
    record->y0 = parent.y0;
    record->side = parent.side;
    record->superpixels = s;
    record->columns_in = e;
    record->k_out = k_out;
    record->retained = keep;
    record->eigenvalues = eig.values;
  }
  return out;
}

NodeClustering merge_children(const QuadTree& tree, std::size_t parent,
                              const std::array<const NodeClustering*, 4>& children,
                              const SparseSymMatrix& w_tilde, std::size_t k_out,
                              const MergeOptions& opts, LevelRecord* record) {
  const QuadNode& p = tree.nodes[parent];
  if (p.is_leaf()) throw ArgumentError("merge_children: node has no children");
  for (std::size_t c = 0; c < 4; ++c) {
    if (!children[c] || children[c]->node != static_cast<std::size_t>(p.children[c])) {
      throw ArgumentError("merge_children: children must be given in ul, ur, dl, dr order");
    }
  }
  return reduce_node(tree, parent, {children.begin(), children.end()}, w_tilde, k_out, opts,
                     record);
}

MfscEmbedding mfsc_embedding(const GrayImage& img, const SegmentOptions& opts,
                             StageTimings* timings) {
  StageTimings local;
  StageTimings& tm = timings ? *timings : local;
  if (opts.l_init < 1) throw ArgumentError("mfsc: l_init must be >= 1");
  if (opts.k == 0) throw ArgumentError("mfsc: k must be >= 1");
  if (opts.k_int == 0) throw ArgumentError("mfsc: k_int must be >= 1");

  MfscEmbedding out;
  {
    StageTimer timer(tm.decompose);
    out.tree = decompose(img, opts.t, opts.min_block_side);
  }
  const QuadTree& tree = out.tree;
  const std::size_t m = tree.superpixel_count();
  if (opts.k > m) {
    throw ArgumentError("mfsc: k = " + std::to_string(opts.k) + " exceeds the " +
                        std::to_string(m) + " superpixels (m); lower the threshold t");
  }
  {
    StageTimer timer(tm.affinity);
    const EdgeMap edges = edge_map(img);
    out.w_tilde = superpixel_graph(img, edges, tree, opts);
    out.degree.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      double d = out.w_tilde.row_sum(i);
      if (opts.affinity.regularize_degree) d += kDegreeEpsilon;
      if (!(d > 0.0)) throw IsolatedNodeError(i);
      out.degree[i] = d;
    }
  }

  // Trees shallower than l_init start at their deepest level.
  const int start = std::min(opts.l_init, tree.depth);
  out.start_level = start;
  if (start >= 3 && opts.k_int < opts.k) {
    throw ArgumentError("mfsc: k_int = " + std::to_string(opts.k_int) +
                        " is smaller than k = " + std::to_string(opts.k) +
                        " at the level feeding the root");
  }
  MergeOptions mopts{opts.affinity.regularize_degree, opts.merge, opts.eigen};
  SparseSymMatrix normalized;
  if (opts.merge == MergeRule::ritz) {
    normalized = symmetric_scale(out.w_tilde, out.degree);
  }
  const SparseSymMatrix& merge_w = opts.merge == MergeRule::ritz ? normalized : out.w_tilde;

  StageTimer timer(tm.merge);
  std::vector<std::optional<NodeClustering>> slots(tree.nodes.size());
  for (NodeClustering& c : init_level(tree, start)) {
    const std::size_t idx = c.node;
    slots[idx] = std::move(c);
  }

  for (int level = start - 1; level >= 1; --level) {
    std::vector<std::size_t> pending;
    for (std::size_t idx : nodes_at_level(tree, level)) {
      if (!slots[idx]) pending.push_back(idx);  // leaves above were passed through
    }
    const std::size_t k_out = level == 1 ? opts.k : opts.k_int;
    std::vector<LevelRecord> records(pending.size());
    std::vector<std::exception_ptr> errors(pending.size());
    const auto count = static_cast<std::ptrdiff_t>(pending.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      try {
        const QuadNode& node = tree.nodes[pending[ui]];
        std::array<const NodeClustering*, 4> kids{};
        for (std::size_t c = 0; c < 4; ++c) {
          kids[c] = &*slots[static_cast<std::size_t>(node.children[c])];
        }
        NodeClustering merged =
            merge_children(tree, pending[ui], kids, merge_w, k_out, mopts, &records[ui]);
        slots[pending[ui]] = std::move(merged);
      } catch (...) {
        errors[ui] = std::current_exception();
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (std::size_t idx : pending) {
      for (auto c : tree.nodes[idx].children) slots[static_cast<std::size_t>(c)].reset();
    }
    if (opts.record_levels) {
      out.levels.insert(out.levels.end(), records.begin(), records.end());
    }
  }

  NodeClustering root = std::move(*slots[0]);
  if (start == 1) {
    // starting at the root: one reduction of the identity indicator
    LevelRecord rec;
    const NodeClustering init = root;
    root = reduce_node(tree, 0, {&init}, merge_w, opts.k, mopts, &rec);
    if (opts.record_levels) out.levels.push_back(rec);
  }
  if (root.columns() < opts.k) {
    throw ArgumentError("mfsc: only " + std::to_string(root.columns()) +
                        " components reach the root; k = " + std::to_string(opts.k) +
                        " requested (raise k_int or lower l_init)");
  }
  out.c_sup = root.dense();
  for (std::size_t i = 0; i < m; ++i) {
    out.c_sup.row(static_cast<Index>(i)) /= std::sqrt(out.degree[i]);
  }
  out.c_p = lift_to_pixels(tree, out.c_sup, opts.lift);
  out.root = std::move(root);
  return out;
}

Segmentation mfsc(const GrayImage& img, const SegmentOptions& opts) {
  Segmentation seg;
  StageTimer total(seg.timings.total);
  MfscEmbedding emb = mfsc_embedding(img, opts, &seg.timings);
  std::vector<int> labels;
  {
    StageTimer timer(seg.timings.fcm);
    if (opts.cluster_superpixels) {
      const Eigen::MatrixXd points = opts.row_normalize ? normalize_rows(emb.c_sup) : emb.c_sup;
      const auto per_sp = cluster_rows(points, opts.k, opts.spectral_clusterer, opts);
      const auto owner = emb.tree.pixel_labels();
      labels.resize(owner.size());
      for (std::size_t i = 0; i < owner.size(); ++i) {
        labels[i] = per_sp[static_cast<std::size_t>(owner[i])];
      }
    } else {
      const Eigen::MatrixXd points = opts.row_normalize ? normalize_rows(emb.c_p) : emb.c_p;
      labels = cluster_rows(points, opts.k, opts.spectral_clusterer, opts);
    }
  }
  seg.superpixels = emb.tree.superpixel_count();
  seg.tree_depth = emb.tree.depth;
  seg.levels = std::move(emb.levels);
  seg.labels = make_label_map(img, std::move(labels), opts.k);
  return seg;
}

}  // namespace fastspec
