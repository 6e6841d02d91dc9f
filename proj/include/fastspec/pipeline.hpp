#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "fastspec/affinity.hpp"
#include "fastspec/clustering.hpp"
#include "fastspec/image.hpp"
#include "fastspec/lanczos.hpp"
#include "fastspec/quadtree.hpp"

namespace fastspec {

enum class WeightMode { exact, approx };
enum class Clusterer { kmeans, fcm };

/// How superpixel-level embeddings are carried to pixels. `indicator`
/// multiplies by H (rows scaled by 1/sqrt|A_j|); `membership` copies the
/// superpixel row unchanged.
enum class LiftMode { indicator, membership };

/// MFSC merge step. `projected` forms Q^T W_S Q and renormalizes it by its
/// own degrees. `ritz` projects the globally normalized D^{-1/2} W D^{-1/2}
/// onto the orthonormal columns of Q and takes Ritz vectors of I - Q^T N Q.
enum class MergeRule { projected, ritz };

struct SegmentOptions {
  AffinityParams affinity;
  double t = 10.0 / (255.0 * 255.0);  // variance threshold, internal units
  std::size_t min_block_side = 2;
  std::size_t k = 2;
  int l_init = 3;
  std::size_t k_int = 4;
  WeightMode mode = WeightMode::approx;
  std::uint64_t seed = 42;
  LanczosOptions eigen;
  FcmOptions fcm;
  Clusterer ncut_clusterer = Clusterer::kmeans;
  Clusterer spectral_clusterer = Clusterer::fcm;
  LiftMode lift = LiftMode::membership;
  MergeRule merge = MergeRule::ritz;
  bool cluster_superpixels = false;
  bool row_normalize = false;
  std::size_t pixel_cap = kDefaultPixelCap;
  std::size_t ncut_cap = 128 * 128;
  bool record_levels = false;
};

/// Wall-clock seconds per pipeline stage.
struct StageTimings {
  double decompose = 0.0;
  double affinity = 0.0;
  double eigen = 0.0;
  double merge = 0.0;
  double fcm = 0.0;
  double total = 0.0;
};

class StageTimer {
 public:
  explicit StageTimer(double& slot) : slot_(slot), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    slot_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  double& slot_;
  std::chrono::steady_clock::time_point start_;
};

/// One merge performed by MFSC, kept when SegmentOptions::record_levels is set.
struct LevelRecord {
  int level = 0;
  std::size_t x0 = 0, y0 = 0, side = 0;
  std::size_t superpixels = 0;  // s
  std::size_t columns_in = 0;   // e
  std::size_t k_out = 0;
  std::size_t retained = 0;
  std::vector<double> eigenvalues;
};

struct Segmentation {
  LabelMap labels;
  StageTimings timings;
  std::size_t superpixels = 0;
  int tree_depth = 0;
  std::vector<LevelRecord> levels;
};

/// Clusters embedding rows into k groups with the selected algorithm.
std::vector<int> cluster_rows(const Eigen::MatrixXd& points, std::size_t k, Clusterer which,
                              const SegmentOptions& opts);

/// Scales each row to unit length (rows of norm zero are left as is).
Eigen::MatrixXd normalize_rows(Eigen::MatrixXd x);

/// Carries a superpixel-level matrix (m x k) to pixels (n x k).
Eigen::MatrixXd lift_to_pixels(const QuadTree& tree, const Eigen::MatrixXd& x, LiftMode mode);

LabelMap make_label_map(const GrayImage& img, std::vector<int> labels, std::size_t k);

/// Smallest k eigenpairs, dense for tiny problems (or k >= order), Lanczos otherwise.
EigenResult smallest_eigenpairs(const SparseSymMatrix& a, std::size_t k,
                                const LanczosOptions& opts);

}  // namespace fastspec
