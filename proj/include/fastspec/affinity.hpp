#pragma once

#include <cstddef>
#include <vector>

#include "fastspec/exec.hpp"
#include "fastspec/image.hpp"
#include "fastspec/quadtree.hpp"
#include "fastspec/sparse.hpp"

namespace fastspec {

/// Sobel gradient magnitude, same grid as the image.
struct EdgeMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> strength;

  double at(std::size_t x, std::size_t y) const { return strength[y * width + x]; }
};

/// Parameters of the intervening-contour affinity, internal units:
/// distances in pixels, intensities in [0,1].
struct AffinityParams {
  double r = 20.0;        // pixel graph radius
  double R = 40.0;        // superpixel connection radius
  double sigma_x = 4.0;   // divides squared pixel distance
  double sigma_I = 8.0 / 255.0;  // divides squared intensity difference
  double sigma_C = 0.1;   // divides squared edge strength
  double alpha = 0.45;
  bool self_loops = true;  // keep w(i,i) on the diagonal
  bool regularize_degree = false;  // add 1e-12 to degrees instead of failing on zeros

  void validate() const;
};

inline constexpr std::size_t kDefaultPixelCap = std::size_t{1} << 16;
inline constexpr double kDegreeEpsilon = 1e-12;

EdgeMap edge_map(const GrayImage& img, Exec exec = Exec::parallel);

/// Largest squared edge strength on the Bresenham line between two pixels,
/// endpoints included. Symmetric in its endpoints.
double max_edge_sq_on_line(const EdgeMap& edges, std::size_t xa, std::size_t ya,
                           std::size_t xb, std::size_t yb);

/// The kernel sqrt(w_I * w_C) + alpha * w_C from squared distance, squared
/// intensity difference and squared contour strength.
double affinity_kernel(const AffinityParams& p, double dist_sq, double dz_sq,
                       double edge_sq);

/// Weight between pixels i and j (row-major indices); 0 beyond radius r.
double pixel_affinity(const GrayImage& img, const EdgeMap& edges,
                      const AffinityParams& p, std::size_t i, std::size_t j);

/// Pixel similarity matrix W over all pairs within radius r.
SparseSymMatrix pixel_W(const GrayImage& img, const EdgeMap& edges,
                        const AffinityParams& p, std::size_t cap = kDefaultPixelCap,
                        Exec exec = Exec::parallel);

/// Superpixel indicator H: row i holds 1/sqrt(|A_j|) in the column of the
/// leaf containing pixel i.
IndicatorMatrix build_H(const QuadTree& tree);

/// H^T W H by direct aggregation of pixel pairs:
/// entry (a,b) = cut(A_a, A_b) / sqrt(|A_a| |A_b|).
SparseSymMatrix superpixel_W_exact(const GrayImage& img, const EdgeMap& edges,
                                   const AffinityParams& p, const QuadTree& tree,
                                   std::size_t cap = kDefaultPixelCap,
                                   Exec exec = Exec::parallel);

/// Centroid approximation: superpixels connect iff their centers are within
/// R; entry (a,b) = sqrt(|A_a| |A_b|) * w(c_a, c_b), diagonal |A_a| * w(c_a, c_a).
SparseSymMatrix superpixel_W_approx(const std::vector<SuperpixelStats>& stats,
                                    const EdgeMap& edges, const AffinityParams& p,
                                    Exec exec = Exec::parallel);

struct NormalizedLaplacian {
  std::vector<double> degree;
  SparseSymMatrix laplacian;  // D^{-1/2} (D - W) D^{-1/2}
};

// absolute: degrees are sums of |w_ij|, for signed matrices such as projected merges
enum class DegreeKind { signed_sum, absolute };

/// Degrees and normalized Laplacian. Throws IsolatedNodeError on a
/// non-positive degree unless `regularize` is set.

NormalizedLaplacian degree_and_laplacian(const SparseSymMatrix& w, bool regularize = false,
                                         DegreeKind kind = DegreeKind::signed_sum);

}  // namespace fastspec
