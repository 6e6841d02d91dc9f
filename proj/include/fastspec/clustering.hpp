#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace fastspec {

/// Row-per-point coordinates.
using PointSet = Eigen::MatrixXd;

struct KMeansResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;  // k x dim
  std::size_t iterations = 0;
};

struct FuzzyResult {
  Eigen::MatrixXd memberships;  // count x k, rows sum to 1
  Eigen::MatrixXd centers;      // k x dim
  std::vector<int> labels;      // argmax membership, lowest index on ties
  std::size_t iterations = 0;
  std::vector<double> objective;  // J_m after each center update
};

/// k-means++ seeding (k distinct draws weighted by squared distance).
Eigen::MatrixXd kmeanspp_centers(const PointSet& points, std::size_t k, std::uint64_t seed);

/// Lloyd iterations from k-means++ seeds until the largest center shift is
/// below 1e-6 or 300 iterations; empty clusters are reseeded from the point
/// farthest from its center.
KMeansResult kmeans(const PointSet& points, std::size_t k, std::uint64_t seed);

struct FcmOptions {
  double fuzzifier = 2.0;
  double tol = 1e-5;  // max membership change
  std::size_t max_iter = 300;
};

FuzzyResult fuzzy_cmeans(const PointSet& points, std::size_t k, std::uint64_t seed,
                         const FcmOptions& opts = {});

}  // namespace fastspec
