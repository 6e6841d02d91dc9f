#include "fastspec/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fastspec/errors.hpp"

namespace fastspec {

namespace {

using Eigen::Index;

void check_input(const PointSet& points, std::size_t k, const char* who) {
  if (k == 0) throw ArgumentError(std::string(who) + ": k must be >= 1");
  if (static_cast<std::size_t>(points.rows()) < k) {
    throw ArgumentError(std::string(who) + ": " + std::to_string(points.rows()) +
                        " points cannot form " + std::to_string(k) + " clusters");
  }
  if (!points.allFinite()) throw ArgumentError(std::string(who) + ": non-finite coordinates");
}

// Squared distances from every point to every center (count x k).
Eigen::MatrixXd squared_distances(const PointSet& points, const Eigen::MatrixXd& centers) {
  const Index n = points.rows();
  const Index k = centers.rows();
  Eigen::MatrixXd d(n, k);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) d(i, j) = (points.row(i) - centers.row(j)).squaredNorm();
  }
  return d;
}

int argmin_row(const Eigen::MatrixXd& d, Index i) {
  Index best = 0;
  for (Index j = 1; j < d.cols(); ++j) {
    if (d(i, j) < d(i, best)) best = j;
  }
  return static_cast<int>(best);
}

}  // namespace

Eigen::MatrixXd kmeanspp_centers(const PointSet& points, std::size_t k, std::uint64_t seed) {
  check_input(points, k, "kmeans++");
  const Index n = points.rows();
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd centers(static_cast<Index>(k), points.cols());
  std::uniform_int_distribution<Index> pick(0, n - 1);
  centers.row(0) = points.row(pick(rng));
  Eigen::VectorXd dist(n);
  for (Index i = 0; i < n; ++i) dist(i) = (points.row(i) - centers.row(0)).squaredNorm();
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (Index c = 1; c < static_cast<Index>(k); ++c) {
    const double total = dist.sum();
    Index chosen = pick(rng);
    if (total > 0.0) {
      double target = uni(rng) * total;
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= dist(i);
        if (target < 0.0 && dist(i) > 0.0) {
          chosen = i;
          break;
        }
      }
      while (dist(chosen) == 0.0 && chosen > 0) --chosen;
    }
    centers.row(c) = points.row(chosen);
    for (Index i = 0; i < n; ++i) {
      dist(i) = std::min(dist(i), (points.row(i) - centers.row(c)).squaredNorm());
    }
  }
  return centers;
}

KMeansResult kmeans(const PointSet& points, std::size_t k, std::uint64_t seed) {
  check_input(points, k, "kmeans");
  const Index n = points.rows();
  const auto kk = static_cast<Index>(k);
  KMeansResult r;
  r.centers = kmeanspp_centers(points, k, seed);
  r.labels.assign(static_cast<std::size_t>(n), 0);
  for (r.iterations = 1; r.iterations <= 300; ++r.iterations) {
    const Eigen::MatrixXd d = squared_distances(points, r.centers);
    for (Index i = 0; i < n; ++i) r.labels[static_cast<std::size_t>(i)] = argmin_row(d, i);

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kk, points.cols());
    std::vector<std::size_t> counts(k, 0);
    for (Index i = 0; i < n; ++i) {
      const int l = r.labels[static_cast<std::size_t>(i)];
      sums.row(l) += points.row(i);
      ++counts[static_cast<std::size_t>(l)];
    }
    Eigen::MatrixXd next = r.centers;
    std::vector<char> taken(static_cast<std::size_t>(n), 0);
    for (Index c = 0; c < kk; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        next.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // reseed an empty cluster from the worst-served point
      Index far = -1;
      double far_d = -1.0;
      for (Index i = 0; i < n; ++i) {
        const double di = d(i, r.labels[static_cast<std::size_t>(i)]);
        if (!taken[static_cast<std::size_t>(i)] && di > far_d) {
          far_d = di;
          far = i;
        }
      }
      taken[static_cast<std::size_t>(far)] = 1;
      next.row(c) = points.row(far);
      r.labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
    }
    const double shift = (next - r.centers).rowwise().norm().maxCoeff();
    r.centers = next;
    if (shift < 1e-6) break;
  }
  r.iterations = std::min<std::size_t>(r.iterations, 300);
  const Eigen::MatrixXd d = squared_distances(points, r.centers);
  for (Index i = 0; i < n; ++i) r.labels[static_cast<std::size_t>(i)] = argmin_row(d, i);
  return r;
}

namespace {

void update_memberships(const Eigen::MatrixXd& d2, double exponent, Eigen::MatrixXd& u) {
  const Index n = d2.rows();
  const Index k = d2.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < n; ++i) {
    const int nearest = argmin_row(d2, i);
    if (d2(i, nearest) == 0.0) {
      u.row(i).setZero();
      u(i, nearest) = 1.0;
      continue;
    }
    for (Index j = 0; j < k; ++j) {
      double s = 0.0;
      for (Index l = 0; l < k; ++l) s += std::pow(d2(i, j) / d2(i, l), exponent);
      u(i, j) = 1.0 / s;
    }
  }
}

double objective(const Eigen::MatrixXd& u, const Eigen::MatrixXd& d2, double m) {
  return (u.array().pow(m) * d2.array()).sum();
}

}  // namespace

FuzzyResult fuzzy_cmeans(const PointSet& points, std::size_t k, std::uint64_t seed,
                         const FcmOptions& opts) {
  check_input(points, k, "fuzzy_cmeans");
  if (!(opts.fuzzifier > 1.0)) throw ArgumentError("fuzzy_cmeans: fuzzifier must be > 1");
  const Index n = points.rows();
  const auto kk = static_cast<Index>(k);
  const double m = opts.fuzzifier;
  const double exponent = 1.0 / (m - 1.0);

  FuzzyResult r;
  r.centers = kmeanspp_centers(points, k, seed);
  r.memberships.resize(n, kk);
  update_memberships(squared_distances(points, r.centers), exponent, r.memberships);

  for (r.iterations = 1; r.iterations <= opts.max_iter; ++r.iterations) {
    const Eigen::MatrixXd w = r.memberships.array().pow(m);
    for (Index j = 0; j < kk; ++j) {
      const double total = w.col(j).sum();
      if (total > 0.0) r.centers.row(j) = (w.col(j).transpose() * points) / total;
    }
    const Eigen::MatrixXd d2 = squared_distances(points, r.centers);
    r.objective.push_back(objective(r.memberships, d2, m));
    Eigen::MatrixXd next(n, kk);
    update_memberships(d2, exponent, next);
    const double change = (next - r.memberships).cwiseAbs().maxCoeff();
    r.memberships = std::move(next);
    if (change < opts.tol) break;
  }
  r.iterations = std::min(r.iterations, opts.max_iter);
  r.labels.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    for (Index j = 1; j < kk; ++j) {
      if (r.memberships(i, j) > r.memberships(i, best)) best = j;
    }
    r.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return r;
}

}  // namespace fastspec
