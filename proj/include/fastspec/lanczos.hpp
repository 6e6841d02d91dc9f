#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "fastspec/exec.hpp"
#include "fastspec/sparse.hpp"

namespace fastspec {

struct EigenResult {
  std::vector<double> values;   // ascending
  Eigen::MatrixXd vectors;      // one orthonormal column per value
  std::vector<double> residuals;  // ||A v - lambda v||
  std::size_t matvecs = 0;
  std::size_t restarts = 0;
};

struct LanczosOptions {
  double tol = 1e-8;
  std::size_t max_iter = 0;  // matrix-vector products; 0 means 10 * order
  std::uint64_t seed = 42;
  std::size_t basis = 0;     // Krylov basis size; 0 picks max(4k, 64)
  Exec exec = Exec::parallel;
};

/// k smallest eigenpairs of a symmetric matrix whose spectrum lies in
/// [0, 2] (normalized Laplacians). Runs thick-restart Lanczos with full
/// reorthogonalization on 2I - A and maps the largest Ritz values back.
EigenResult smallest_k(const SparseSymMatrix& a, std::size_t k,
                       const LanczosOptions& opts = {});

/// k smallest eigenpairs of a small dense symmetric matrix, k <= order.
EigenResult dense_smallest_k(const Eigen::MatrixXd& a, std::size_t k);

}  // namespace fastspec
