#include "fastspec/lanczos.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>

#include "fastspec/errors.hpp"

namespace fastspec {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// Orthogonalize w against the first `count` columns of v, twice.
VectorXd project_out(const MatrixXd& v, Index count, VectorXd& w) {
  VectorXd h = VectorXd::Zero(count);
  for (int pass = 0; pass < 2; ++pass) {
    const VectorXd c = v.leftCols(count).transpose() * w;
    w.noalias() -= v.leftCols(count) * c;
    h += c;
  }
  return h;
}

class Operator {
 public:
  Operator(const SparseSymMatrix& a, Exec exec) : a_(a), exec_(exec) {}

  // y = (2I - A) x
  void apply(const VectorXd& x, VectorXd& y) {
    a_.multiply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                std::span<double>(y.data(), static_cast<std::size_t>(y.size())), exec_);
    y = 2.0 * x - y;
    ++count_;
  }
  std::size_t count() const { return count_; }

 private:
  const SparseSymMatrix& a_;
  Exec exec_;
  std::size_t count_ = 0;
};

std::vector<double> true_residuals(const SparseSymMatrix& a, const MatrixXd& vecs,
                                   const std::vector<double>& vals, Exec exec) {
  std::vector<double> res(vals.size());
  VectorXd y(vecs.rows());
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const VectorXd x = vecs.col(static_cast<Index>(i));
    a.multiply(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
               std::span<double>(y.data(), static_cast<std::size_t>(y.size())), exec);
    res[i] = (y - vals[i] * x).norm();
  }
  return res;
}

}  // namespace

EigenResult smallest_k(const SparseSymMatrix& a, std::size_t k, const LanczosOptions& opts) {
  const std::size_t n = a.order();
  if (k == 0) throw ArgumentError("smallest_k: k must be >= 1");
  if (k >= n) {
    throw ArgumentError("smallest_k: k = " + std::to_string(k) +
                        " must be smaller than the matrix order " + std::to_string(n));
  }
  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * n;
  const auto p = static_cast<Index>(
      std::min(n, opts.basis ? std::max(opts.basis, k + 2) : std::max<std::size_t>(4 * k, 64)));
  const auto nn = static_cast<Index>(n);
  const auto kk = static_cast<Index>(k);

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto random_unit = [&](const MatrixXd& basis, Index count) {
    for (int attempt = 0; attempt < 8; ++attempt) {
      VectorXd v(nn);
      for (Index i = 0; i < nn; ++i) v(i) = uni(rng);
      if (count > 0) project_out(basis, count, v);
      const double norm = v.norm();
      if (norm > 1e-8) return VectorXd(v / norm);
    }
    throw ConvergenceError("smallest_k: could not extend the Krylov basis", {});
  };

  Operator op(a, opts.exec);
  MatrixXd v(nn, p + 1);
  MatrixXd t = MatrixXd::Zero(p, p);
  v.col(0) = random_unit(v, 0);
  Index kept = 0;
  std::size_t restarts = 0;
  std::vector<double> best(k, std::numeric_limits<double>::infinity());
  VectorXd w(nn);

  while (true) {
    double beta = 0.0;
    for (Index j = kept; j < p; ++j) {
      op.apply(v.col(j), w);
      const VectorXd h = project_out(v, j + 1, w);
      t.block(0, j, j + 1, 1) = h;
      t.block(j, 0, 1, j + 1) = h.transpose();
      beta = w.norm();
      if (j + 1 == nn) {
        beta = 0.0;
        break;
      }
      if (beta <= 1e-12) {
        // invariant subspace found; continue in a fresh direction
        beta = 0.0;
        v.col(j + 1) = random_unit(v, j + 1);
      } else {
        v.col(j + 1) = w / beta;
      }
      if (j + 1 < p) {
        t(j + 1, j) = beta;
        t(j, j + 1) = beta;
      }
    }
    const Index dim = std::min<Index>(p, nn);
    const MatrixXd tsym = 0.5 * (t.topLeftCorner(dim, dim) + t.topLeftCorner(dim, dim).transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(tsym);
    // eigenvalues ascending in theta; largest theta = smallest lambda
    const VectorXd theta = es.eigenvalues().reverse();
    const MatrixXd y = es.eigenvectors().rowwise().reverse();

    bool estimates_ok = true;
    for (Index i = 0; i < kk; ++i) {
      const double est = std::abs(beta * y(dim - 1, i));
      best[static_cast<std::size_t>(i)] = std::min(best[static_cast<std::size_t>(i)], est);
      if (est > 0.5 * opts.tol) estimates_ok = false;
    }

    if (estimates_ok || dim == nn) {
      EigenResult r;
      r.vectors = v.leftCols(dim) * y.leftCols(kk);
      for (Index i = 0; i < kk; ++i) r.values.push_back(2.0 - theta(i));
      r.residuals = true_residuals(a, r.vectors, r.values, opts.exec);
      const bool ok = std::all_of(r.residuals.begin(), r.residuals.end(),
                                  [&](double x) { return x <= opts.tol; });
      if (ok || dim == nn) {
        for (std::size_t i = 0; i < k; ++i) best[i] = std::min(best[i], r.residuals[i]);
        if (!ok) {
          throw ConvergenceError("smallest_k: residuals above tolerance in full space", best);
        }
        r.matvecs = op.count();
        r.restarts = restarts;
        return r;
      }
    }
    if (op.count() >= max_iter) {
      throw ConvergenceError("smallest_k: no convergence within " +
                                 std::to_string(max_iter) + " matrix-vector products",
                             best);
    }

    // thick restart: keep the leading Ritz vectors plus the residual direction
    kept = std::min<Index>(p - 1, kk + (p - kk) / 2);
    const MatrixXd ritz = v.leftCols(dim) * y.leftCols(kept);
    const VectorXd next = v.col(dim);
    v.leftCols(kept) = ritz;
    v.col(kept) = next;
    t.setZero();
    for (Index i = 0; i < kept; ++i) {
      t(i, i) = theta(i);
      t(i, kept) = t(kept, i) = beta * y(dim - 1, i);
    }
    if (beta == 0.0) {
      // the residual direction was synthetic; make it orthogonal to the kept block
      VectorXd fresh = v.col(kept);
      project_out(v, kept, fresh);
      v.col(kept) = fresh.normalized();
    }
    ++restarts;
  }
}

EigenResult dense_smallest_k(const Eigen::MatrixXd& a, std::size_t k) {
  const auto n = static_cast<std::size_t>(a.rows());
  if (k == 0 || k > n) throw ArgumentError("dense_smallest_k: need 1 <= k <= order");
  const MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
  EigenResult r;
  const auto kk = static_cast<Index>(k);
  r.vectors = es.eigenvectors().leftCols(kk);
  for (Index i = 0; i < kk; ++i) {
    r.values.push_back(es.eigenvalues()(i));
    r.residuals.push_back((sym * r.vectors.col(i) - r.values.back() * r.vectors.col(i)).norm());
  }
  return r;
}

}  // namespace fastspec
