#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "fastspec/exec.hpp"

namespace fastspec {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Symmetric sparse matrix in compressed-row form. Both triangles are
/// stored; columns are sorted within each row.
class SparseSymMatrix {
 public:
  using Row = std::vector<std::pair<std::uint32_t, double>>;

  SparseSymMatrix() = default;

  /// Duplicate entries are summed. The caller supplies both triangles.
  static SparseSymMatrix from_triplets(std::size_t order, std::vector<Triplet> entries);
  /// Takes ownership of per-row entry lists; each row is sorted by column.
  static SparseSymMatrix from_rows(std::size_t order, std::vector<Row> rows);
  static SparseSymMatrix from_dense(const Eigen::MatrixXd& dense, double drop_below = 0.0);

  std::size_t order() const { return order_; }
  std::size_t nnz() const { return values_.size(); }

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::uint32_t> cols() const { return cols_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  double get(std::size_t i, std::size_t j) const;
  double row_sum(std::size_t i) const;

  /// y = A x
  void multiply(std::span<const double> x, std::span<double> y,
                Exec exec = Exec::parallel) const;

  /// Rows/columns [first, first + count) as a new matrix.
  SparseSymMatrix principal_submatrix(std::size_t first, std::size_t count) const;

  Eigen::MatrixXd to_dense() const;

  /// Exact entry-wise symmetry check.
  bool is_symmetric() const;

  /// MatrixMarket "coordinate real symmetric" (lower triangle).
  void write_matrix_market(const std::filesystem::path& path) const;

 private:
  std::size_t order_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> cols_;
  std::vector<double> values_;
};

/// Sparse n x m matrix with exactly one nonzero per row, the form of the
/// superpixel indicator H.
class IndicatorMatrix {
 public:
  IndicatorMatrix() = default;
  IndicatorMatrix(std::size_t cols, std::vector<std::uint32_t> row_col,
                  std::vector<double> row_value);

  std::size_t rows() const { return row_col_.size(); }
  std::size_t cols() const { return cols_; }
  std::uint32_t col_of(std::size_t row) const { return row_col_[row]; }
  double value_of(std::size_t row) const { return row_value_[row]; }

  /// this * X for dense X with cols() rows.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  /// this^T * x
  Eigen::VectorXd apply_transpose(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t cols_ = 0;
  std::vector<std::uint32_t> row_col_;
  std::vector<double> row_value_;
};

}  // namespace fastspec
