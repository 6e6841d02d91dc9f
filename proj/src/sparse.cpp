#include "fastspec/sparse.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>

#include "fastspec/errors.hpp"

namespace fastspec {

SparseSymMatrix SparseSymMatrix::from_triplets(std::size_t order,
                                               std::vector<Triplet> entries) {
  std::vector<Row> rows(order);
  for (const auto& t : entries) {
    if (t.row >= order || t.col >= order) throw ArgumentError("triplet out of range");
    rows[t.row].emplace_back(static_cast<std::uint32_t>(t.col), t.value);
  }
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Row merged;
    for (const auto& e : row) {
      if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
      else merged.push_back(e);
    }
    row = std::move(merged);
  }
  return from_rows(order, std::move(rows));
}

SparseSymMatrix SparseSymMatrix::from_rows(std::size_t order, std::vector<Row> rows) {
  if (rows.size() != order) throw ArgumentError("from_rows: row count != order");
  if (order > std::numeric_limits<std::uint32_t>::max()) {
    throw CapacityError("matrix order exceeds 32-bit column index");
  }
  SparseSymMatrix m;
  m.order_ = order;
  m.row_ptr_.assign(order + 1, 0);
  for (std::size_t i = 0; i < order; ++i) {
    auto& row = rows[i];
    if (!std::is_sorted(row.begin(), row.end(),
                        [](const auto& a, const auto& b) { return a.first < b.first; })) {
      std::sort(row.begin(), row.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
    }
    m.row_ptr_[i + 1] = m.row_ptr_[i] + row.size();
  }
  m.cols_.resize(m.row_ptr_.back());
  m.values_.resize(m.row_ptr_.back());
  for (std::size_t i = 0; i < order; ++i) {
    std::size_t k = m.row_ptr_[i];
    for (const auto& [c, v] : rows[i]) {
      m.cols_[k] = c;
      m.values_[k] = v;
      ++k;
    }
    Row().swap(rows[i]);
  }
  return m;
}

SparseSymMatrix SparseSymMatrix::from_dense(const Eigen::MatrixXd& dense, double drop_below) {
  const auto n = static_cast<std::size_t>(dense.rows());
  std::vector<Row> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v != 0.0 && std::abs(v) >= drop_below) {
        rows[i].emplace_back(static_cast<std::uint32_t>(j), v);
      }
    }
  }
  return from_rows(n, std::move(rows));
}

double SparseSymMatrix::get(std::size_t i, std::size_t j) const {
  const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(j));
  if (it == end || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

double SparseSymMatrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += values_[k];
  return s;
}

void SparseSymMatrix::multiply(std::span<const double> x, std::span<double> y,
                               Exec exec) const {
  const auto n = static_cast<std::ptrdiff_t>(order_);
  if (exec == Exec::serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += values_[k] * x[cols_[k]];
      y[static_cast<std::size_t>(i)] = acc;
    }
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += values_[k] * x[cols_[k]];
    y[static_cast<std::size_t>(i)] = acc;
  }
}

SparseSymMatrix SparseSymMatrix::principal_submatrix(std::size_t first,
                                                     std::size_t count) const {
  if (first + count > order_) throw ArgumentError("principal_submatrix: range out of bounds");
  std::vector<Row> rows(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = first + i;
    const auto begin = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
    const auto end = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
    auto k = static_cast<std::size_t>(
        std::lower_bound(begin, end, static_cast<std::uint32_t>(first)) - cols_.begin());
    for (; k < row_ptr_[r + 1] && cols_[k] < first + count; ++k) {
      rows[i].emplace_back(static_cast<std::uint32_t>(cols_[k] - first), values_[k]);
    }
  }
  return from_rows(count, std::move(rows));
}

Eigen::MatrixXd SparseSymMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(order_);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < order_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      d(static_cast<Eigen::Index>(i), cols_[k]) = values_[k];
    }
  }
  return d;
}

bool SparseSymMatrix::is_symmetric() const {
  for (std::size_t i = 0; i < order_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (get(cols_[k], i) != values_[k]) return false;
    }
  }
  return true;
}

void SparseSymMatrix::write_matrix_market(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  std::size_t lower = 0;
  for (std::size_t i = 0; i < order_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) lower += cols_[k] <= i;
  }
  f << "%%MatrixMarket matrix coordinate real symmetric\n"
    << order_ << ' ' << order_ << ' ' << lower << '\n'
    << std::setprecision(17);
  for (std::size_t i = 0; i < order_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (cols_[k] <= i) f << i + 1 << ' ' << cols_[k] + 1 << ' ' << values_[k] << '\n';
    }
  }
}

IndicatorMatrix::IndicatorMatrix(std::size_t cols, std::vector<std::uint32_t> row_col,
                                 std::vector<double> row_value)
    : cols_(cols), row_col_(std::move(row_col)), row_value_(std::move(row_value)) {
  if (row_col_.size() != row_value_.size()) {
    throw ArgumentError("IndicatorMatrix: column and value arrays differ in length");
  }
  for (auto c : row_col_) {
    if (c >= cols_) throw ArgumentError("IndicatorMatrix: column out of range");
  }
}

Eigen::MatrixXd IndicatorMatrix::apply(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != cols_) {
    throw ArgumentError("IndicatorMatrix::apply: dimension mismatch");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows()), x.cols());
  const auto n = static_cast<std::ptrdiff_t>(rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out.row(i) = row_value_[static_cast<std::size_t>(i)] *
                 x.row(row_col_[static_cast<std::size_t>(i)]);
  }
  return out;
}

Eigen::VectorXd IndicatorMatrix::apply_transpose(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows(); ++i) {
    out(row_col_[i]) += row_value_[i] * x(static_cast<Eigen::Index>(i));
  }
  return out;
}

Eigen::MatrixXd IndicatorMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows()),
                                            static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows(); ++i) {
    d(static_cast<Eigen::Index>(i), row_col_[i]) = row_value_[i];
  }
  return d;
}

}  // namespace fastspec
