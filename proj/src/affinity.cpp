#include "fastspec/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>

#include "fastspec/errors.hpp"

namespace fastspec {

void AffinityParams::validate() const {
  if (!(sigma_x > 0 && sigma_I > 0 && sigma_C > 0)) {
    throw ArgumentError("affinity scales sigma_x, sigma_I, sigma_C must be > 0");
  }
  if (!(alpha >= 0)) throw ArgumentError("alpha must be >= 0");
  if (!(r > 0) || !(R >= 1)) throw ArgumentError("radii must be positive (R >= 1)");
}

namespace {

void sobel_row(const GrayImage& img, std::size_t y, double* out) {
  const std::size_t w = img.width;
  const std::size_t ym = y == 0 ? 0 : y - 1;
  const std::size_t yp = std::min(y + 1, img.height - 1);
  for (std::size_t x = 0; x < w; ++x) {
    const std::size_t xm = x == 0 ? 0 : x - 1;
    const std::size_t xp = std::min(x + 1, w - 1);
    const double gx = (img.at(xp, ym) + 2 * img.at(xp, y) + img.at(xp, yp)) -
                      (img.at(xm, ym) + 2 * img.at(xm, y) + img.at(xm, yp));
    const double gy = (img.at(xm, yp) + 2 * img.at(x, yp) + img.at(xp, yp)) -
                      (img.at(xm, ym) + 2 * img.at(x, ym) + img.at(xp, ym));
    out[x] = std::sqrt(gx * gx + gy * gy);
  }
}

struct Offset {
  int dx;
  int dy;
  double dist_sq;
};

// Offsets within radius r, ordered so that row entries come out column-sorted.
std::vector<Offset> disk_offsets(double r) {
  const int ri = static_cast<int>(std::floor(r));
  std::vector<Offset> out;
  for (int dy = -ri; dy <= ri; ++dy) {
    for (int dx = -ri; dx <= ri; ++dx) {
      const double d2 = static_cast<double>(dx * dx + dy * dy);
      if (d2 <= r * r) out.push_back({dx, dy, d2});
    }
  }
  return out;
}

// half-integer centers round toward the other endpoint of the line
std::size_t rounded_coord(double c, double toward, std::size_t side) {
  const double f = std::floor(c);
  long v = std::lround(c);
  if (c - f == 0.5) v = static_cast<long>(toward > c ? f + 1.0 : f);
  return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(side) - 1));
}

}  // namespace

EdgeMap edge_map(const GrayImage& img, Exec exec) {
  EdgeMap e{img.width, img.height, std::vector<double>(img.size())};
  const auto h = static_cast<std::ptrdiff_t>(img.height);
  if (exec == Exec::serial) {
    for (std::ptrdiff_t y = 0; y < h; ++y) {
      sobel_row(img, static_cast<std::size_t>(y), e.strength.data() + y * static_cast<std::ptrdiff_t>(img.width));
    }
    return e;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    sobel_row(img, static_cast<std::size_t>(y), e.strength.data() + y * static_cast<std::ptrdiff_t>(img.width));
  }
  return e;
}

double max_edge_sq_on_line(const EdgeMap& edges, std::size_t xa, std::size_t ya,
                           std::size_t xb, std::size_t yb) {
  // Rasterize from the endpoint with the smaller row-major index so that
  // line(i,j) and line(j,i) visit the same pixels.
  if (std::tie(yb, xb) < std::tie(ya, xa)) {
    std::swap(xa, xb);
    std::swap(ya, yb);
  }
  long x = static_cast<long>(xa);
  long y = static_cast<long>(ya);
  const long x1 = static_cast<long>(xb);
  const long y1 = static_cast<long>(yb);
  const long dx = std::labs(x1 - x);
  const long dy = -std::labs(y1 - y);
  const long sx = x < x1 ? 1 : -1;
  const long sy = y < y1 ? 1 : -1;
  long err = dx + dy;
  double best = 0.0;
  while (true) {
    const double e = edges.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    best = std::max(best, e * e);
    if (x == x1 && y == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
  return best;
}

double affinity_kernel(const AffinityParams& p, double dist_sq, double dz_sq,
                       double edge_sq) {
  const double contour = edge_sq / p.sigma_C;
  const double wc = std::exp(-contour);
  // sqrt(w_I * w_C) evaluated in the exponent to avoid underflow of the product
  const double joint = std::exp(-0.5 * (dist_sq / p.sigma_x + dz_sq / p.sigma_I + contour));
  return joint + p.alpha * wc;
}

double pixel_affinity(const GrayImage& img, const EdgeMap& edges,
                      const AffinityParams& p, std::size_t i, std::size_t j) {
  const std::size_t w = img.width;
  const std::size_t xi = i % w, yi = i / w, xj = j % w, yj = j / w;
  const double dx = static_cast<double>(xi) - static_cast<double>(xj);
  const double dy = static_cast<double>(yi) - static_cast<double>(yj);
  const double d2 = dx * dx + dy * dy;
  if (d2 > p.r * p.r) return 0.0;
  if (i == j && !p.self_loops) return 0.0;
  const double dz = img.data[i] - img.data[j];
  return affinity_kernel(p, d2, dz * dz, max_edge_sq_on_line(edges, xi, yi, xj, yj));
}

namespace {

SparseSymMatrix::Row pixel_row(const GrayImage& img, const EdgeMap& edges,
                               const AffinityParams& p, const std::vector<Offset>& offsets,
                               std::size_t i) {
  const auto w = static_cast<long>(img.width);
  const auto h = static_cast<long>(img.height);
  const long xi = static_cast<long>(i) % w;
  const long yi = static_cast<long>(i) / w;
  SparseSymMatrix::Row row;
  for (const Offset& o : offsets) {
    const long xj = xi + o.dx;
    const long yj = yi + o.dy;
    if (xj < 0 || yj < 0 || xj >= w || yj >= h) continue;
    if (o.dx == 0 && o.dy == 0 && !p.self_loops) continue;
    const auto j = static_cast<std::size_t>(yj * w + xj);
    const double dz = img.data[i] - img.data[j];
    const double e2 = max_edge_sq_on_line(edges, static_cast<std::size_t>(xi),
                                          static_cast<std::size_t>(yi),
                                          static_cast<std::size_t>(xj),
                                          static_cast<std::size_t>(yj));
    row.emplace_back(static_cast<std::uint32_t>(j), affinity_kernel(p, o.dist_sq, dz * dz, e2));
  }
  return row;
}

void check_cap(std::size_t n, std::size_t cap, const char* what) {
  if (n > cap) {
    throw CapacityError(std::string(what) + ": " + std::to_string(n) +
                        " pixels exceeds the pixel-graph cap of " + std::to_string(cap) +
                        "; use the approximate FSC/MFSC path");
  }
}

}  // namespace

SparseSymMatrix pixel_W(const GrayImage& img, const EdgeMap& edges,
                        const AffinityParams& p, std::size_t cap, Exec exec) {
  p.validate();
  const std::size_t n = img.size();
  check_cap(n, cap, "pixel_W");
  const auto offsets = disk_offsets(p.r);
  std::vector<SparseSymMatrix::Row> rows(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
  if (exec == Exec::serial) {
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      rows[static_cast<std::size_t>(i)] = pixel_row(img, edges, p, offsets, static_cast<std::size_t>(i));
    }
  } else {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < sn; ++i) {
      rows[static_cast<std::size_t>(i)] = pixel_row(img, edges, p, offsets, static_cast<std::size_t>(i));
    }
  }
  return SparseSymMatrix::from_rows(n, std::move(rows));
}

IndicatorMatrix build_H(const QuadTree& tree) {
  const auto labels = tree.pixel_labels();
  std::vector<std::uint32_t> cols(labels.size());
  std::vector<double> vals(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto s = static_cast<std::size_t>(labels[i]);
    cols[i] = static_cast<std::uint32_t>(s);
    const double size = static_cast<double>(tree.leaf(s).side * tree.leaf(s).side);
    vals[i] = 1.0 / std::sqrt(size);
  }
  return IndicatorMatrix(tree.superpixel_count(), std::move(cols), std::move(vals));
}

SparseSymMatrix superpixel_W_exact(const GrayImage& img, const EdgeMap& edges,
                                   const AffinityParams& p, const QuadTree& tree,
                                   std::size_t cap, Exec exec) {
  p.validate();
  if (img.width != tree.image_side || img.height != tree.image_side) {
    throw ArgumentError("superpixel_W_exact: image does not match tree");
  }
  check_cap(img.size(), cap, "superpixel_W_exact");
  const auto labels = tree.pixel_labels();
  const auto offsets = disk_offsets(p.r);
  const std::size_t m = tree.superpixel_count();
  std::vector<SparseSymMatrix::Row> upper(m);

  auto aggregate = [&](std::size_t a, std::vector<double>& acc, std::vector<std::uint32_t>& touched) {
    const QuadNode& node = tree.leaf(a);
    for (std::size_t y = node.y0; y < node.y0 + node.side; ++y) {
      for (std::size_t x = node.x0; x < node.x0 + node.side; ++x) {
        const std::size_t i = y * img.width + x;
        for (const auto& [j, w] : pixel_row(img, edges, p, offsets, i)) {
          const auto b = static_cast<std::uint32_t>(labels[j]);
          if (b < a) continue;
          if (acc[b] == 0.0) touched.push_back(b);
          acc[b] += w;
        }
      }
    }
    std::sort(touched.begin(), touched.end());
    const double size_a = static_cast<double>(node.side * node.side);
    SparseSymMatrix::Row row;
    for (auto b : touched) {
      const double size_b = static_cast<double>(tree.leaf(b).side * tree.leaf(b).side);
      row.emplace_back(b, acc[b] / std::sqrt(size_a * size_b));
      acc[b] = 0.0;
    }
    touched.clear();
    return row;
  };

  const auto sm = static_cast<std::ptrdiff_t>(m);
  if (exec == Exec::serial) {
    std::vector<double> acc(m, 0.0);
    std::vector<std::uint32_t> touched;
    for (std::ptrdiff_t a = 0; a < sm; ++a) {
      upper[static_cast<std::size_t>(a)] = aggregate(static_cast<std::size_t>(a), acc, touched);
    }
  } else {
#pragma omp parallel
    {
      std::vector<double> acc(m, 0.0);
      std::vector<std::uint32_t> touched;
#pragma omp for schedule(dynamic, 4)
      for (std::ptrdiff_t a = 0; a < sm; ++a) {
        upper[static_cast<std::size_t>(a)] = aggregate(static_cast<std::size_t>(a), acc, touched);
      }
    }
  }

  // Mirror the upper triangle so entry(a,b) == entry(b,a) bit for bit.
  std::vector<SparseSymMatrix::Row> rows(m);
  for (std::size_t a = 0; a < m; ++a) {
    for (const auto& [b, v] : upper[a]) {
      rows[a].emplace_back(b, v);
      if (b != a) rows[b].emplace_back(static_cast<std::uint32_t>(a), v);
    }
  }
  return SparseSymMatrix::from_rows(m, std::move(rows));
}

namespace {

struct Center {
  double cx, cy;
  double mean;
  double size;
};

double approx_entry(const EdgeMap& edges, const AffinityParams& p, const Center& a,
                    const Center& b, bool diagonal) {
  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  const double dz = a.mean - b.mean;
  const double e2 = max_edge_sq_on_line(
      edges, rounded_coord(a.cx, b.cx, edges.width), rounded_coord(a.cy, b.cy, edges.height),
      rounded_coord(b.cx, a.cx, edges.width), rounded_coord(b.cy, a.cy, edges.height));
  const double w = affinity_kernel(p, dx * dx + dy * dy, dz * dz, e2);
  return diagonal ? a.size * w : std::sqrt(a.size * b.size) * w;
}

}  // namespace

SparseSymMatrix superpixel_W_approx(const std::vector<SuperpixelStats>& stats,
                                    const EdgeMap& edges, const AffinityParams& p,
                                    Exec exec) {
  p.validate();
  const std::size_t m = stats.size();
  std::vector<Center> centers(m);
  for (std::size_t s = 0; s < m; ++s) {
    centers[s] = {stats[s].cx, stats[s].cy, stats[s].mean_intensity,
                  static_cast<double>(stats[s].size)};
  }
  const double r2 = p.R * p.R;
  std::vector<SparseSymMatrix::Row> rows(m);
  const auto sm = static_cast<std::ptrdiff_t>(m);

  auto entry_row = [&](std::size_t a, auto&& for_each_candidate) {
    SparseSymMatrix::Row row;
    for_each_candidate([&](std::size_t b) {
      const double dx = centers[a].cx - centers[b].cx;
      const double dy = centers[a].cy - centers[b].cy;
      if (dx * dx + dy * dy > r2) return;
      if (a == b && !p.self_loops) return;
      row.emplace_back(static_cast<std::uint32_t>(b),
                       approx_entry(edges, p, centers[a], centers[b], a == b));
    });
    std::sort(row.begin(), row.end(),
              [](const auto& u, const auto& v) { return u.first < v.first; });
    return row;
  };

  if (exec == Exec::serial) {
    // all-pairs reference
    for (std::ptrdiff_t a = 0; a < sm; ++a) {
      rows[static_cast<std::size_t>(a)] = entry_row(static_cast<std::size_t>(a), [&](auto&& visit) {
        for (std::size_t b = 0; b < m; ++b) visit(b);
      });
    }
  } else {
    // bucket centers on a grid of cell size R; candidates come from 3x3 cells
    const double cell = p.R;
    const auto gw = static_cast<std::size_t>(std::ceil(static_cast<double>(edges.width) / cell)) + 1;
    const auto gh = static_cast<std::size_t>(std::ceil(static_cast<double>(edges.height) / cell)) + 1;
    std::vector<std::vector<std::uint32_t>> grid(gw * gh);
    auto cell_of = [&](double c, std::size_t limit) {
      return std::min(static_cast<std::size_t>(std::max(c, 0.0) / cell), limit - 1);
    };
    for (std::size_t s = 0; s < m; ++s) {
      grid[cell_of(centers[s].cy, gh) * gw + cell_of(centers[s].cx, gw)].push_back(
          static_cast<std::uint32_t>(s));
    }
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t a = 0; a < sm; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const std::size_t gx = cell_of(centers[ua].cx, gw);
      const std::size_t gy = cell_of(centers[ua].cy, gh);
      rows[ua] = entry_row(ua, [&](auto&& visit) {
        for (std::size_t y = gy == 0 ? 0 : gy - 1; y <= std::min(gy + 1, gh - 1); ++y) {
          for (std::size_t x = gx == 0 ? 0 : gx - 1; x <= std::min(gx + 1, gw - 1); ++x) {
            for (auto b : grid[y * gw + x]) visit(b);
          }
        }
      });
    }
  }
  return SparseSymMatrix::from_rows(m, std::move(rows));
}

NormalizedLaplacian degree_and_laplacian(const SparseSymMatrix& w, bool regularize,
                                         DegreeKind kind) {
  const std::size_t n = w.order();
  NormalizedLaplacian out;
  out.degree.resize(n);
  const auto dptr = w.row_ptr();
  const auto dvals = w.values();
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    if (kind == DegreeKind::absolute) {
      for (std::size_t k = dptr[i]; k < dptr[i + 1]; ++k) d += std::abs(dvals[k]);
    } else {
      d = w.row_sum(i);
    }
    if (regularize) d += kDegreeEpsilon;
    if (!(d > 0.0)) throw IsolatedNodeError(i);
    out.degree[i] = d;
  }
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(out.degree[i]);

  const auto ptr = w.row_ptr();
  const auto cols = w.cols();
  const auto vals = w.values();
  std::vector<SparseSymMatrix::Row> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool has_diag = false;
    for (std::size_t k = ptr[i]; k < ptr[i + 1]; ++k) {
      const std::size_t j = cols[k];
      double v = -vals[k] * (inv_sqrt[i] * inv_sqrt[j]);
      if (i == j) {
        v = 1.0 - vals[k] / out.degree[i];
        has_diag = true;
      }
      rows[i].emplace_back(cols[k], v);
    }
    if (!has_diag) rows[i].emplace_back(static_cast<std::uint32_t>(i), 1.0);
  }
  return {std::move(out.degree), SparseSymMatrix::from_rows(n, std::move(rows))};
}

}  // namespace fastspec
