#include "fastspec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fastspec/errors.hpp"

namespace fastspec {

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  const GrayImage raw = load_gray(path);
  std::map<double, int> ids;
  for (double v : raw.data) {
    if (v != 0.0) ids.emplace(v, 0);
  }
  int next = 1;
  for (auto& [value, id] : ids) id = next++;
  GroundTruth gt{raw.width, raw.height, std::vector<int>(raw.size()), next};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    gt.labels[i] = raw.data[i] == 0.0 ? 0 : ids.at(raw.data[i]);
  }
  gt.classes = std::max(next, 2);
  return gt;
}

GroundTruth resize_nearest(const GroundTruth& gt, std::size_t side) {
  GroundTruth out{side, side, std::vector<int>(side * side), gt.classes};
  for (std::size_t y = 0; y < side; ++y) {
    const auto sy = std::min(gt.height - 1, static_cast<std::size_t>(
        (static_cast<double>(y) + 0.5) * static_cast<double>(gt.height) / static_cast<double>(side)));
    for (std::size_t x = 0; x < side; ++x) {
      const auto sx = std::min(gt.width - 1, static_cast<std::size_t>(
          (static_cast<double>(x) + 0.5) * static_cast<double>(gt.width) / static_cast<double>(side)));
      out.labels[y * side + x] = gt.labels[sy * gt.width + sx];
    }
  }
  return out;
}

namespace {

void check_grids(const LabelMap& pred, const GroundTruth& gt) {
  if (pred.width != gt.width || pred.height != gt.height ||
      pred.labels.size() != gt.labels.size()) {
    throw ArgumentError("metrics: prediction is " + std::to_string(pred.width) + "x" +
                        std::to_string(pred.height) + " but ground truth is " +
                        std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
}

int label_count(const std::vector<int>& labels, int declared) {
  int k = declared;
  for (int l : labels) {
    if (l < 0) throw ArgumentError("metrics: negative label");
    k = std::max(k, l + 1);
  }
  return k;
}

std::uint64_t pairs(std::uint64_t x) { return x * (x - (x > 0 ? 1 : 0)) / 2; }

}  // namespace

std::vector<std::vector<std::uint64_t>> contingency(const LabelMap& pred, const GroundTruth& gt) {
  check_grids(pred, gt);
  const int kp = label_count(pred.labels, pred.k);
  const int kg = label_count(gt.labels, gt.classes);
  std::vector<std::vector<std::uint64_t>> m(static_cast<std::size_t>(kp),
                                            std::vector<std::uint64_t>(static_cast<std::size_t>(kg), 0));
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    ++m[static_cast<std::size_t>(pred.labels[i])][static_cast<std::size_t>(gt.labels[i])];
  }
  return m;
}

std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  // potentials formulation, 1-based internally
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> assign(n, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    if (p[j]) assign[p[j] - 1] = static_cast<int>(j - 1);
  }
  return assign;
}

std::vector<int> best_mapping(const LabelMap& pred, const GroundTruth& gt) {
  const auto m = contingency(pred, gt);
  const std::size_t kp = m.size();
  const std::size_t kg = m.front().size();
  std::vector<int> map(kp, -1);
  if (kp == 2 && kg == 2) {
    // both permutations
    const std::uint64_t keep = m[0][0] + m[1][1];
    const std::uint64_t swap = m[0][1] + m[1][0];
    bool use_keep = keep > swap;
    if (keep == swap) {
      // tie: prefer the larger foreground Dice so the choice is label-order free
      const std::uint64_t fg = m[0][1] + m[1][1];
      const std::uint64_t row0 = m[0][0] + m[0][1];
      const std::uint64_t row1 = m[1][0] + m[1][1];
      use_keep = m[1][1] * (fg + row0) >= m[0][1] * (fg + row1);
    }
    map = use_keep ? std::vector<int>{0, 1} : std::vector<int>{1, 0};
    return map;
  }
  const std::size_t k = std::max(kp, kg);
  std::vector<std::vector<double>> cost(k, std::vector<double>(k, 0.0));
  for (std::size_t p = 0; p < kp; ++p) {
    for (std::size_t g = 0; g < kg; ++g) cost[p][g] = -static_cast<double>(m[p][g]);
  }
  const auto assign = hungarian(cost);
  for (std::size_t p = 0; p < kp; ++p) {
    map[p] = static_cast<std::size_t>(assign[p]) < kg ? assign[p] : -1;
  }
  return map;
}

double acc(const LabelMap& pred, const GroundTruth& gt) {
  const auto map = best_mapping(pred, gt);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    hits += map[static_cast<std::size_t>(pred.labels[i])] == gt.labels[i];
  }
  return gt.labels.empty() ? 1.0
                           : static_cast<double>(hits) / static_cast<double>(gt.labels.size());
}

double rand_index(const LabelMap& pred, const GroundTruth& gt) {
  const auto m = contingency(pred, gt);
  const std::uint64_t n = gt.labels.size();
  if (n < 2) return 1.0;
  std::uint64_t p = 0, q = 0, sum_sq = 0;
  std::vector<std::uint64_t> col(m.front().size(), 0);
  for (const auto& row : m) {
    std::uint64_t r = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      r += row[j];
      col[j] += row[j];
      sum_sq += row[j] * row[j];
    }
    p += pairs(r);
  }
  for (auto c : col) q += pairs(c);
  const std::uint64_t big_n = pairs(n);
  const std::uint64_t t = (sum_sq - n) / 2;
  // N + 2T - P - Q >= 0 always; evaluate in signed arithmetic
  const auto num = static_cast<long double>(big_n) + 2.0L * static_cast<long double>(t) -
                   static_cast<long double>(p) - static_cast<long double>(q);
  return static_cast<double>(num / static_cast<long double>(big_n));
}

namespace {

double dice_for(const LabelMap& pred, const GroundTruth& gt, const std::vector<int>& map,
                int object, bool literal) {
  std::uint64_t inter = 0, o = 0, s = 0;
  for (std::size_t i = 0; i < gt.labels.size(); ++i) {
    const bool in_pred = map[static_cast<std::size_t>(pred.labels[i])] == object;
    const bool in_gt = gt.labels[i] == object;
    inter += in_pred && in_gt;
    o += in_pred;
    s += in_gt;
  }
  if (o + s == 0) return 1.0;
  const double factor = literal ? 1.0 : 2.0;
  return factor * static_cast<double>(inter) / static_cast<double>(o + s);
}

}  // namespace

double dice(const LabelMap& pred, const GroundTruth& gt, bool literal) {
  if (!gt.is_binary()) throw ArgumentError("dice: ground truth is not binary");
  return dice_for(pred, gt, best_mapping(pred, gt), 1, literal);
}

double mean_object_dice(const LabelMap& pred, const GroundTruth& gt, bool literal) {
  if (gt.is_binary()) return dice(pred, gt, literal);
  const auto map = best_mapping(pred, gt);
  double sum = 0.0;
  for (int obj = 1; obj < gt.classes; ++obj) sum += dice_for(pred, gt, map, obj, literal);
  return sum / static_cast<double>(gt.classes - 1);
}

}  // namespace fastspec
