#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fastspec/errors.hpp"
#include "fastspec/metrics.hpp"
#include "oracles.hpp"

using namespace fastspec;

namespace {

LabelMap labels_of(std::vector<int> v, int k) {
  LabelMap m;
  m.width = v.size();
  m.height = 1;
  m.k = k;
  m.labels = std::move(v);
  return m;
}

GroundTruth truth_of(std::vector<int> v) {
  GroundTruth g;
  g.width = v.size();
  g.height = 1;
  g.classes = v.empty() ? 0 : *std::max_element(v.begin(), v.end()) + 1;
  g.labels = std::move(v);
  return g;
}

}  // namespace

TEST_CASE("acc") {
  CHECK(acc(labels_of({0, 1, 1, 0}, 2), truth_of({0, 1, 1, 0})) == 1.0);
  CHECK(acc(labels_of({1, 0, 0, 1}, 2), truth_of({0, 1, 1, 0})) == 1.0);
  CHECK(acc(labels_of({0, 0, 1, 1}, 2), truth_of({0, 1, 1, 1})) == 0.75);
  CHECK_THROWS_AS(acc(labels_of({0, 1}, 2), truth_of({0, 1, 1})), ArgumentError);
}

TEST_CASE("acc equals the exhaustive permutation optimum") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 3);
    const std::size_t n = 4 + rng() % 20;
    std::vector<int> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
      g[i] = static_cast<int>(rng() % static_cast<unsigned>(k));
    }
    GroundTruth gt = truth_of(g);
    gt.classes = k;
    CHECK(acc(labels_of(p, k), gt) == doctest::Approx(oracle::brute_acc(p, g, k)).epsilon(1e-15));
  }
}

TEST_CASE("acc lower bound on balanced truth") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 3);
    std::vector<int> p, g;
    for (int c = 0; c < k; ++c)
      for (int i = 0; i < 5; ++i) {
        g.push_back(c);
        p.push_back(static_cast<int>(rng() % static_cast<unsigned>(k)));
      }
    CHECK(acc(labels_of(p, k), truth_of(g)) >= 1.0 / k - 1e-15);
  }
}

TEST_CASE("rand_index") {
  CHECK(rand_index(labels_of({0, 1, 2, 2}, 3), truth_of({0, 1, 2, 2})) == 1.0);
  const std::vector<int> g{0, 0, 1, 1};
  CHECK(rand_index(labels_of({0, 0, 0, 0}, 1), truth_of(g)) ==
        oracle::brute_rand_index({0, 0, 0, 0}, g));
  CHECK(rand_index(labels_of({1, 0, 2, 2}, 3), truth_of({0, 1, 2, 2})) == 1.0);
}

TEST_CASE("rand_index equals the pairwise count") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    const int kp = 1 + static_cast<int>(rng() % 4), kg = 1 + static_cast<int>(rng() % 4);
    std::vector<int> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() % static_cast<unsigned>(kp));
      g[i] = static_cast<int>(rng() % static_cast<unsigned>(kg));
    }
    GroundTruth gt = truth_of(g);
    gt.classes = kg;
    CHECK(rand_index(labels_of(p, kp), gt) == oracle::brute_rand_index(p, g));
  }
}

TEST_CASE("dice") {
  CHECK(dice(labels_of({0, 1, 1, 0}, 2), truth_of({0, 1, 1, 0})) == 1.0);
  // disjoint: the constant prediction maps to background, leaving no foreground
  CHECK(dice(labels_of({0, 0, 0, 0}, 1), truth_of({1, 0, 0, 0})) == 0.0);
  // 4 px each, overlap 2
  const std::vector<int> g{1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  const std::vector<int> p{0, 0, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  CHECK(dice(labels_of(p, 2), truth_of(g)) == 0.5);
  CHECK(dice(labels_of(p, 2), truth_of(g), true) == 0.25);
  GroundTruth three = truth_of({0, 1, 2, 0});
  CHECK_THROWS_AS(dice(labels_of({0, 1, 1, 0}, 2), three), ArgumentError);
  CHECK(mean_object_dice(labels_of({0, 1, 2, 0}, 3), three) == 1.0);
}

TEST_CASE("metrics are invariant to label permutation") {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> p(30), g(30);
    for (int i = 0; i < 30; ++i) {
      p[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
      g[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
    }
    std::vector<int> q = p;
    for (int& v : q) v = 1 - v;
    CHECK(acc(labels_of(p, 2), truth_of(g)) == acc(labels_of(q, 2), truth_of(g)));
    CHECK(rand_index(labels_of(p, 2), truth_of(g)) == rand_index(labels_of(q, 2), truth_of(g)));
    CHECK(dice(labels_of(p, 2), truth_of(g)) == dice(labels_of(q, 2), truth_of(g)));
  }
}

TEST_CASE("hungarian matches brute force") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    std::vector<std::vector<double>> c(n, std::vector<double>(n));
    for (auto& row : c)
      for (auto& v : row) v = u(rng);
    const auto a = hungarian(c);
    double got = 0.0;
    for (std::size_t i = 0; i < n; ++i) got += c[i][static_cast<std::size_t>(a[i])];
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += c[i][static_cast<std::size_t>(perm[i])];
      best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(got == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("load_ground_truth and resize_nearest") {
  const auto dir = std::filesystem::temp_directory_path() / "fastspec_tests";
  std::filesystem::create_directories(dir);
  const auto p = dir / "gt.pgm";
  {
    std::ofstream f(p);
    f << "P2\n2 2\n255\n0 255\n128 255\n";
  }
  const GroundTruth g = load_ground_truth(p);
  CHECK(g.labels == std::vector<int>{0, 2, 1, 2});
  CHECK(g.classes == 3);
  CHECK_FALSE(g.is_binary());
  const GroundTruth r = resize_nearest(g, 4);
  CHECK(r.width == 4);
  CHECK(r.labels[0] == 0);
  CHECK(r.labels[3] == 2);
  CHECK(r.labels[15] == 2);
  CHECK(r.labels[8] == 1);
}
