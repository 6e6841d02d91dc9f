#include <cmath>
#include <random>

#include "doctest.h"
#include "fastspec/affinity.hpp"
#include "fastspec/errors.hpp"
#include "oracles.hpp"

using namespace fastspec;

namespace {

AffinityParams small_params() {
  AffinityParams p;
  p.r = 3;
  p.R = 6;
  p.sigma_C = 1.0;
  return p;
}

}  // namespace

TEST_CASE("edge_map") {
  SUBCASE("constant image has no edges") {
    for (double v : edge_map(GrayImage(6, 6, 0.4)).strength) CHECK(v == 0.0);
  }
  SUBCASE("vertical step responds on the two columns beside it") {
    GrayImage img(4, 4);
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 2; x < 4; ++x) img.at(x, y) = 1.0;
    const EdgeMap e = edge_map(img);
    for (std::size_t y = 0; y < 4; ++y) {
      CHECK(e.at(0, y) == 0.0);
      CHECK(e.at(1, y) == doctest::Approx(4.0));
      CHECK(e.at(2, y) == doctest::Approx(4.0));
      CHECK(e.at(3, y) == 0.0);
    }
  }
  SUBCASE("linear ramp has constant interior magnitude") {
    GrayImage img(8, 8);
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) img.at(x, y) = static_cast<double>(x) / 8.0;
    const EdgeMap e = edge_map(img);
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 1; x < 7; ++x) CHECK(e.at(x, y) == doctest::Approx(1.0));
  }
}

TEST_CASE("pixel_affinity hand values") {
  AffinityParams p = small_params();
  GrayImage flat(5, 5, 0.5);
  const EdgeMap none = edge_map(flat);
  CHECK(pixel_affinity(flat, none, p, 0, 0) == doctest::Approx(1.0 + p.alpha));
  // (0,0)-(2,1): d^2 = 5
  CHECK(pixel_affinity(flat, none, p, 0, 1 * 5 + 2) ==
        doctest::Approx(std::sqrt(std::exp(-5.0 / p.sigma_x)) + p.alpha));
  CHECK(pixel_affinity(flat, none, p, 0, 4 * 5 + 4) == 0.0);  // d^2 = 32 > 9

  GrayImage img(4, 4);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 2; x < 4; ++x) img.at(x, y) = 1.0;
  const EdgeMap e = edge_map(img);
  const double wc = std::exp(-16.0 / p.sigma_C);
  CHECK(pixel_affinity(img, e, p, 1, 1) == doctest::Approx(std::sqrt(wc) + p.alpha * wc));
  const double wi = std::exp(-1.0 / p.sigma_x - 1.0 / p.sigma_I);
  CHECK(pixel_affinity(img, e, p, 1, 2) == doctest::Approx(std::sqrt(wi * wc) + p.alpha * wc));
}

TEST_CASE("affinity parameters are validated") {
  AffinityParams p;
  p.sigma_x = 0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p = {};
  p.alpha = -1;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p = {};
  p.r = 0.0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
}

TEST_CASE("w_C never increases when an edge on the line gets stronger") {
  std::mt19937_64 rng(11);
  const GrayImage img = oracle::random_image(12, rng);
  EdgeMap e = edge_map(img);
  AffinityParams p = small_params();
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t xa = rng() % 12, ya = rng() % 12, xb = rng() % 12, yb = rng() % 12;
    const double before = max_edge_sq_on_line(e, xa, ya, xb, yb);
    CHECK(before == max_edge_sq_on_line(e, xb, yb, xa, ya));
    const double w0 = affinity_kernel(p, 1.0, 0.01, before);
    e.strength[ya * 12 + xa] += 0.5;
    const double after = max_edge_sq_on_line(e, xa, ya, xb, yb);
    CHECK(after >= before);
    CHECK(affinity_kernel(p, 1.0, 0.01, after) <= w0);
  }
}

TEST_CASE("pixel_W matches the all-pairs loop") {
  std::mt19937_64 rng(12);
  const GrayImage img = oracle::random_image(8, rng);
  const EdgeMap e = edge_map(img);
  const AffinityParams p = small_params();
  const SparseSymMatrix w = pixel_W(img, e, p);
  CHECK(w.order() == 64);
  CHECK(w.is_symmetric());
  const Eigen::MatrixXd d = w.to_dense();
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j)
      CHECK(d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
            pixel_affinity(img, e, p, i, j));
}

TEST_CASE("pixel_W small cases and cap") {
  GrayImage two(2, 1);
  two.data = {0.1, 0.7};
  const EdgeMap e = edge_map(two);
  AffinityParams p = small_params();
  const SparseSymMatrix w = pixel_W(two, e, p);
  CHECK(w.order() == 2);
  CHECK(w.get(0, 1) == pixel_affinity(two, e, p, 0, 1));
  CHECK(w.get(0, 1) > 0.0);

  p.r = 1.0;
  p.sigma_x = 1e-3;  // neighbors at distance 1 survive the radius but barely weigh
  GrayImage g(4, 4, 0.2);
  const SparseSymMatrix near = pixel_W(g, edge_map(g), p);
  CHECK(near.nnz() == 16 + 2 * 24);

  CHECK_THROWS_AS(pixel_W(g, edge_map(g), p, 8), CapacityError);

  p.r = 0.5;
  const SparseSymMatrix diag = pixel_W(g, edge_map(g), p);
  CHECK(diag.nnz() == 16);
  for (std::size_t i = 0; i < 16; ++i) CHECK(diag.get(i, i) > 0.0);
}

TEST_CASE("build_H") {
  std::mt19937_64 rng(13);
  const GrayImage img = oracle::random_image(8, rng);
  const QuadTree unit = decompose(img, 0.0, 1);
  // unit leaves: H is the permutation pixel -> leaf id
  const Eigen::MatrixXd hu = build_H(unit).to_dense();
  const auto owner = unit.pixel_labels();
  for (Eigen::Index i = 0; i < 64; ++i) {
    CHECK(hu(i, owner[static_cast<std::size_t>(i)]) == 1.0);
    CHECK(hu.row(i).sum() == 1.0);
  }

  const QuadTree one = decompose(GrayImage(8, 8, 0.1), 0.01);
  const Eigen::MatrixXd h1 = build_H(one).to_dense();
  CHECK(h1.cols() == 1);
  for (Eigen::Index i = 0; i < 64; ++i) CHECK(h1(i, 0) == doctest::Approx(1.0 / 8.0));

  for (int trial = 0; trial < 10; ++trial) {
    const GrayImage b = oracle::blocky_image(16, rng);
    const QuadTree tree = decompose(b, 0.002);
    const Eigen::MatrixXd h = build_H(tree).to_dense();
    CHECK((h - oracle::dense_H(tree)).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::MatrixXd hth = h.transpose() * h;
    CHECK((hth - Eigen::MatrixXd::Identity(hth.rows(), hth.cols())).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("superpixel_W_exact equals dense H^T W H") {
  std::mt19937_64 rng(14);
  const AffinityParams p = small_params();
  for (int trial = 0; trial < 5; ++trial) {
    const GrayImage img = oracle::blocky_image(16, rng);
    const EdgeMap e = edge_map(img);
    const QuadTree tree = decompose(img, 0.001);
    const Eigen::MatrixXd w = pixel_W(img, e, p).to_dense();
    const Eigen::MatrixXd h = oracle::dense_H(tree);
    const Eigen::MatrixXd expect = h.transpose() * w * h;
    const SparseSymMatrix got = superpixel_W_exact(img, e, p, tree);
    CHECK(got.is_symmetric());
    CHECK((got.to_dense() - expect).cwiseAbs().maxCoeff() < 1e-10);
  }

  const GrayImage img = oracle::random_image(8, rng);
  const EdgeMap e = edge_map(img);
  const QuadTree unit = decompose(img, 0.0, 1);
  const auto owner = unit.pixel_labels();
  const SparseSymMatrix wt = superpixel_W_exact(img, e, p, unit);
  const SparseSymMatrix w = pixel_W(img, e, p);
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j)
      CHECK(std::abs(wt.get(static_cast<std::size_t>(owner[i]), static_cast<std::size_t>(owner[j])) -
                     w.get(i, j)) < 1e-12);
}

TEST_CASE("superpixel_W_exact: leaves out of range do not connect") {
  GrayImage img(8, 8, 0.2);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x)
      if (x >= 4 && y >= 4) img.at(x, y) = 0.9;
  AffinityParams p = small_params();
  p.r = 1.0;
  const QuadTree tree = decompose(img, 0.001);
  REQUIRE(tree.superpixel_count() == 4);
  const SparseSymMatrix w = superpixel_W_exact(img, edge_map(img), p, tree);
  CHECK(w.get(0, 3) == 0.0);  // ul and dr quadrants only touch at a corner
  CHECK(w.get(0, 1) > 0.0);
}

TEST_CASE("superpixel_W_approx") {
  std::mt19937_64 rng(15);
  AffinityParams p = small_params();
  p.R = p.r;
  SUBCASE("unit leaves reproduce pixel_W") {
    const GrayImage img = oracle::random_image(8, rng);
    const EdgeMap e = edge_map(img);
    const QuadTree unit = decompose(img, 0.0, 1);
    const SparseSymMatrix a = superpixel_W_approx(superpixel_stats(unit, img), e, p);
    const SparseSymMatrix w = pixel_W(img, e, p);
    CHECK(a.nnz() == w.nnz());
    const auto owner = unit.pixel_labels();
    for (std::size_t i = 0; i < 64; ++i)
      for (std::size_t j = 0; j < 64; ++j)
        CHECK(std::abs(a.get(static_cast<std::size_t>(owner[i]), static_cast<std::size_t>(owner[j])) -
                       w.get(i, j)) < 1e-12);
  }
  SUBCASE("leaves farther than R are not connected") {
    GrayImage img(16, 16, 0.5);
    img.at(0, 0) = 0.0;
    const QuadTree tree = decompose(img, 1e-6, 1);
    const SparseSymMatrix a = superpixel_W_approx(superpixel_stats(tree, img), edge_map(img), p);
    const auto stats = superpixel_stats(tree, img);
    for (std::size_t i = 0; i < stats.size(); ++i)
      for (std::size_t j = 0; j < stats.size(); ++j) {
        const double dx = stats[i].cx - stats[j].cx, dy = stats[i].cy - stats[j].cy;
        if (dx * dx + dy * dy > p.R * p.R) CHECK(a.get(i, j) == 0.0);
      }
    CHECK(a.is_symmetric());
  }
  SUBCASE("four constant leaves stay within 10% of exact") {
    GrayImage img(8, 8, 0.5);
    img.at(0, 0) = 0.5 + 1e-3;  // force one split into 4x4 quadrants
    AffinityParams q;
    q.r = q.R = 100;
    q.sigma_x = 400;
    q.sigma_C = 1.0;
    const QuadTree tree = decompose(img, 1e-9, 4);
    REQUIRE(tree.superpixel_count() == 4);
    const EdgeMap e = edge_map(img);
    const Eigen::MatrixXd ex = superpixel_W_exact(img, e, q, tree).to_dense();
    const Eigen::MatrixXd ap = superpixel_W_approx(superpixel_stats(tree, img), e, q).to_dense();
    for (Eigen::Index i = 0; i < 4; ++i)
      for (Eigen::Index j = 0; j < 4; ++j)
        CHECK(std::abs(ap(i, j) - ex(i, j)) / ex(i, j) < 0.10);
  }
}

TEST_CASE("degree_and_laplacian") {
  SUBCASE("2x2 hand example") {
    const auto w = SparseSymMatrix::from_dense(Eigen::MatrixXd::Ones(2, 2));
    const NormalizedLaplacian n = degree_and_laplacian(w);
    CHECK(n.degree == std::vector<double>{2.0, 2.0});
    const Eigen::MatrixXd l = n.laplacian.to_dense();
    CHECK(l(0, 0) == doctest::Approx(0.5));
    CHECK(l(0, 1) == doctest::Approx(-0.5));
    CHECK(l(1, 1) == doctest::Approx(0.5));
  }
  SUBCASE("diagonal W gives the zero matrix") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d.diagonal() << 1.0, 2.0, 3.0;
    const Eigen::MatrixXd l = degree_and_laplacian(SparseSymMatrix::from_dense(d)).laplacian.to_dense();
    CHECK(l.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("isolated node") {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 3);
    d(0, 1) = d(1, 0) = 1.0;
    try {
      degree_and_laplacian(SparseSymMatrix::from_dense(d));
      FAIL("expected IsolatedNodeError");
    } catch (const IsolatedNodeError& err) {
      CHECK(err.node() == 2);
    }
    CHECK_NOTHROW(degree_and_laplacian(SparseSymMatrix::from_dense(d), true));
  }
  SUBCASE("spectrum in [0,2] with D^{1/2} 1 in the null space") {
    std::mt19937_64 rng(16);
    const AffinityParams p = small_params();
    for (int trial = 0; trial < 5; ++trial) {
      const GrayImage img = oracle::blocky_image(16, rng);
      const EdgeMap e = edge_map(img);
      const QuadTree tree = decompose(img, 0.002);
      const SparseSymMatrix w = superpixel_W_exact(img, e, p, tree);
      const NormalizedLaplacian n = degree_and_laplacian(w);
      CHECK(n.laplacian.is_symmetric());
      const Eigen::MatrixXd l = n.laplacian.to_dense();
      const oracle::Eig eig = oracle::jacobi(l);
      CHECK(eig.values(0) > -1e-10);
      CHECK(eig.values(eig.values.size() - 1) < 2.0 + 1e-10);
      Eigen::VectorXd s(l.rows());
      for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = std::sqrt(n.degree[static_cast<std::size_t>(i)]);
      CHECK((l * s).norm() < 1e-10 * s.norm());
      for (Eigen::Index i = 0; i < l.rows(); ++i) {
        CHECK(l(i, i) >= 0.0);
        CHECK(l(i, i) <= 1.0);
      }
    }
  }
}

TEST_CASE("serial and parallel kernels agree bit for bit") {
  std::mt19937_64 rng(17);
  const GrayImage img = oracle::blocky_image(32, rng);
  AffinityParams p = small_params();
  p.R = 12;
  const EdgeMap es = edge_map(img, Exec::serial);
  const EdgeMap ep = edge_map(img, Exec::parallel);
  CHECK(es.strength == ep.strength);

  const SparseSymMatrix ws = pixel_W(img, es, p, kDefaultPixelCap, Exec::serial);
  const SparseSymMatrix wp = pixel_W(img, es, p, kDefaultPixelCap, Exec::parallel);
  CHECK(std::equal(ws.values().begin(), ws.values().end(), wp.values().begin(), wp.values().end()));
  CHECK(std::equal(ws.cols().begin(), ws.cols().end(), wp.cols().begin(), wp.cols().end()));

  const QuadTree tree = decompose(img, 0.002);
  const auto xs = superpixel_W_exact(img, es, p, tree, kDefaultPixelCap, Exec::serial);
  const auto xp = superpixel_W_exact(img, es, p, tree, kDefaultPixelCap, Exec::parallel);
  CHECK(std::equal(xs.values().begin(), xs.values().end(), xp.values().begin(), xp.values().end()));

  const auto stats = superpixel_stats(tree, img);
  const auto as = superpixel_W_approx(stats, es, p, Exec::serial);
  const auto ap = superpixel_W_approx(stats, es, p, Exec::parallel);
  CHECK(std::equal(as.values().begin(), as.values().end(), ap.values().begin(), ap.values().end()));
  CHECK(std::equal(as.cols().begin(), as.cols().end(), ap.cols().begin(), ap.cols().end()));

  std::vector<double> x(ws.order()), ys(ws.order()), yp(ws.order());
  for (auto& v : x) v = static_cast<double>(rng() % 1000) / 1000.0;
  ws.multiply(x, ys, Exec::serial);
  ws.multiply(x, yp, Exec::parallel);
  CHECK(ys == yp);
}
