#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "fastspec/errors.hpp"
#include "fastspec/fsc.hpp"
#include "fastspec/metrics.hpp"
#include "fastspec/mfsc.hpp"
#include "fastspec/ncut.hpp"
#include "fastspec/synthetic.hpp"
#include "oracles.hpp"

using namespace fastspec;

namespace {

SegmentOptions desk_options() {
  SegmentOptions o;
  o.affinity.r = 3;
  o.affinity.R = 40;
  o.affinity.sigma_C = 1.0;
  o.t = 0.001;
  return o;
}

SyntheticImage half_half(std::size_t side, double noise = 0.02, std::uint64_t seed = 1) {
  SyntheticSpec s;
  s.side = side;
  s.noise_sigma = noise;
  s.seed = seed;
  return make_synthetic(s);
}

// Largest sine of the principal angles between two column spaces.
double max_sine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                             Eigen::MatrixXd::Identity(a.rows(), a.cols());
  const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                             Eigen::MatrixXd::Identity(b.rows(), b.cols());
  return Eigen::JacobiSVD<Eigen::MatrixXd>(qb - qa * (qa.transpose() * qb)).singularValues()(0);
}

}  // namespace

TEST_CASE("ncut") {
  SegmentOptions o = desk_options();
  SUBCASE("constant image, k = 1") {
    o.k = 1;
    const Segmentation s = ncut(GrayImage(8, 8, 0.4), o);
    for (int l : s.labels.labels) CHECK(l == 0);
  }
  SUBCASE("16x16 half/half") {
    const SyntheticImage img = half_half(16, 0.0);
    const Segmentation s = ncut(img.image, o);
    CHECK(rand_index(s.labels, img.truth) == 1.0);
  }
  SUBCASE("k = n runs and labels every pixel distinctly") {
    std::mt19937_64 rng(41);
    const GrayImage img = oracle::random_image(4, rng);
    o.k = 16;
    const Segmentation s = ncut(img, o);
    std::set<int> used(s.labels.labels.begin(), s.labels.labels.end());
    CHECK(used.size() == 16);
  }
  SUBCASE("generalized residuals") {
    std::mt19937_64 rng(42);
    const GrayImage img = oracle::blocky_image(16, rng);
    o.k = 3;
    const NcutEmbedding e = ncut_embedding(img, o);
    const Eigen::MatrixXd w = e.w.to_dense();
    Eigen::VectorXd d(w.rows());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = e.degree[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd l = Eigen::MatrixXd(d.asDiagonal()) - w;
    for (Eigen::Index c = 0; c < 3; ++c) {
      const Eigen::VectorXd u = e.u.col(c);
      const double lambda = e.eigen.values[static_cast<std::size_t>(c)];
      CHECK((l * u - lambda * d.cwiseProduct(u)).norm() <= 1e-6);
    }
  }
  SUBCASE("capacity") {
    o.ncut_cap = 64;
    CHECK_THROWS_AS(ncut(GrayImage(16, 16, 0.1), o), CapacityError);
  }
  SUBCASE("block-diagonal W over two components is recovered exactly") {
    std::mt19937_64 rng(46);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    const Eigen::Index n = 40;
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    std::vector<int> truth(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      truth[static_cast<std::size_t>(i)] = (i * 7 % 5) < 2 ? 1 : 0;  // interleaved membership
      for (Eigen::Index j = 0; j <= i; ++j)
        if (truth[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(j)])
          w(i, j) = w(j, i) = u(rng);
    }
    const NormalizedLaplacian lap = degree_and_laplacian(SparseSymMatrix::from_dense(w));
    const EigenResult e = smallest_eigenpairs(lap.laplacian, 2, LanczosOptions{});
    Eigen::MatrixXd emb = e.vectors;
    for (Eigen::Index i = 0; i < n; ++i) emb.row(i) /= std::sqrt(lap.degree[static_cast<std::size_t>(i)]);
    const auto labels = cluster_rows(emb, 2, Clusterer::kmeans, o);
    CHECK(oracle::brute_rand_index(labels, truth) == 1.0);
  }
}

TEST_CASE("fsc") {
  SegmentOptions o = desk_options();
  SUBCASE("constant image") {
    o.k = 1;
    const Segmentation s = fsc(GrayImage(16, 16, 0.7), o);
    CHECK(s.superpixels == 1);
    for (int l : s.labels.labels) CHECK(l == 0);
  }
  SUBCASE("half/half 64x64") {
    const SyntheticImage img = half_half(64);
    const Segmentation s = fsc(img.image, o);
    CHECK(rand_index(s.labels, img.truth) == 1.0);
  }
  SUBCASE("k > m names m") {
    o.k = 3;
    try {
      fsc(GrayImage(16, 16, 0.7), o);
      FAIL("expected ArgumentError");
    } catch (const ArgumentError& e) {
      CHECK(std::string(e.what()).find("1 superpixels") != std::string::npos);
    }
  }
  SUBCASE("unit leaves reduce to Ncut") {
    std::mt19937_64 rng(43);
    o.t = 0.0;
    o.min_block_side = 1;
    o.mode = WeightMode::exact;
    for (int trial = 0; trial < 3; ++trial) {
      const GrayImage img = oracle::blocky_image(8 << (trial % 2), rng);
      o.k = 2 + static_cast<std::size_t>(trial);
      const FscEmbedding f = fsc_embedding(img, o);
      const NcutEmbedding n = ncut_embedding(img, o);
      CHECK(max_sine(f.g_p, n.u) <= 1e-6);
    }
    const SyntheticImage hh = half_half(16);
    o.k = 2;
    CHECK(oracle::brute_rand_index(fsc(hh.image, o).labels.labels, ncut(hh.image, o).labels.labels) >= 0.99);
  }
  SUBCASE("relaxed objective and lifted rows") {
    std::mt19937_64 rng(44);
    const GrayImage img = oracle::blocky_image(32, rng);
    o.k = 3;
    for (LiftMode lift : {LiftMode::indicator, LiftMode::membership}) {
      o.lift = lift;
      const FscEmbedding f = fsc_embedding(img, o);
      const NormalizedLaplacian lap = degree_and_laplacian(f.w_tilde);
      const Eigen::MatrixXd t = f.eigen.vectors;
      const double trace = (t.transpose() * lap.laplacian.to_dense() * t).trace();
      double sum = 0.0;
      for (double v : f.eigen.values) sum += v;
      CHECK(std::abs(trace - sum) <= 1e-8);
      const auto owner = f.tree.pixel_labels();
      for (std::size_t s = 0; s < f.tree.superpixel_count(); ++s) {
        const QuadNode& leaf = f.tree.leaf(s);
        const Eigen::RowVectorXd first =
            f.g_p.row(static_cast<Eigen::Index>(leaf.y0 * 32 + leaf.x0));
        for (std::size_t i = 0; i < owner.size(); ++i)
          if (owner[i] == static_cast<std::int32_t>(s))
            CHECK(f.g_p.row(static_cast<Eigen::Index>(i)) == first);
      }
    }
  }
  SUBCASE("clustering superpixels and broadcasting") {
    const SyntheticImage img = half_half(64);
    o.cluster_superpixels = true;
    CHECK(rand_index(fsc(img.image, o).labels, img.truth) == 1.0);
  }
}

TEST_CASE("init_level") {
  std::mt19937_64 rng(45);
  const GrayImage img = oracle::random_image(8, rng);
  const QuadTree full = decompose(img, 0.0, 1);
  const auto leaves = init_level(full, full.depth);
  CHECK(leaves.size() == 64);
  for (const auto& c : leaves) {
    CHECK(c.identity);
    CHECK(c.rows == 1);
    CHECK(c.dense() == Eigen::MatrixXd::Identity(1, 1));
  }
  const auto mid = init_level(full, 3);
  CHECK(mid.size() == 16);
  for (const auto& c : mid) CHECK(c.dense() == Eigen::MatrixXd::Identity(4, 4));
  CHECK_THROWS_AS(init_level(full, 0), ArgumentError);
  CHECK_THROWS_AS(init_level(full, full.depth + 1), ArgumentError);

  const QuadTree flat = decompose(GrayImage(8, 8, 0.5), 0.1);
  const auto one = init_level(flat, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].columns() == 1);
}

TEST_CASE("merge_children") {
  GrayImage img(2, 2);
  img.data = {0.1, 0.2, 0.3, 0.4};
  const QuadTree tree = decompose(img, 0.0, 1);
  REQUIRE(tree.superpixel_count() == 4);
  const auto cut = init_level(tree, 2);
  const std::array<const NodeClustering*, 4> kids{&cut[0], &cut[1], &cut[2], &cut[3]};

  Eigen::MatrixXd w(4, 4);
  w << 2.0, 1.0, 0.1, 0.2, 1.0, 2.0, 0.3, 0.1, 0.1, 0.3, 2.0, 0.5, 0.2, 0.1, 0.5, 2.0;
  const auto ws = SparseSymMatrix::from_dense(w);

  for (MergeRule rule : {MergeRule::projected, MergeRule::ritz}) {
    CAPTURE(static_cast<int>(rule));
    MergeOptions mo;
    mo.rule = rule;
    SUBCASE("four singletons, k_out = 4: orthonormal 4x4") {
      const NodeClustering m = merge_children(tree, 0, kids, ws, 4, mo);
      CHECK(m.columns() == 4);
      const Eigen::MatrixXd q = m.dense();
      CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(m.superpixel_ids() == std::vector<std::size_t>{0, 1, 2, 3});
    }
    SUBCASE("block-diagonal W, k_out = 2: two-block indicator span") {
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 4);
      b.block(0, 0, 2, 2) << 1.0, 0.5, 0.5, 1.0;
      b.block(2, 2, 2, 2) << 2.0, 0.7, 0.7, 2.0;
      const auto bs = SparseSymMatrix::from_dense(b);
      const NodeClustering m = merge_children(tree, 0, kids, bs, 2, mo);
      Eigen::MatrixXd ind = Eigen::MatrixXd::Zero(4, 2);
      ind(0, 0) = ind(1, 0) = ind(2, 1) = ind(3, 1) = 1.0;
      CHECK(max_sine(m.dense(), ind) < 1e-8);
      // component recovered by sign pattern after rotation onto the indicators
      const Eigen::MatrixXd q = m.dense();
      CHECK(std::abs(q.row(0).dot(q.row(2))) < 1e-10);
      CHECK(q.row(0).isApprox(q.row(1)));
    }
    SUBCASE("e = k_out keeps the column space") {
      const NodeClustering m = merge_children(tree, 0, kids, ws, 4, mo);
      CHECK(max_sine(m.dense(), Eigen::MatrixXd::Identity(4, 4)) < 1e-10);
    }
    SUBCASE("k_out above e records a deficit") {
      LevelRecord rec;
      const NodeClustering m = merge_children(tree, 0, kids, ws, 6, mo, &rec);
      CHECK(m.columns() == 4);
      CHECK(m.deficit == 2);
      CHECK(rec.retained == 4);
      CHECK(rec.columns_in == 4);
      CHECK(rec.eigenvalues.size() == 4);
    }
  }
  SUBCASE("children must come in ul, ur, dl, dr order") {
    const std::array<const NodeClustering*, 4> bad{&cut[1], &cut[0], &cut[2], &cut[3]};
    CHECK_THROWS_AS(merge_children(tree, 0, bad, ws, 2), ArgumentError);
  }
}

TEST_CASE("mfsc") {
  SegmentOptions o = desk_options();
  SUBCASE("constant image is one cluster") {
    o.k = 1;
    const Segmentation s = mfsc(GrayImage(32, 32, 0.3), o);
    for (int l : s.labels.labels) CHECK(l == 0);
  }
  SUBCASE("half/half 64x64, l_init 3, k_int 4") {
    const SyntheticImage img = half_half(64);
    const Segmentation s = mfsc(img.image, o);
    CHECK(rand_index(s.labels, img.truth) == 1.0);
  }
  SUBCASE("l_init = 1 agrees with fsc") {
    SyntheticSpec spec;
    spec.split = 0.4;
    spec.noise_sigma = 0.02;
    const SyntheticImage img = make_synthetic(spec);
    o.l_init = 1;
    CHECK(oracle::brute_rand_index(mfsc(img.image, o).labels.labels,
                                   fsc(img.image, o).labels.labels) >= 0.99);
  }
  SUBCASE("k_int below k is rejected") {
    o.k = 3;
    o.k_int = 2;
    const SyntheticImage img = half_half(64, 0.05);
    o.t = 0.0005;
    CHECK_THROWS_AS(mfsc(img.image, o), ArgumentError);
  }
  SUBCASE("bookkeeping, rank and bounded eigen work") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::rectangle;
    spec.split = 0.4;
    spec.noise_sigma = 0.02;
    const SyntheticImage img = make_synthetic(spec);
    o.record_levels = true;
    o.l_init = 4;
    for (MergeRule rule : {MergeRule::ritz, MergeRule::projected}) {
      o.merge = rule;
      const MfscEmbedding e = mfsc_embedding(img.image, o);
      CHECK(e.root.rows == e.tree.superpixel_count());
      CHECK(e.root.columns() == o.k);
      const Eigen::MatrixXd q = e.root.dense();
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(q);
      CHECK(svd.singularValues().minCoeff() > 1e-10);
      for (const LevelRecord& rec : e.levels) {
        CHECK(rec.retained == std::min(rec.k_out, rec.columns_in));
        if (rec.level < e.start_level - 1) CHECK(rec.columns_in <= 4 * o.k_int);
      }
      const Segmentation again = mfsc(img.image, o);
      CHECK(again.labels.labels == mfsc(img.image, o).labels.labels);
    }
  }
  SUBCASE("robust across l_init on the two-region image") {
    const SyntheticImage img = half_half(64);
    for (int l = 1; l <= 6; ++l) {
      o.l_init = l;
      CHECK(rand_index(mfsc(img.image, o).labels, img.truth) == 1.0);
    }
  }
}
