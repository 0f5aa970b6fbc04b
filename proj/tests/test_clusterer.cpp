#include "doctest.h"

#include "mlc/clusterer.hpp"
#include "mlc/rerank.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <map>
#include <set>

using namespace mlc;

namespace {

MatrixD two_triples() {
  MatrixD d = MatrixD::Constant(6, 6, 0.9);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j)
      if (i == j) d(i, j) = 0.0;
      else if (i / 3 == j / 3) d(i, j) = 0.1;
  return d;
}

oracle::Grid to_grid(const MatrixD& m) {
  oracle::Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

}  // namespace

TEST_CASE("dbscan on constructed matrices") {
  CHECK(dbscan(two_triples(), 0.3, 2) == LabelList{0, 0, 0, 1, 1, 1});
  CHECK(dbscan(two_triples(), 0.05, 2) == LabelList(6, kNoise));
  CHECK(dbscan(two_triples(), 1.0, 4) == LabelList(6, 0));
  // min_samples = 1 makes every point core.
  CHECK(dbscan(two_triples(), 0.05, 1) == LabelList{0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS(dbscan(two_triples(), 0.3, 0), ConfigError);
}

TEST_CASE("dbscan border points join the first cluster that reaches them") {
  // Triangles {0,1,5} and {3,4,6}; point 2 bridges 1 and 3. Only 1 and 3 have
  // four points within eps, so 2 is a border point reachable from both.
  MatrixD d = MatrixD::Constant(7, 7, 5.0);
  d.diagonal().setZero();
  auto set = [&](Index a, Index b, double v) { d(a, b) = d(b, a) = v; };
  set(0, 1, 0.1);
  set(0, 5, 0.1);
  set(1, 5, 0.1);
  set(3, 4, 0.1);
  set(3, 6, 0.1);
  set(4, 6, 0.1);
  set(2, 1, 0.2);
  set(2, 3, 0.2);
  const LabelList labels = dbscan(d, 0.25, 4);
  CHECK(labels[0] == 0);
  CHECK(labels[3] == 1);
  CHECK(labels[2] == 0);
  CHECK(labels == oracle::dbscan(to_grid(d), 0.25, 4));
}

TEST_CASE("dbscan agrees with the reference and keeps its structural invariants") {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixD d = pairwise_euclidean(rng.normal_matrix(60, 2));
    const double eps = rng.uniform(0.15, 0.6);
    const int min_samples = static_cast<int>(rng.uniform_int(1, 6));
    const LabelList labels = dbscan(d, eps, min_samples);
    CHECK(labels == oracle::dbscan(to_grid(d), eps, min_samples));
    CHECK(dbscan(d, eps, min_samples) == labels);

    std::vector<bool> core(60);
    for (Index i = 0; i < 60; ++i) core[i] = (d.row(i).array() <= eps).count() >= min_samples;
    std::map<int, bool> has_core;
    for (Index i = 0; i < 60; ++i) {
      if (labels[i] == kNoise) continue;
      if (core[i]) has_core[labels[i]] = true;
      bool anchored = core[i];
      for (Index j = 0; j < 60 && !anchored; ++j) anchored = core[j] && labels[j] == labels[i] && d(i, j) <= eps;
      CHECK(anchored);
    }
    for (const auto& [c, ok] : has_core) CHECK(ok);
  }
}

TEST_CASE("kmeans") {
  SUBCASE("k equal to N") {
    Rng rng(5);
    const MatrixD f = rng.normal_matrix(6, 3);
    const auto r = kmeans(f, 6, 1);
    CHECK(std::set<int>(r.labels.begin(), r.labels.end()).size() == 6);
    CHECK(r.inertia == doctest::Approx(0.0));
  }
  SUBCASE("two separated pairs") {
    MatrixD f(4, 2);
    f << 0, 0, 10, 10, 0.1, 0, 10, 10.1;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto r = kmeans(f, 2, seed);
      CHECK(r.labels[0] == r.labels[2]);
      CHECK(r.labels[1] == r.labels[3]);
      CHECK(r.labels[0] != r.labels[1]);
    }
  }
  SUBCASE("labels are total and deterministic") {
    Rng rng(8);
    const MatrixD f = rng.normal_matrix(50, 4);
    const auto a = kmeans(f, 7, 3);
    const auto b = kmeans(f, 7, 3);
    CHECK(a.labels == b.labels);
    CHECK(a.labels.size() == 50);
    for (int l : a.labels) {
      CHECK(l >= 0);
      CHECK(l < 7);
    }
    // Converged assignments are nearest-centroid.
    for (Index i = 0; i < 50; ++i) {
      const double own = (f.row(i) - a.centroids.row(a.labels[i])).squaredNorm();
      for (Index c = 0; c < 7; ++c) CHECK(own <= (f.row(i) - a.centroids.row(c)).squaredNorm() + 1e-9);
    }
  }
  CHECK_THROWS_AS(kmeans(MatrixD::Zero(3, 2), 4, 0), ConfigError);
}

TEST_CASE("select_clean") {
  const auto p = select_clean({0, -1, 0, 1, 1});
  CHECK(p.kept == IndexList{0, 2, 3, 4});
  CHECK(p.pseudo == LabelList{0, 0, 1, 1});
  CHECK(p.num_classes == 2);
  CHECK(p.dense_by_row() == LabelList{0, -1, 0, 1, 1});

  CHECK(select_clean({4, 2, 4}).pseudo == LabelList{0, 1, 0});
  CHECK(select_clean({1, 0}).kept == IndexList{0, 1});
  CHECK_THROWS_AS(select_clean({-1, -1}), EmptyCleanSet);

  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    LabelList raw(30);
    for (int& l : raw) l = static_cast<int>(rng.uniform_int(-1, 5));
    if (std::all_of(raw.begin(), raw.end(), [](int l) { return l < 0; })) continue;
    const auto s = select_clean(raw);
    CHECK(std::is_sorted(s.kept.begin(), s.kept.end()));
    for (std::size_t a = 0; a < s.kept.size(); ++a)
      for (std::size_t b = 0; b < s.kept.size(); ++b)
        CHECK((s.pseudo[a] == s.pseudo[b]) == (raw[s.kept[a]] == raw[s.kept[b]]));
    CHECK(*std::max_element(s.pseudo.begin(), s.pseudo.end()) == s.num_classes - 1);
  }
}

TEST_CASE("cluster quality") {
  CHECK(cluster_quality({3, 3, 7, 7, 1}, {0, 0, 1, 1, 2}).ari == doctest::Approx(1.0));
  CHECK(cluster_quality({3, 3, 7, 7, 1}, {0, 0, 1, 1, 2}).purity == doctest::Approx(1.0));
  CHECK(cluster_quality({0, 0, 0, 0, 0, 0}, {0, 0, 1, 1, 2, 2}).purity == doctest::Approx(1.0 / 3.0));
  // Noise rows are ignored.
  CHECK(cluster_quality({0, 0, -1, 1, 1}, {5, 5, 5, 6, 6}).ari == doctest::Approx(1.0));

  Rng rng(77);
  LabelList truth(600), random(600);
  for (int i = 0; i < 600; ++i) truth[i] = i % 20;
  double sum = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    for (int& l : random) l = static_cast<int>(rng.uniform_int(0, 19));
    const double ari = cluster_quality(random, truth).ari;
    CHECK(std::abs(ari) <= 0.1);
    sum += ari;
  }
  CHECK(std::abs(sum / 10) <= 0.05);
}

TEST_CASE("cluster method names") {
  CHECK(parse_cluster_method("dbscan") == ClusterMethod::Dbscan);
  CHECK(parse_cluster_method("kmeans") == ClusterMethod::KMeans);
  CHECK(to_string(ClusterMethod::KMeans) == "kmeans");
  CHECK_THROWS_AS(parse_cluster_method("spectral"), ConfigError);
}
