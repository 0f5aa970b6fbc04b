#include "doctest.h"

#include "mlc/rerank.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <set>

using namespace mlc;

namespace {

oracle::Grid to_grid(const MatrixD& m) {
  oracle::Grid g(static_cast<std::size_t>(m.rows()), std::vector<double>(static_cast<std::size_t>(m.cols())));
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) g[r][c] = m(r, c);
  return g;
}

IndexList as_list(const std::set<int>& s) { return IndexList(s.begin(), s.end()); }

MatrixD symmetric(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Index>(rows.size());
  MatrixD d(n, n);
  Index r = 0;
  for (const auto& row : rows) {
    Index c = 0;
    for (double x : row) d(r, c++) = x;
    ++r;
  }
  return d;
}

}  // namespace

TEST_CASE("pairwise euclidean distances") {
  const MatrixD e = MatrixD::Identity(2, 2);
  const MatrixD d = pairwise_euclidean(e);
  CHECK(d(0, 0) == 0.0);
  CHECK(d(0, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(d(1, 0) == d(0, 1));
  CHECK(pairwise_euclidean(MatrixD::Ones(4, 3)).isZero(0));

  Rng rng(3);
  const MatrixD f = rng.normal_matrix(30, 5);
  const MatrixD r = pairwise_euclidean(f);
  for (Index i = 0; i < 30; ++i) {
    CHECK(r(i, i) == 0.0);
    for (Index j = 0; j < 30; ++j) {
      CHECK(r(i, j) == r(j, i));
      CHECK(r(i, j) == doctest::Approx((f.row(i) - f.row(j)).norm()).epsilon(1e-12));
    }
  }
}

TEST_CASE("k-reciprocal sets") {
  SUBCASE("mutual nearest neighbors") {
    const MatrixD d = symmetric({{0, 1, 5}, {1, 0, 4}, {5, 4, 0}});
    CHECK(k_reciprocal_set(d, 0, 1) == IndexList{1});
    CHECK(k_reciprocal_set(d, 1, 1) == IndexList{0});
    CHECK(k_reciprocal_set(d, 2, 1).empty());
  }
  SUBCASE("a hub nobody picks back") {
    // Hub 0 is 1 away from everyone; 1-2 are a tight pair; 3 is alone.
    const MatrixD d = symmetric({{0, 1, 1.2, 1}, {1, 0, 0.5, 2}, {1.2, 0.5, 0, 2.1}, {1, 2, 2.1, 0}});
    CHECK(k_reciprocal_set(d, 0, 1).empty());
    CHECK(k_reciprocal_set(d, 1, 1) == IndexList{2});
    CHECK(k_reciprocal_set(d, 3, 1).empty());
  }
  SUBCASE("random instances agree with the direct definition") {
    Rng rng(9);
    for (int trial = 0; trial < 10; ++trial) {
      const MatrixD d = pairwise_euclidean(rng.normal_matrix(25, 3));
      const NeighborIndex nn(d);
      const auto g = to_grid(d);
      for (Index p = 0; p < 25; ++p)
        for (Index k : {1, 3, 7}) {
          const IndexList r = nn.reciprocal(p, k);
          CHECK(r == as_list(oracle::reciprocal(g, static_cast<int>(p), static_cast<int>(k))));
          const IndexList top = nn.topk(p, k);
          for (Index x : r) CHECK(std::find(top.begin(), top.end(), x) != top.end());
          const IndexList star = nn.expanded(p, k);
          CHECK(star == as_list(oracle::expanded(g, static_cast<int>(p), static_cast<int>(k))));
          CHECK(std::includes(star.begin(), star.end(), r.begin(), r.end()));
        }
    }
  }
}

TEST_CASE("expanded sets") {
  SUBCASE("tight clique among distant points") {
    const MatrixD d = symmetric({{0, .1, .1, 5, 6}, {.1, 0, .1, 5, 6}, {.1, .1, 0, 5, 6}, {5, 5, 5, 0, 9}, {6, 6, 6, 9, 0}});
    for (Index p = 0; p < 3; ++p) {
      IndexList star = expanded_set(d, p, 2);
      star.push_back(p);
      std::sort(star.begin(), star.end());
      CHECK(star == IndexList{0, 1, 2});
    }
  }
  SUBCASE("isolated point") {
    const MatrixD d = symmetric({{0, 1, 9}, {1, 0, 8}, {9, 8, 0}});
    CHECK(expanded_set(d, 2, 1).empty());
  }
}

TEST_CASE("neighbor lists are local") {
  Rng rng(13);
  const MatrixD f = rng.normal_matrix(20, 4);
  const MatrixD d = pairwise_euclidean(f);
  const NeighborIndex full(d);
  const Index removed = 7, k = 5;
  MatrixD reduced_f(19, 4);
  for (Index i = 0, r = 0; i < 20; ++i)
    if (i != removed) reduced_f.row(r++) = f.row(i);
  const NeighborIndex reduced(pairwise_euclidean(reduced_f));
  auto shift = [&](Index i) { return i > removed ? i - 1 : i; };
  for (Index p = 0; p < 20; ++p) {
    if (p == removed) continue;
    const IndexList before = full.topk(p, k);
    if (std::find(before.begin(), before.end(), removed) != before.end()) continue;
    IndexList mapped;
    for (Index g : before) mapped.push_back(shift(g));
    CHECK(reduced.topk(shift(p), k) == mapped);
  }
}

TEST_CASE("jaccard distance edge cases") {
  SUBCASE("duplicate points share an expanded neighborhood") {
    MatrixD f(5, 2);
    f << 0, 0, 0, 0, 3, 0, 0, 3, 3, 3;
    const auto j = jaccard_matrix(pairwise_euclidean(f), {2, 2, 0.0});
    CHECK(j.jaccard(0, 1) == doctest::Approx(0.0));
  }
  SUBCASE("separated groups have disjoint support") {
    MatrixD f(6, 1);
    f << 0, 0.1, 0.2, 10, 10.1, 10.2;
    const auto j = jaccard_matrix(pairwise_euclidean(f), {2, 1, 0.0});
    for (Index a = 0; a < 3; ++a)
      for (Index b = 3; b < 6; ++b) CHECK(j.jaccard(a, b) == 1.0);
  }
  CHECK_THROWS_AS(jaccard_matrix(MatrixD(MatrixD::Zero(3, 3)), {1, 2, 0.0}), ConfigError);
  CHECK_THROWS_AS(jaccard_matrix(MatrixD(MatrixD::Zero(3, 3)), {2, 1, 1.5}), ConfigError);
}

TEST_CASE("jaccard matrix matches the direct oracle and its invariants") {
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const MatrixD d = pairwise_euclidean(rng.normal_matrix(40, 6));
    const auto j = jaccard_matrix(d, {10, 4, 0.0});
    const auto ref = oracle::jaccard(to_grid(d), 10, 4);
    double worst = 0.0;
    for (Index p = 0; p < 40; ++p)
      for (Index g = 0; g < 40; ++g) {
        worst = std::max(worst, std::abs(j.jaccard(p, g) - ref[p][g]));
        CHECK(j.jaccard(p, g) == j.jaccard(g, p));
        CHECK(j.jaccard(p, g) >= 0.0);
        CHECK(j.jaccard(p, g) <= 1.0);
      }
    CHECK(worst <= 1e-12);
    CHECK(j.mixed == j.jaccard);

    const auto mixed = jaccard_matrix(d, {10, 4, 0.25});
    CHECK((mixed.mixed - (0.75 * j.jaccard + 0.25 * d / d.maxCoeff())).cwiseAbs().maxCoeff() <= 1e-12);
  }
}
