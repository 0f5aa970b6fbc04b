#include "doctest.h"

#include "mlc/data.hpp"
#include "mlc/evaluator.hpp"
#include "test_util.hpp"

using namespace mlc;

namespace {

/// Gallery on a line so the ranking of a query at 0 is the storage order.
EvalProtocol<double> line_case(const LabelList& gallery_ids, const LabelList& gallery_cams, int qid = 1, int qcam = 0) {
  EvalProtocol<double> p;
  p.query.features = MatrixD::Zero(1, 1);
  p.query.ids = {qid};
  p.query.cams = {qcam};
  const auto n = static_cast<Index>(gallery_ids.size());
  p.gallery.features.resize(n, 1);
  for (Index g = 0; g < n; ++g) p.gallery.features(g, 0) = static_cast<double>(g + 1);
  p.gallery.ids = gallery_ids;
  p.gallery.cams = gallery_cams;
  return p;
}

}  // namespace

TEST_CASE("retrieve ranks by distance with index tie-break") {
  const MatrixD g = MatrixD::Identity(2, 2);
  CHECK(retrieve(VectorD::Unit(2, 1), g) == IndexList{1, 0});
  VectorD mid(2);
  mid << 0.5, 0.5;
  CHECK(retrieve(mid, g) == IndexList{0, 1});
  CHECK_THROWS_AS(retrieve(mid, MatrixD(0, 2)), EmptyGallery);

  Rng rng(2);
  const MatrixD gal = rng.normal_matrix(40, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorD q = rng.normal_matrix(3, 1);
    Index best = 0;
    for (Index i = 1; i < 40; ++i)
      if ((gal.row(i).transpose() - q).norm() < (gal.row(best).transpose() - q).norm()) best = i;
    CHECK(retrieve(q, gal).front() == best);
  }
}

TEST_CASE("average precision by hand") {
  SUBCASE("matches at positions 2 and 4") {
    const auto m = cmc_map(line_case({0, 1, 2, 1}, {1, 1, 1, 1}));
    CHECK(m.mAP == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.rank1 == 0.0);
    CHECK(m.rank5 == 1.0);
  }
  SUBCASE("single perfect match") {
    const auto m = cmc_map(line_case({1, 0, 2}, {1, 1, 1}));
    CHECK(m.mAP == 1.0);
    CHECK(m.rank1 == 1.0);
  }
  SUBCASE("only same-camera matches: skipped") {
    const auto m = cmc_map(line_case({1, 0, 1}, {0, 1, 0}));
    CHECK(m.skipped_queries == 1);
    CHECK(m.evaluated_queries == 0);
  }
  SUBCASE("same-camera match removed from the ranking") {
    // Ranked: id1/cam0 (dropped), id0, id1/cam1 -> AP = 1/2.
    const auto m = cmc_map(line_case({1, 0, 1}, {0, 1, 1}));
    CHECK(m.mAP == doctest::Approx(0.5));
    auto keep = line_case({1, 0, 1}, {0, 1, 1});
    keep.exclude_same_camera = false;
    CHECK(cmc_map(keep).mAP == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  }
  SUBCASE("junk rows count neither way") {
    const auto m = cmc_map(line_case({-1, 1, -1, 0, 1}, {1, 1, 1, 1, 1}));
    CHECK(m.mAP == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
    CHECK(m.rank1 == 1.0);
    CHECK(cmc_map(line_case({1}, {1}, -1)).skipped_queries == 1);
  }
}

TEST_CASE("metric invariants on random protocols") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    EvalProtocol<double> p;
    p.query.features = rng.normal_matrix(10, 3);
    p.gallery.features = rng.normal_matrix(30, 3);
    for (int i = 0; i < 10; ++i) {
      p.query.ids.push_back(static_cast<int>(rng.uniform_int(0, 4)));
      p.query.cams.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }
    for (int i = 0; i < 30; ++i) {
      p.gallery.ids.push_back(static_cast<int>(rng.uniform_int(0, 4)));
      p.gallery.cams.push_back(static_cast<int>(rng.uniform_int(0, 1)));
    }
    const auto m = cmc_map(p);
    CHECK(m.mAP >= 0.0);
    CHECK(m.mAP <= 1.0);
    CHECK(m.rank1 <= m.rank5);
    CHECK(m.rank5 <= m.rank10);
    CHECK(m.rank10 <= 1.0);
    CHECK(m.skipped_queries + m.evaluated_queries == 10);

    std::vector<Index> perm(30);
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    EvalProtocol<double> q = p;
    for (Index i = 0; i < 30; ++i) {
      q.gallery.features.row(i) = p.gallery.features.row(perm[i]);
      q.gallery.ids[i] = p.gallery.ids[perm[i]];
      q.gallery.cams[i] = p.gallery.cams[perm[i]];
    }
    const auto mq = cmc_map(q);
    CHECK(mq.mAP == doctest::Approx(m.mAP).epsilon(1e-12));
    CHECK(mq.rank1 == m.rank1);
  }
}

TEST_CASE("noise-free synthetic identities retrieve perfectly on raw inputs") {
  const Dataset d = generate_synthetic({10, 6, 8, 0.0, 2, 0.0, 3});
  auto [train, query] = split_holdout(d, 2);
  EvalProtocol<double> p{{query.inputs, *query.truth_ids, query.camera_ids},
                         {train.inputs, *train.truth_ids, train.camera_ids}};
  const auto m = cmc_map(p);
  CHECK(m.rank1 == 1.0);
  CHECK(m.mAP == 1.0);
  CHECK(m.skipped_queries == 0);
}
