#pragma once

// Single-query retrieval evaluation (CMC Rank-k and mAP).

#include "mlc/error.hpp"
#include "mlc/types.hpp"

#include <algorithm>
#include <numeric>

namespace mlc {

template <typename Scalar>
struct EvalSet {
  Matrix<Scalar> features;
  LabelList ids;   // -1 marks junk rows
  LabelList cams;
};

template <typename Scalar>
struct EvalProtocol {
  EvalSet<Scalar> query;
  EvalSet<Scalar> gallery;
  bool exclude_same_camera = true;
};

struct RetrievalMetrics {
  double rank1 = 0.0;
  double rank5 = 0.0;
  double rank10 = 0.0;
  double mAP = 0.0;
  int skipped_queries = 0;
  int evaluated_queries = 0;
};

/// Gallery indices by ascending Euclidean distance to `query`, ties by index.
template <typename Scalar, typename Derived>
IndexList retrieve(const Eigen::MatrixBase<Derived>& query, const Matrix<Scalar>& gallery) {
  if (gallery.rows() == 0) throw EmptyGallery("gallery is empty");
  if (query.size() != gallery.cols()) throw ShapeError("query/gallery dimension mismatch");
  const Vector<Scalar> q = query.template cast<Scalar>();
  Vector<Scalar> dist(gallery.rows());
  for (Index g = 0; g < gallery.rows(); ++g) dist(g) = (gallery.row(g).transpose() - q).norm();
  IndexList order(static_cast<std::size_t>(gallery.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dist(a) < dist(b); });
  return order;
}

/// Per-query ranked relevance after junk and same-camera exclusion.
/// Returns an empty vector when the query has no valid match.
template <typename Scalar>
std::vector<bool> ranked_relevance(const EvalProtocol<Scalar>& p, Index q) {
  const int qid = p.query.ids[q];
  const int qcam = p.query.cams[q];
  std::vector<bool> rel;
  bool any = false;
  for (Index g : retrieve(p.query.features.row(q).transpose(), p.gallery.features)) {
    const int gid = p.gallery.ids[g];
    if (gid < 0) continue;
    if (p.exclude_same_camera && gid == qid && p.gallery.cams[g] == qcam) continue;
    rel.push_back(gid == qid);
    any = any || gid == qid;
  }
  if (!any) rel.clear();
  return rel;
}

template <typename Scalar>
RetrievalMetrics cmc_map(const EvalProtocol<Scalar>& p) {
  const Index nq = p.query.features.rows();
  if (p.gallery.features.rows() == 0) throw EmptyGallery("gallery is empty");
  if (p.query.features.cols() != p.gallery.features.cols()) throw ShapeError("query/gallery dimension mismatch");
  if (static_cast<Index>(p.query.ids.size()) != nq || static_cast<Index>(p.query.cams.size()) != nq ||
      static_cast<Index>(p.gallery.ids.size()) != p.gallery.features.rows() ||
      static_cast<Index>(p.gallery.cams.size()) != p.gallery.features.rows())
    throw ShapeError("eval metadata does not match features");

  RetrievalMetrics m;
  double hit1 = 0, hit5 = 0, hit10 = 0, ap_sum = 0;
  for (Index q = 0; q < nq; ++q) {
    if (p.query.ids[q] < 0) {
      ++m.skipped_queries;
      continue;
    }
    const std::vector<bool> rel = ranked_relevance(p, q);
    if (rel.empty()) {
      ++m.skipped_queries;
      continue;
    }
    const auto first = static_cast<std::size_t>(std::find(rel.begin(), rel.end(), true) - rel.begin());
    hit1 += first < 1;
    hit5 += first < 5;
    hit10 += first < 10;

    double correct = 0, precision_sum = 0;
    for (std::size_t k = 0; k < rel.size(); ++k) {
      if (!rel[k]) continue;
      correct += 1;
      precision_sum += correct / static_cast<double>(k + 1);
    }
    ap_sum += precision_sum / correct;
    ++m.evaluated_queries;
  }
  if (m.evaluated_queries > 0) {
    const double n = m.evaluated_queries;
    m.rank1 = hit1 / n;
    m.rank5 = hit5 / n;
    m.rank10 = hit10 / n;
    m.mAP = ap_sum / n;
  }
  return m;
}

}  // namespace mlc
