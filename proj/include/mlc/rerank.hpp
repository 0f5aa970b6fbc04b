#pragma once

// k-reciprocal encoding with Jaccard distance.
//
//   R(p,k)  = { g in topk(p,k) : p in topk(g,k) }          (self excluded)
//   R*(p,k) = R(p,k) U R(q,ceil(k/2)) for q in R(p,k) with
//             |R(p,k) n R(q,ceil(k/2))| >= 2/3 |R(q,ceil(k/2))|
//   V[p][g] = exp(-D[p][g]) on R*(p,k1), 0 elsewhere; then V[p] is replaced by
//             the mean of V over the k2 nearest points including p itself.
//   D_J     = 1 - sum min(V_p, V_g) / sum max(V_p, V_g)

#include "mlc/error.hpp"
#include "mlc/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mlc {

struct RerankParams {
  int k1 = 20;
  int k2 = 6;
  double lambda_mix = 0.0;

  void validate() const {
    if (!(k2 >= 1 && k1 >= k2)) throw ConfigError("rerank needs k1 >= k2 >= 1");
    if (!(lambda_mix >= 0.0 && lambda_mix <= 1.0)) throw ConfigError("lambda_mix must lie in [0, 1]");
  }
};

template <typename Derived>
Matrix<typename Derived::Scalar> pairwise_euclidean(const Eigen::MatrixBase<Derived>& features) {
  using Scalar = typename Derived::Scalar;
  const Index n = features.rows();
  Matrix<Scalar> d = Matrix<Scalar>::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const Scalar v = (features.row(i) - features.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

/// Per-row neighbor order (self excluded, ascending distance, ties by index)
/// plus the inverse permutation for O(1) "is p within g's top-k" queries.
class NeighborIndex {
 public:
  template <typename Scalar>
  explicit NeighborIndex(const Matrix<Scalar>& dist) : n_(dist.rows()) {
    if (dist.rows() != dist.cols()) throw ShapeError("distance matrix must be square");
    order_.resize(static_cast<std::size_t>(n_));
    position_ = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(n_, n_, -1);
    for (Index p = 0; p < n_; ++p) {
      IndexList& o = order_[static_cast<std::size_t>(p)];
      for (Index g = 0; g < n_; ++g)
        if (g != p) o.push_back(g);
      std::stable_sort(o.begin(), o.end(), [&](Index a, Index b) { return dist(p, a) < dist(p, b); });
      for (std::size_t r = 0; r < o.size(); ++r) position_(p, o[r]) = static_cast<Index>(r);
    }
  }

  Index size() const { return n_; }

  /// k nearest neighbors of p, excluding p.
  IndexList topk(Index p, Index k) const {
    const IndexList& o = order_[static_cast<std::size_t>(p)];
    return IndexList(o.begin(), o.begin() + std::min<Index>(k, static_cast<Index>(o.size())));
  }

  bool in_topk(Index g, Index p, Index k) const {
    const Index pos = position_(g, p);
    return pos >= 0 && pos < k;
  }

  /// R(p,k), sorted by index.
  IndexList reciprocal(Index p, Index k) const {
    IndexList out;
    for (Index g : topk(p, k))
      if (in_topk(g, p, k)) out.push_back(g);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// R*(p,k1), sorted by index.
  IndexList expanded(Index p, Index k1) const {
    const IndexList base = reciprocal(p, k1);
    const Index half = (k1 + 1) / 2;
    IndexList out = base;
    for (Index q : base) {
      const IndexList cand = reciprocal(q, half);
      IndexList common;
      std::set_intersection(base.begin(), base.end(), cand.begin(), cand.end(), std::back_inserter(common));
      if (3 * common.size() >= 2 * cand.size()) {
        IndexList merged;
        std::set_union(out.begin(), out.end(), cand.begin(), cand.end(), std::back_inserter(merged));
        out.swap(merged);
      }
    }
    return out;
  }

 private:
  Index n_;
  std::vector<IndexList> order_;
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> position_;
};

template <typename Scalar>
IndexList k_reciprocal_set(const Matrix<Scalar>& dist, Index p, Index k) {
  return NeighborIndex(dist).reciprocal(p, k);
}

template <typename Scalar>
IndexList expanded_set(const Matrix<Scalar>& dist, Index p, Index k1) {
  return NeighborIndex(dist).expanded(p, k1);
}

template <typename Scalar>
struct JaccardResult {
  Matrix<Scalar> jaccard;  // D_J
  Matrix<Scalar> mixed;    // (1 - lambda) D_J + lambda D / max(D)
};

template <typename Scalar>
JaccardResult<Scalar> jaccard_matrix(const Matrix<Scalar>& dist, const RerankParams& params) {
  params.validate();
  const Index n = dist.rows();
  if (dist.cols() != n) throw ShapeError("distance matrix must be square");
  const NeighborIndex nn(dist);

  Matrix<Scalar> v = Matrix<Scalar>::Zero(n, n);
  for (Index p = 0; p < n; ++p)
    for (Index g : nn.expanded(p, params.k1)) v(p, g) = std::exp(-dist(p, g));

  // Local query expansion over p and its k2 - 1 nearest neighbors.
  Matrix<Scalar> vq(n, n);
  for (Index p = 0; p < n; ++p) {
    Vector<Scalar> acc = v.row(p).transpose();
    const IndexList near = nn.topk(p, params.k2 - 1);
    for (Index q : near) acc += v.row(q).transpose();
    vq.row(p) = (acc / static_cast<Scalar>(near.size() + 1)).transpose();
  }

  JaccardResult<Scalar> out;
  out.jaccard = Matrix<Scalar>::Zero(n, n);
  for (Index p = 0; p < n; ++p) {
    for (Index g = p + 1; g < n; ++g) {
      const Scalar hi = vq.row(p).cwiseMax(vq.row(g)).sum();
      const Scalar lo = vq.row(p).cwiseMin(vq.row(g)).sum();
      const Scalar dj = hi > Scalar(0) ? Scalar(1) - lo / hi : Scalar(1);
      out.jaccard(p, g) = dj;
      out.jaccard(g, p) = dj;
    }
  }

  if (params.lambda_mix == 0.0) {
    out.mixed = out.jaccard;
  } else {
    const Scalar peak = dist.maxCoeff();
    const Matrix<Scalar> normalized = peak > Scalar(0) ? Matrix<Scalar>(dist / peak) : Matrix<Scalar>(dist);
    const auto lam = static_cast<Scalar>(params.lambda_mix);
    out.mixed = (Scalar(1) - lam) * out.jaccard + lam * normalized;
  }
  return out;
}

}  // namespace mlc
