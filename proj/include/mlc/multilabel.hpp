#pragma once

// Memory-based multi-label prediction: rank the bank by similarity, keep the
// thresholded candidates, accept the cycle-consistent prefix as positives, and
// train with a squared-error loss on positives plus sampled hard negatives.

#include "mlc/error.hpp"
#include "mlc/memory_bank.hpp"
#include "mlc/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mlc {

/// Indices by descending score, ties by ascending index.
template <typename Derived>
IndexList rank_list(const Eigen::DenseBase<Derived>& scores) {
  IndexList order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
  return order;
}

/// Prefix of the rank list whose scores are >= t.
template <typename Derived>
IndexList candidate_set(const Eigen::DenseBase<Derived>& scores, double t) {
  IndexList ranked = rank_list(scores);
  auto end = std::find_if(ranked.begin(), ranked.end(), [&](Index j) { return scores(j) < t; });
  ranked.erase(end, ranked.end());
  if (ranked.empty()) throw EmptyCandidates("no score reaches the similarity threshold");
  return ranked;
}

struct PositiveSet {
  Index sample = 0;
  IndexList candidates;  // thresholded rank list
  IndexList positives;   // accepted prefix of `candidates`
  double threshold = 0.0;
};

/// Cycle-consistent positives of sample i under a row-wise similarity source.
/// `row(j)` returns the similarity of j against every sample.
template <typename RowFn>
PositiveSet cycle_consistent_positives_with(Index i, double t, RowFn&& row) {
  PositiveSet out;
  out.sample = i;
  out.threshold = t;
  out.candidates = candidate_set(row(i), t);
  for (Index j : out.candidates) {
    const IndexList back = (j == i) ? out.candidates : candidate_set(row(j), t);
    if (std::find(back.begin(), back.end(), i) == back.end()) break;
    out.positives.push_back(j);
  }
  return out;
}

/// Positives from an explicit N x N similarity matrix; row j is s_{j,.}.
template <typename Scalar>
PositiveSet cycle_consistent_positives(const Matrix<Scalar>& similarity, Index i, double t) {
  if (similarity.rows() != similarity.cols()) throw ShapeError("similarity matrix must be square");
  return cycle_consistent_positives_with(i, t, [&](Index j) { return similarity.row(j).transpose().eval(); });
}

template <typename Scalar>
PositiveSet cycle_consistent_positives(const MemoryBank<Scalar>& bank, Index i, double t) {
  return cycle_consistent_positives_with(i, t, [&](Index j) { return bank.row_similarity(j); });
}

/// ybar[j] = +1 for j in P, -1 otherwise.
template <typename Scalar = double>
Vector<Scalar> multihot(const IndexList& positives, Index n) {
  Vector<Scalar> y = Vector<Scalar>::Constant(n, Scalar(-1));
  for (Index p : positives) {
    if (p < 0 || p >= n) throw ShapeError("positive index out of range");
    y(p) = Scalar(1);
  }
  return y;
}

/// Number of hard negatives drawn for |P| positives out of n classes.
inline Index hard_negative_count(Index n, Index num_positives, double r_percent) {
  const Index pool = n - num_positives;
  const auto k = static_cast<Index>(std::llround(static_cast<double>(pool) * r_percent / 100.0));
  return std::min(pool, std::max<Index>(1, k));
}

/// The top-r% highest-scoring classes outside P, by descending score.
template <typename Derived>
IndexList hard_negatives(const Eigen::DenseBase<Derived>& scores, const IndexList& positives, double r_percent) {
  if (!(r_percent > 0 && r_percent <= 100)) throw ConfigError("r must lie in (0, 100]");
  const Index n = scores.size();
  std::vector<bool> is_positive(static_cast<std::size_t>(n), false);
  for (Index p : positives) is_positive[static_cast<std::size_t>(p)] = true;
  const auto num_pos = static_cast<Index>(std::count(is_positive.begin(), is_positive.end(), true));
  if (num_pos >= n) throw NoNegatives("every class is positive");

  const Index k = hard_negative_count(n, num_pos, r_percent);
  IndexList out;
  out.reserve(static_cast<std::size_t>(k));
  for (Index j : rank_list(scores)) {
    if (is_positive[static_cast<std::size_t>(j)]) continue;
    out.push_back(j);
    if (static_cast<Index>(out.size()) == k) break;
  }
  return out;
}

template <typename Scalar>
struct MmclResult {
  Scalar value{};
  Vector<Scalar> grad_scores;  // dL/ds, zero outside P and S
};

/// L = delta/|P| * sum_P (s_p - 1)^2 + 1/|S| * sum_S (s_n + 1)^2
template <typename Derived>
MmclResult<typename Derived::Scalar> mmcl_loss_on_scores(const Eigen::MatrixBase<Derived>& scores,
                                                         const IndexList& positives, const IndexList& negatives,
                                                         double delta) {
  using Scalar = typename Derived::Scalar;
  if (positives.empty() || negatives.empty()) throw EmptySet("multi-label loss needs non-empty P and S");
  MmclResult<Scalar> out;
  out.grad_scores = Vector<Scalar>::Zero(scores.size());
  const Scalar wp = Scalar(delta) / static_cast<Scalar>(positives.size());
  const Scalar wn = Scalar(1) / static_cast<Scalar>(negatives.size());
  for (Index p : positives) {
    const Scalar e = scores(p) - Scalar(1);
    out.value += wp * e * e;
    out.grad_scores(p) += wp * Scalar(2) * e;
  }
  for (Index s : negatives) {
    const Scalar e = scores(s) + Scalar(1);
    out.value += wn * e * e;
    out.grad_scores(s) += wn * Scalar(2) * e;
  }
  return out;
}

template <typename Scalar>
struct MmclFeatureResult {
  Scalar value{};
  Vector<Scalar> grad_feature;  // dL/df with the memory held constant
};

/// Multi-label loss of feature f against memory rows, scores s = M f.
template <typename Scalar, typename Derived>
MmclFeatureResult<Scalar> mmcl_loss(const Matrix<Scalar>& memory, const Eigen::MatrixBase<Derived>& f,
                                    const IndexList& positives, const IndexList& negatives, double delta) {
  if (f.size() != memory.cols()) throw ShapeError("mmcl: feature dimension mismatch");
  const Vector<Scalar> scores = memory * f.template cast<Scalar>();
  auto r = mmcl_loss_on_scores(scores, positives, negatives, delta);
  return {r.value, memory.transpose() * r.grad_scores};
}

}  // namespace mlc
