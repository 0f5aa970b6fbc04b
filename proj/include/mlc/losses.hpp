#pragma once

#include "mlc/error.hpp"
#include "mlc/types.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>

namespace mlc {

/// Linear classifier over f_all; one row per pseudo class.
template <typename Scalar>
struct ClassifierHead {
  Matrix<Scalar> weights;  // C x d

  Index num_classes() const { return weights.rows(); }

  static ClassifierHead random(Index num_classes, Index dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    std::uniform_real_distribution<double> u(-bound, bound);
    ClassifierHead h;
    h.weights.resize(num_classes, dim);
    for (Index r = 0; r < num_classes; ++r)
      for (Index c = 0; c < dim; ++c) h.weights(r, c) = static_cast<Scalar>(u(rng));
    return h;
  }
};

struct LossWeights {
  double lambda1 = 0.3;
  double lambda2 = 1.0;
  double epsilon = 0.1;  // label smoothing
  double margin = 0.0;   // triplet margin
  double delta = 5.0;    // positive weight in the multi-label loss
  double r = 1.0;        // hard-negative percentage

  void validate() const {
    if (!(lambda1 >= 0 && lambda2 >= 0)) throw ConfigError("loss weights must be >= 0");
    if (!(epsilon >= 0 && epsilon < 1)) throw ConfigError("label smoothing must lie in [0, 1)");
    if (!(margin >= 0)) throw ConfigError("triplet margin must be >= 0");
    if (!(delta >= 0)) throw ConfigError("delta must be >= 0");
    if (!(r > 0 && r <= 100)) throw ConfigError("r must lie in (0, 100]");
  }
};

template <typename Scalar>
struct CrossEntropyResult {
  Scalar value{};
  Vector<Scalar> grad_logits;  // softmax - q
};

/// Cross-entropy against the smoothed target q = (1-eps) onehot + eps/C.
template <typename Derived>
CrossEntropyResult<typename Derived::Scalar> ce_label_smoothing(const Eigen::MatrixBase<Derived>& logits, int label,
                                                                double epsilon) {
  using Scalar = typename Derived::Scalar;
  const Index c = logits.size();
  if (c < 2) throw ShapeError("cross-entropy needs at least two classes");
  if (label < 0 || label >= c) throw ShapeError("label out of range");
  if (!logits.allFinite()) throw NumericError("non-finite logits");

  const Scalar peak = logits.maxCoeff();
  const Vector<Scalar> shifted = logits.array() - peak;
  const Scalar log_z = std::log(shifted.array().exp().sum());
  const Vector<Scalar> log_p = shifted.array() - log_z;

  const Scalar off = Scalar(epsilon) / static_cast<Scalar>(c);
  Vector<Scalar> q = Vector<Scalar>::Constant(c, off);
  q(label) = Scalar(1) - Scalar(epsilon) + off;

  CrossEntropyResult<Scalar> out;
  out.value = -q.dot(log_p);
  out.grad_logits = log_p.array().exp().matrix() - q;
  return out;
}

template <typename Scalar>
struct TripletResult {
  Scalar value{};
  Matrix<Scalar> grad;  // B x d
};

/// Batch-hard triplet loss: per anchor, hardest positive (max distance) and
/// hardest negative (min distance), hinge max(0, d_p + m - d_n), averaged.
template <typename Scalar>
TripletResult<Scalar> triplet_hard(const Matrix<Scalar>& features, const LabelList& labels, double margin) {
  const Index b = features.rows();
  if (static_cast<Index>(labels.size()) != b) throw ShapeError("triplet: labels do not match batch");
  std::map<int, int> count;
  for (int l : labels) ++count[l];
  if (count.size() < 2) throw BatchCompositionError("triplet batch needs at least two labels");
  for (const auto& [l, c] : count)
    if (c < 2) throw BatchCompositionError("label " + std::to_string(l) + " has a single instance in the batch");

  TripletResult<Scalar> out;
  out.grad = Matrix<Scalar>::Zero(b, features.cols());
  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(b);

  auto unit_diff = [&](Index i, Index j, Scalar dist) -> Vector<Scalar> {
    if (dist <= Scalar(0)) return Vector<Scalar>::Zero(features.cols());
    return (features.row(i) - features.row(j)).transpose() / dist;
  };

  for (Index i = 0; i < b; ++i) {
    Index pos = -1, neg = -1;
    Scalar dp = 0, dn = 0;
    for (Index j = 0; j < b; ++j) {
      if (j == i) continue;
      const Scalar d = (features.row(i) - features.row(j)).norm();
      if (labels[j] == labels[i]) {
        if (pos < 0 || d > dp) {
          pos = j;
          dp = d;
        }
      } else if (neg < 0 || d < dn) {
        neg = j;
        dn = d;
      }
    }
    const Scalar hinge = dp + Scalar(margin) - dn;
    if (hinge <= Scalar(0)) continue;
    out.value += hinge * inv_b;
    const Vector<Scalar> up = unit_diff(i, pos, dp);
    const Vector<Scalar> un = unit_diff(i, neg, dn);
    out.grad.row(i) += ((up - un) * inv_b).transpose();
    out.grad.row(pos) -= (up * inv_b).transpose();
    out.grad.row(neg) += (un * inv_b).transpose();
  }
  return out;
}

/// L_o = lambda1 * L_mmcl + lambda2 * (L_ce + L_tri)
inline double total_loss(double mmcl, double ce, double tri, double lambda1, double lambda2) {
  return lambda1 * mmcl + lambda2 * (ce + tri);
}

}  // namespace mlc
