#pragma once

#include "mlc/error.hpp"
#include "mlc/types.hpp"

#include <string>
#include <vector>

namespace mlc {

/// N x d table of per-sample features, updated by running average.
/// Rows start at zero and are unit-norm from their first update on.
template <typename Scalar>
class MemoryBank {
 public:
  MemoryBank(Index n, Index d) : features_(Matrix<Scalar>::Zero(n, d)), touched_(static_cast<std::size_t>(n), false) {
    if (n < 1 || d < 1) throw ShapeError("memory bank needs n, d >= 1");
  }

  /// Restores a bank from stored rows; non-zero rows count as touched.
  explicit MemoryBank(Matrix<Scalar> rows) : features_(std::move(rows)), touched_(static_cast<std::size_t>(features_.rows())) {
    if (features_.rows() < 1 || features_.cols() < 1) throw ShapeError("memory bank needs n, d >= 1");
    for (Index i = 0; i < features_.rows(); ++i) touched_[i] = features_.row(i).squaredNorm() > 0;
  }

  Index size() const { return features_.rows(); }
  Index dim() const { return features_.cols(); }
  const Matrix<Scalar>& features() const { return features_; }
  bool touched(Index i) const { return touched_[static_cast<std::size_t>(i)]; }
  bool fully_touched() const {
    for (bool t : touched_)
      if (!t) return false;
    return true;
  }

  /// M[i] <- alpha*M[i] + (1-alpha)*f, then renormalize.
  template <typename Derived>
  void update(Index i, const Eigen::MatrixBase<Derived>& f, Scalar alpha) {
    check_row(i);
    if (f.size() != dim()) throw ShapeError("bank update: feature dimension mismatch");
    if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("bank update: alpha must lie in [0, 1]");
    Vector<Scalar> blended = alpha * features_.row(i).transpose() + (Scalar(1) - alpha) * f.template cast<Scalar>();
    const Scalar norm = blended.norm();
    if (!(norm >= Scalar(1e-12))) throw DegenerateUpdate("blended memory row " + std::to_string(i) + " has zero norm");
    features_.row(i) = (blended / norm).transpose();
    touched_[static_cast<std::size_t>(i)] = true;
  }

  /// Overwrites row i with an already-normalized feature.
  template <typename Derived>
  void assign(Index i, const Eigen::MatrixBase<Derived>& f) {
    update(i, f, Scalar(0));
  }

  /// s[j] = M[j]^T f
  template <typename Derived>
  Vector<Scalar> similarity(const Eigen::MatrixBase<Derived>& f) const {
    if (f.size() != dim()) throw ShapeError("bank similarity: feature dimension mismatch");
    return features_ * f.template cast<Scalar>();
  }

  /// Similarity of stored row i against every row.
  Vector<Scalar> row_similarity(Index i) const {
    check_row(i);
    return features_ * features_.row(i).transpose();
  }

  Matrix<Scalar> similarity_matrix() const { return features_ * features_.transpose(); }

 private:
  void check_row(Index i) const {
    if (i < 0 || i >= size()) throw ShapeError("bank row " + std::to_string(i) + " out of range");
  }

  Matrix<Scalar> features_;
  std::vector<bool> touched_;
};

/// Linear momentum ramp from 0 at the first epoch to 0.5 at the last.
inline double alpha_schedule(int epoch, int total_epochs) {
  if (total_epochs <= 1) return 0.0;
  return 0.5 * static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
}

}  // namespace mlc
