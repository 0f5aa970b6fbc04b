#pragma once

// Multi-scale linear feature extractor: one global branch over the whole input
// and two local branches over its first and second halves. The three branch
// outputs are concatenated and L2-normalized into the final representation.

#include "mlc/error.hpp"
#include "mlc/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace mlc {

template <typename Scalar>
struct ExtractorModel {
  Matrix<Scalar> global;  // branch_dim x input_dim
  Matrix<Scalar> upper;   // branch_dim x input_dim/2
  Matrix<Scalar> lower;   // branch_dim x input_dim/2

  Index input_dim() const { return global.cols(); }
  Index branch_dim() const { return global.rows(); }
  Index output_dim() const { return 3 * global.rows(); }

  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static ExtractorModel random(Index input_dim, Index branch_dim, std::uint64_t seed) {
    if (input_dim < 2 || input_dim % 2 != 0) throw ShapeError("extractor input dimension must be even and >= 2");
    if (branch_dim < 1) throw ShapeError("extractor branch dimension must be >= 1");
    std::mt19937_64 rng(seed);
    auto init = [&](Index rows, Index cols) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
      std::uniform_real_distribution<double> u(-bound, bound);
      Matrix<Scalar> w(rows, cols);
      for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) w(r, c) = static_cast<Scalar>(u(rng));
      return w;
    };
    ExtractorModel m;
    m.global = init(branch_dim, input_dim);
    m.upper = init(branch_dim, input_dim / 2);
    m.lower = init(branch_dim, input_dim / 2);
    return m;
  }

  void validate() const {
    const Index half = global.cols() / 2;
    if (global.cols() % 2 != 0 || upper.rows() != global.rows() || lower.rows() != global.rows() ||
        upper.cols() != half || lower.cols() != half || global.rows() < 1)
      throw ShapeError("inconsistent extractor weight shapes");
    if (!global.allFinite() || !upper.allFinite() || !lower.allFinite())
      throw NumericError("extractor weights are not finite");
  }

  template <typename Other>
  ExtractorModel<Other> cast() const {
    return {global.template cast<Other>(), upper.template cast<Other>(), lower.template cast<Other>()};
  }
};

template <typename Scalar>
struct MultiScaleFeatures {
  Vector<Scalar> global, upper, lower;
  Vector<Scalar> all;     // unit-norm concatenation
  Scalar concat_norm{};   // norm before normalization, kept for backward
};

/// Per-branch weight gradients, shaped like ExtractorModel. Also used for
/// SGD velocity buffers.
template <typename Scalar>
struct ModelGradients {
  Matrix<Scalar> global, upper, lower;

  static ModelGradients zeros_like(const ExtractorModel<Scalar>& m) {
    return {Matrix<Scalar>::Zero(m.global.rows(), m.global.cols()),
            Matrix<Scalar>::Zero(m.upper.rows(), m.upper.cols()),
            Matrix<Scalar>::Zero(m.lower.rows(), m.lower.cols())};
  }

  ModelGradients& operator+=(const ModelGradients& o) {
    global += o.global;
    upper += o.upper;
    lower += o.lower;
    return *this;
  }

  ModelGradients& operator*=(Scalar c) {
    global *= c;
    upper *= c;
    lower *= c;
    return *this;
  }
};

template <typename Scalar, typename Derived>
MultiScaleFeatures<Scalar> extract(const ExtractorModel<Scalar>& model, const Eigen::MatrixBase<Derived>& x) {
  const Index dim = model.input_dim();
  if (x.size() != dim) throw ShapeError("input has dimension " + std::to_string(x.size()) + ", expected " + std::to_string(dim));
  const Index half = dim / 2;
  const Index b = model.branch_dim();
  const Vector<Scalar> v = x.template cast<Scalar>();

  MultiScaleFeatures<Scalar> f;
  f.global = model.global * v;
  f.upper = model.upper * v.head(half);
  f.lower = model.lower * v.tail(half);

  Vector<Scalar> concat(3 * b);
  concat << f.global, f.upper, f.lower;
  f.concat_norm = concat.norm();
  if (!(f.concat_norm >= Scalar(1e-12))) throw DegenerateFeature("zero embedding cannot be normalized");
  f.all = concat / f.concat_norm;
  return f;
}

/// Chain rule from dL/df_all back to the branch weights, through the
/// normalization Jacobian (I - f f^T) / ||concat||.
template <typename Scalar, typename DerivedX, typename DerivedG>
ModelGradients<Scalar> backward(const ExtractorModel<Scalar>& model, const Eigen::MatrixBase<DerivedX>& x,
                                const MultiScaleFeatures<Scalar>& features,
                                const Eigen::MatrixBase<DerivedG>& grad_all) {
  const Index b = model.branch_dim();
  const Index half = model.input_dim() / 2;
  if (x.size() != model.input_dim()) throw ShapeError("backward: input dimension mismatch");
  if (grad_all.size() != 3 * b || features.all.size() != 3 * b) throw ShapeError("backward: gradient dimension mismatch");

  const Vector<Scalar> g = grad_all.template cast<Scalar>();
  const Vector<Scalar> v = x.template cast<Scalar>();
  const Vector<Scalar> grad_concat = (g - features.all * features.all.dot(g)) / features.concat_norm;

  ModelGradients<Scalar> out;
  out.global = grad_concat.segment(0, b) * v.transpose();
  out.upper = grad_concat.segment(b, b) * v.head(half).transpose();
  out.lower = grad_concat.segment(2 * b, b) * v.tail(half).transpose();
  return out;
}

template <typename Scalar, typename DerivedX, typename DerivedG>
ModelGradients<Scalar> backward(const ExtractorModel<Scalar>& model, const Eigen::MatrixBase<DerivedX>& x,
                                const Eigen::MatrixBase<DerivedG>& grad_all) {
  return backward(model, x, extract(model, x), grad_all);
}

/// Extracts f_all for every row of `inputs`.
template <typename Scalar, typename Derived>
Matrix<Scalar> extract_all(const ExtractorModel<Scalar>& model, const Eigen::MatrixBase<Derived>& inputs) {
  Matrix<Scalar> out(inputs.rows(), model.output_dim());
  for (Index i = 0; i < inputs.rows(); ++i) out.row(i) = extract(model, inputs.row(i).transpose()).all.transpose();
  return out;
}

template <typename Scalar>
struct SgdSettings {
  Scalar lr = Scalar(0.1);
  Scalar momentum = Scalar(0.9);
  Scalar weight_decay = Scalar(5e-4);

  void validate() const {
    if (!(lr > 0)) throw ConfigError("learning rate must be > 0");
    if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must lie in [0, 1)");
    if (!(weight_decay >= 0)) throw ConfigError("weight decay must be >= 0");
  }
};

/// v <- momentum*v + g + wd*w ; w <- w - lr*v
template <typename Scalar>
void sgd_update(Matrix<Scalar>& weights, const Matrix<Scalar>& grad, Matrix<Scalar>& velocity,
                const SgdSettings<Scalar>& s) {
  if (grad.rows() != weights.rows() || grad.cols() != weights.cols() || velocity.rows() != weights.rows() ||
      velocity.cols() != weights.cols())
    throw ShapeError("sgd: shape mismatch");
  velocity = s.momentum * velocity + grad + s.weight_decay * weights;
  weights -= s.lr * velocity;
}

template <typename Scalar>
struct OptimizerState {
  SgdSettings<Scalar> settings;
  ModelGradients<Scalar> velocity;

  static OptimizerState for_model(const ExtractorModel<Scalar>& m, SgdSettings<Scalar> s) {
    s.validate();
    return {s, ModelGradients<Scalar>::zeros_like(m)};
  }
};

template <typename Scalar>
void sgd_step(ExtractorModel<Scalar>& model, const ModelGradients<Scalar>& grads, OptimizerState<Scalar>& state) {
  sgd_update(model.global, grads.global, state.velocity.global, state.settings);
  sgd_update(model.upper, grads.upper, state.velocity.upper, state.settings);
  sgd_update(model.lower, grads.lower, state.velocity.lower, state.settings);
}

/// Step decay by 10x every `decay_every` epochs, where the period is given for
/// a 60-epoch run and rescaled proportionally to `total_epochs`.
inline double step_decay_lr(double base_lr, int epoch, int total_epochs, int decay_every) {
  const int period = std::max(1, decay_every * total_epochs / 60);
  return base_lr * std::pow(0.1, epoch / period);
}

}  // namespace mlc
