#pragma once

// One mini-batch of the combined objective
//   L_o = lambda1 * L_mmcl + lambda2 * (L_ce + L_tri)
// with gradients for the extractor and the classifier head. Each term is the
// mean over the batch; positives/negatives are fixed inputs and the memory is
// treated as a constant.

#include "mlc/extractor.hpp"
#include "mlc/losses.hpp"
#include "mlc/multilabel.hpp"

#include <optional>

namespace mlc {

struct BatchTargets {
  std::vector<IndexList> positives;  // per batch row
  std::vector<IndexList> negatives;  // per batch row
  LabelList pseudo_labels;           // empty: no clustering terms
};

template <typename Scalar>
struct ObjectiveResult {
  Scalar total{};
  Scalar mmcl{};
  Scalar ce{};
  Scalar tri{};
  Matrix<Scalar> features;  // B x d, f_all before the step
  ModelGradients<Scalar> model_grad;
  std::optional<Matrix<Scalar>> head_grad;
};

template <typename Scalar>
ObjectiveResult<Scalar> batch_objective(const ExtractorModel<Scalar>& model, const ClassifierHead<Scalar>* head,
                                        const Matrix<Scalar>& memory, const Matrix<Scalar>& inputs,
                                        const BatchTargets& targets, const LossWeights& w) {
  const Index b = inputs.rows();
  if (b < 1) throw ShapeError("empty batch");
  if (static_cast<Index>(targets.positives.size()) != b || static_cast<Index>(targets.negatives.size()) != b)
    throw ShapeError("batch targets do not match batch size");
  const bool joint = !targets.pseudo_labels.empty();
  if (joint && (head == nullptr || static_cast<Index>(targets.pseudo_labels.size()) != b))
    throw ShapeError("clustering terms need a classifier head and one pseudo label per row");

  const Scalar inv_b = Scalar(1) / static_cast<Scalar>(b);
  const auto l1 = static_cast<Scalar>(w.lambda1);
  const auto l2 = static_cast<Scalar>(w.lambda2);

  ObjectiveResult<Scalar> out;
  std::vector<MultiScaleFeatures<Scalar>> feats;
  feats.reserve(static_cast<std::size_t>(b));
  out.features.resize(b, model.output_dim());
  for (Index i = 0; i < b; ++i) {
    feats.push_back(extract(model, inputs.row(i).transpose()));
    out.features.row(i) = feats.back().all.transpose();
  }

  Matrix<Scalar> grad_f(b, model.output_dim());
  for (Index i = 0; i < b; ++i) {
    auto r = mmcl_loss(memory, feats[i].all, targets.positives[i], targets.negatives[i], w.delta);
    out.mmcl += r.value * inv_b;
    grad_f.row(i) = (l1 * inv_b * r.grad_feature).transpose();
  }

  if (joint) {
    Matrix<Scalar> hg = Matrix<Scalar>::Zero(head->weights.rows(), head->weights.cols());
    for (Index i = 0; i < b; ++i) {
      const Vector<Scalar> logits = head->weights * feats[i].all;
      auto ce = ce_label_smoothing(logits, targets.pseudo_labels[i], w.epsilon);
      out.ce += ce.value * inv_b;
      hg += (l2 * inv_b) * ce.grad_logits * feats[i].all.transpose();
      grad_f.row(i) += ((l2 * inv_b) * (head->weights.transpose() * ce.grad_logits)).transpose();
    }
    auto tri = triplet_hard(out.features, targets.pseudo_labels, w.margin);
    out.tri = tri.value;
    grad_f += l2 * tri.grad;
    out.head_grad = std::move(hg);
  }

  out.total = l1 * out.mmcl + l2 * (out.ce + out.tri);
  out.model_grad = ModelGradients<Scalar>::zeros_like(model);
  for (Index i = 0; i < b; ++i) out.model_grad += backward(model, inputs.row(i).transpose(), feats[i], grad_f.row(i).transpose());
  return out;
}

}  // namespace mlc
