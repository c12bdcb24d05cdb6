#pragma once

#include "tailrisk/types.hpp"

namespace tailrisk {

/// A per-sample loss L^i(w) = loss(y_i, model(w, x_i)).
///
/// Implementations must be stateless (or at least const-thread-safe): the
/// batch routines below call them for every sample of a dataset.
class PerSampleLoss {
 public:
  virtual ~PerSampleLoss() = default;

  virtual double value(ConstVectorRef w, ConstVectorRef x, double y) const = 0;

  // out += weight * grad_w loss(w, x, y)
  virtual void add_gradient(ConstVectorRef w, ConstVectorRef x, double y, double weight,
                            VectorRef out) const = 0;

  Vector gradient(ConstVectorRef w, ConstVectorRef x, double y) const;
};

// L(w) = (L^1(w), ..., L^n(w)). Throws EvaluationError on a non-finite loss.
LossVector batch_losses(const PerSampleLoss& loss, const Dataset& data, ConstVectorRef w);

// J_L(w)^T q = sum_i q_i grad L^i(w), skipping samples with q_i == 0.
// Summation uses a fixed pairwise tree so the result does not depend on how
// the work is split.
Vector jacobian_transpose_apply(const PerSampleLoss& loss, const Dataset& data,
                                ConstVectorRef w, const DualWeights& q);

}  // namespace tailrisk
