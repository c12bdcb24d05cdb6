#include "tailrisk/loss.hpp"

#include <cmath>

namespace tailrisk {

namespace {

constexpr std::size_t kLeafSize = 64;

void check_dimension(const Dataset& data, ConstVectorRef w) {
  if (static_cast<std::size_t>(w.size()) != data.d()) {
    throw ParameterError("parameter vector has length " + std::to_string(w.size()) +
                         ", dataset has " + std::to_string(data.d()) + " features");
  }
}

// Sums q_i grad L^i over [begin, end) with a fixed binary split.
void reduce_gradients(const PerSampleLoss& loss, const Dataset& data, ConstVectorRef w,
                      const Vector& q, std::size_t begin, std::size_t end, VectorRef out) {
  if (end - begin <= kLeafSize) {
    for (std::size_t i = begin; i < end; ++i) {
      const double qi = q[static_cast<Eigen::Index>(i)];
      if (qi == 0.0) continue;
      loss.add_gradient(w, data.x(i), data.y(i), qi, out);
    }
    return;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  Vector right = Vector::Zero(out.size());
  reduce_gradients(loss, data, w, q, begin, mid, out);
  reduce_gradients(loss, data, w, q, mid, end, right);
  out += right;
}

}  // namespace

Vector PerSampleLoss::gradient(ConstVectorRef w, ConstVectorRef x, double y) const {
  Vector g = Vector::Zero(w.size());
  add_gradient(w, x, y, 1.0, g);
  return g;
}

LossVector batch_losses(const PerSampleLoss& loss, const Dataset& data, ConstVectorRef w) {
  check_dimension(data, w);
  Vector values(static_cast<Eigen::Index>(data.n()));
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double v = loss.value(w, data.x(i), data.y(i));
    if (!std::isfinite(v)) throw EvaluationError("non-finite loss value", i);
    values[static_cast<Eigen::Index>(i)] = v;
  }
  return LossVector(std::move(values));
}

Vector jacobian_transpose_apply(const PerSampleLoss& loss, const Dataset& data,
                                ConstVectorRef w, const DualWeights& q) {
  check_dimension(data, w);
  if (q.size() != data.n()) {
    throw ParameterError("dual weights have length " + std::to_string(q.size()) +
                         ", dataset has " + std::to_string(data.n()) + " samples");
  }
  Vector out = Vector::Zero(w.size());
  reduce_gradients(loss, data, w, q.values(), 0, data.n(), out);
  if (!out.allFinite()) {
    // Locate the culprit only on the failure path.
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (q[i] == 0.0) continue;
      if (!loss.gradient(w, data.x(i), data.y(i)).allFinite()) {
        throw EvaluationError("non-finite gradient", i);
      }
    }
    throw EvaluationError("non-finite gradient sum", data.n());
  }
  return out;
}

}  // namespace tailrisk
