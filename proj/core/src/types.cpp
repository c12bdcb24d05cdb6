#include "tailrisk/types.hpp"

#include <cmath>
#include <string>

namespace tailrisk {

Dataset::Dataset(Matrix features, Vector targets)
    : features_(std::move(features)), targets_(std::move(targets)) {
  if (features_.rows() < 1 || features_.cols() < 1) {
    throw ParameterError("dataset needs at least one sample and one feature");
  }
  if (features_.rows() != targets_.size()) {
    throw ParameterError("feature rows (" + std::to_string(features_.rows()) +
                         ") and targets (" + std::to_string(targets_.size()) + ") differ");
  }
  for (Eigen::Index i = 0; i < features_.rows(); ++i) {
    if (!std::isfinite(targets_[i]) || !features_.row(i).allFinite()) {
      throw ParameterError("non-finite value in sample " + std::to_string(i));
    }
  }
}

void RiskParams::validate(bool require_mu) const {
  check_tail_level(p);
  if (require_mu && !(mu > 0.0 && std::isfinite(mu))) {
    throw ParameterError("smoothing scale mu must be a positive finite number");
  }
}

void check_tail_level(double p) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("tail level p must lie in [0, 1), got " + std::to_string(p));
  }
}

double simplex_cap(std::size_t n, double p) {
  check_tail_level(p);
  if (n == 0) throw ParameterError("capped simplex needs n >= 1");
  return 1.0 / (static_cast<double>(n) * (1.0 - p));
}

LossVector::LossVector(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw ParameterError("loss vector is empty");
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw EvaluationError("non-finite loss", static_cast<std::size_t>(i));
    }
  }
}

DualWeights::DualWeights(Vector q, double cap) : q_(std::move(q)), cap_(cap) {
  if (q_.size() == 0) throw ParameterError("dual weights are empty");
  for (Eigen::Index i = 0; i < q_.size(); ++i) {
    if (!(q_[i] >= 0.0 && q_[i] <= cap_ + kCapTolerance)) {
      throw ParameterError("dual weight " + std::to_string(i) + " = " + std::to_string(q_[i]) +
                           " outside [0, " + std::to_string(cap_) + "]");
    }
  }
  const double total = q_.sum();
  if (std::abs(total - 1.0) > kSumTolerance) {
    throw ParameterError("dual weights sum to " + std::to_string(total) + ", not 1");
  }
}

}  // namespace tailrisk
