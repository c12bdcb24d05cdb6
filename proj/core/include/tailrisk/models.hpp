#pragma once

#include "tailrisk/loss.hpp"

namespace tailrisk {

// Linear model, squared loss: 0.5 (y - w.x)^2.
class LeastSquaresLoss final : public PerSampleLoss {
 public:
  double value(ConstVectorRef w, ConstVectorRef x, double y) const override;
  void add_gradient(ConstVectorRef w, ConstVectorRef x, double y, double weight,
                    VectorRef out) const override;
};

// Linear model, logistic loss log(1 + exp(-y w.x)) for labels y in {-1, +1}.
// Labels outside that set raise ParameterError.
class LogisticLoss final : public PerSampleLoss {
 public:
  double value(ConstVectorRef w, ConstVectorRef x, double y) const override;
  void add_gradient(ConstVectorRef w, ConstVectorRef x, double y, double weight,
                    VectorRef out) const override;
};

// Linear model, absolute deviation |y - w.x|. Nonsmooth; the gradient uses
// sign(0) = 0, which is a valid subgradient.
class AbsoluteDeviationLoss final : public PerSampleLoss {
 public:
  double value(ConstVectorRef w, ConstVectorRef x, double y) const override;
  void add_gradient(ConstVectorRef w, ConstVectorRef x, double y, double weight,
                    VectorRef out) const override;
};

/// Ordinary (ridge = 0) or ridge least squares: solves (X^T X + ridge I) w = X^T y.
///
/// No intercept is added; append a constant feature beforehand if one is
/// wanted. Throws ParameterError for a negative ridge or when the normal
/// equations are singular at ridge = 0.
Vector ols_closed_form(const Dataset& data, double ridge = 0.0);

}  // namespace tailrisk
