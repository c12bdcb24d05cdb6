#include "tailrisk/models.hpp"

#include <cmath>

#include <Eigen/Cholesky>

namespace tailrisk {

double LeastSquaresLoss::value(ConstVectorRef w, ConstVectorRef x, double y) const {
  const double r = y - w.dot(x);
  return 0.5 * r * r;
}

void LeastSquaresLoss::add_gradient(ConstVectorRef w, ConstVectorRef x, double y, double weight,
                                    VectorRef out) const {
  const double r = y - w.dot(x);
  out.noalias() -= (weight * r) * x;
}

namespace {

void check_label(double y) {
  if (y != 1.0 && y != -1.0) {
    throw ParameterError("logistic loss needs labels in {-1, +1}, got " + std::to_string(y));
  }
}

// log(1 + exp(t)) without overflow.
double softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double LogisticLoss::value(ConstVectorRef w, ConstVectorRef x, double y) const {
  check_label(y);
  return softplus(-y * w.dot(x));
}

void LogisticLoss::add_gradient(ConstVectorRef w, ConstVectorRef x, double y, double weight,
                                VectorRef out) const {
  check_label(y);
  const double s = sigmoid(-y * w.dot(x));
  out.noalias() -= (weight * y * s) * x;
}

double AbsoluteDeviationLoss::value(ConstVectorRef w, ConstVectorRef x, double y) const {
  return std::abs(y - w.dot(x));
}

void AbsoluteDeviationLoss::add_gradient(ConstVectorRef w, ConstVectorRef x, double y,
                                         double weight, VectorRef out) const {
  const double r = y - w.dot(x);
  if (r > 0.0) {
    out.noalias() -= weight * x;
  } else if (r < 0.0) {
    out.noalias() += weight * x;
  }
}

Vector ols_closed_form(const Dataset& data, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw ParameterError("ridge must be a finite non-negative number");
  }
  const Matrix& X = data.features();
  Eigen::MatrixXd gram = X.transpose() * X;
  gram.diagonal().array() += ridge;
  const Vector rhs = X.transpose() * data.targets();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const auto& diag = ldlt.vectorD();
  const double largest = diag.cwiseAbs().maxCoeff();
  const double smallest = diag.minCoeff();
  if (ldlt.info() != Eigen::Success || !(largest > 0.0) ||
      smallest <= 1e-12 * largest) {
    throw ParameterError(
        "normal equations are singular (rank-deficient features); use ridge > 0");
  }
  return ldlt.solve(rhs);
}

}  // namespace tailrisk
