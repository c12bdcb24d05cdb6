#pragma once

#include <cstddef>

#include <Eigen/Core>

#include "tailrisk/errors.hpp"

namespace tailrisk {

using Vector = Eigen::VectorXd;
// Samples are rows; row-major keeps each sample contiguous for the per-sample loss calls.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstVectorRef = Eigen::Ref<const Vector>;
using VectorRef = Eigen::Ref<Vector>;

/// Feature matrix (n x d) plus scalar targets (n). Immutable once built.
///
/// Construction rejects empty shapes, mismatched row counts, and any
/// non-finite entry; the error message names the first offending sample.
class Dataset {
 public:
  Dataset(Matrix features, Vector targets);

  std::size_t n() const noexcept { return static_cast<std::size_t>(features_.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(features_.cols()); }

  const Matrix& features() const noexcept { return features_; }
  const Vector& targets() const noexcept { return targets_; }

  // Sample i as a contiguous column view.
  auto x(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)).transpose(); }
  double y(std::size_t i) const { return targets_[static_cast<Eigen::Index>(i)]; }

 private:
  Matrix features_;
  Vector targets_;
};

enum class Penalty { kEuclidean, kEntropic };

/// Tail level p in [0, 1), smoothing scale mu, and the prox-function used by
/// the smoothed oracle.
struct RiskParams {
  double p = 0.0;
  double mu = 1.0;
  Penalty penalty = Penalty::kEuclidean;

  // Throws ParameterError; mu is only checked when the smoothed oracle needs it.
  void validate(bool require_mu) const;
};

// Per-coordinate cap 1/(n(1-p)) of the capped simplex K_p.
double simplex_cap(std::size_t n, double p);

// Throws ParameterError unless 0 <= p < 1.
void check_tail_level(double p);

/// Per-sample losses L(w) at one parameter point; all entries finite.
class LossVector {
 public:
  explicit LossVector(Vector values);

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  const Vector& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  Vector values_;
};

/// A point of the capped simplex K_p = {q : sum q = 1, 0 <= q_i <= cap}.
class DualWeights {
 public:
  static constexpr double kSumTolerance = 1e-10;
  static constexpr double kCapTolerance = 1e-12;

  // Throws ParameterError when q leaves K_p beyond the tolerances above.
  DualWeights(Vector q, double cap);

  std::size_t size() const noexcept { return static_cast<std::size_t>(q_.size()); }
  const Vector& values() const noexcept { return q_; }
  double operator[](std::size_t i) const { return q_[static_cast<Eigen::Index>(i)]; }
  double cap() const noexcept { return cap_; }

 private:
  Vector q_;
  double cap_;
};

}  // namespace tailrisk

namespace tailrisk {

// Objective value and a (sub)gradient at one parameter point.
struct OracleResult {
  double value = 0.0;
  Vector gradient;
};

}  // namespace tailrisk
