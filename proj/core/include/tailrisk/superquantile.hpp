#pragma once

#include <cstddef>

#include "tailrisk/loss.hpp"

namespace tailrisk {

// Smallest k in [1, n] with k / n >= p: the 1-based rank of the empirical
// p-quantile. Computed with the same floating-point comparison as the CDF
// test F(x) >= p, so 0.7 * 10 rounding up does not shift the rank.
std::size_t quantile_rank(std::size_t n, double p);

// Left-continuous empirical quantile min{x : F(x) >= p}, p in [0, 1].
// p = 0 gives the minimum. Runs in expected linear time (selection, no sort).
double quantile(const LossVector& losses, double p);

// Empirical superquantile (CVaR) at level p in [0, 1):
//   Q_p + 1/(n(1-p)) * sum_i max(L_i - Q_p, 0).
// p = 0 gives the mean.
double superquantile(const LossVector& losses, double p);

struct ExactOracleOutput {
  double value;
  DualWeights weights;
  double quantile;
  std::size_t tie_set_size;
};

/// One maximizer of sum_i q_i L_i over K_p, i.e. one element of the
/// superquantile subdifferential expressed in dual weights.
///
/// Samples above the quantile get the cap 1/(n(1-p)); samples below get 0;
/// the samples tied with the quantile (exact floating-point equality) share
/// the remaining mass uniformly.
ExactOracleOutput exact_subgradient_weights(const LossVector& losses, double p);

// f(w) = superquantile of L(w) and a subgradient J_L(w)^T q.
OracleResult exact_oracle(const PerSampleLoss& loss, const Dataset& data, ConstVectorRef w,
                          double p);

}  // namespace tailrisk
