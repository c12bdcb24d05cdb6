#pragma once

#include "tailrisk/loss.hpp"

namespace tailrisk {

// Maximizer q_mu of  sum_i q_i L_i - mu * d(q)  over K_p, together with the
// smoothed value f_mu, the multiplier of the constraint sum q = 1, and d(q_mu).
struct SmoothedOracleOutput {
  double value;
  DualWeights weights;
  double lambda;
  double penalty_value;
};

// How the Euclidean subroutine locates the bracketing breakpoints.
enum class BreakpointSearch {
  kSort,       // sort + prefix sums, O(n log n)
  kSelection,  // median pivoting on the live breakpoints, expected O(n)
};

// d(q) = 0.5 * ||q - e/n||^2
double euclidean_penalty(const Vector& q);
// d(q) = log(n) + sum_i q_i log q_i, with 0 log 0 = 0
double entropic_penalty(const Vector& q);

/// Derivative of the dual function of the Euclidean-smoothed problem,
///   theta'(lambda) = 1 - sum_i clip((u_i - lambda) / mu, 0, cap),
/// with u = L + mu/n and cap = 1/(n(1-p)). Nondecreasing, continuous and
/// piecewise affine with kinks at u_i and u_i - mu * cap.
double theta_prime(double lambda, const LossVector& losses, double p, double mu);

/// Euclidean penalty: finds the root lambda* of theta' by bracketing it
/// between two consecutive breakpoints and interpolating linearly (exact,
/// since theta' is affine there), then clips each coordinate:
///   q_i = cap                    if lambda* < u_i - mu cap
///   q_i = (u_i - lambda*) / mu   if u_i - mu cap <= lambda* < u_i
///   q_i = 0                      otherwise.
/// p = 0 short-circuits to q = e/n.
SmoothedOracleOutput smoothed_weights_euclidean(const LossVector& losses, double p, double mu,
                                                BreakpointSearch search = BreakpointSearch::kSort);

/// Entropic penalty: q_i = min(cap, c exp(L_i / mu)) with c fixed by sum q = 1.
/// Losses are scanned in decreasing order to find how many coordinates sit
/// at the cap; the rest share the remaining mass through a softmax shifted
/// by the largest uncapped loss, so large L / mu does not overflow. The reported lambda is
/// -mu (log c + 1).
SmoothedOracleOutput smoothed_weights_entropic(const LossVector& losses, double p, double mu);

// Dispatches on params.penalty.
SmoothedOracleOutput smoothed_weights(const LossVector& losses, const RiskParams& params);

// f_mu(w) and its gradient J_L(w)^T q_mu(w).
OracleResult smoothed_oracle(const PerSampleLoss& loss, const Dataset& data, ConstVectorRef w,
                             const RiskParams& params);

}  // namespace tailrisk
