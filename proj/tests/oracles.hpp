#pragma once

// Reference computations used only by the tests. None of these call into the
// library's quantile selection or breakpoint search.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "tailrisk/types.hpp"

namespace tailrisk::testing {

// min{x in data : #{L <= x} / n >= p}, by scanning every candidate.
double brute_quantile(const std::vector<double>& losses, double p);

// (1/(1-p)) * integral_p^1 Q_t dt for the empirical distribution.
double integral_superquantile(const std::vector<double>& losses, double p);

// All vertices of K_p = {sum q = 1, 0 <= q_i <= cap}: every coordinate at 0
// or cap except at most one.
std::vector<Vector> capped_simplex_vertices(std::size_t n, double p);

// max over K_p of sum q_i L_i by vertex enumeration.
double lp_max_by_vertices(const std::vector<double>& losses, double p);

// Dual of the LP: min over eta of eta + cap * sum max(L_i - eta, 0), scanned
// over every eta in {L_i}. Equals the LP optimum by strong duality.
double lp_max_by_duality(const std::vector<double>& losses, double p);

// max over K_p of d(q) (vertex enumeration; d convex).
double max_penalty_over_vertices(std::size_t n, double p, bool entropic);

// Euclidean projection onto K_p by bisection on the shift tau in
// q_i = clip(v_i - tau, 0, cap).
Vector project_capped_simplex(const Vector& v, double cap);

// Projected gradient ascent on sum q L - mu d(q) with d = 0.5 ||q - e/n||^2,
// step 1/mu from q = e/n.
Vector euclidean_maximizer_projected_gradient(const Vector& losses, double p, double mu,
                                              int iterations);

// Entropic maximizer q_i = min(cap, exp(t + L_i / mu)) with t found by
// bisection on sum q = 1.
Vector entropic_maximizer_bisection(const Vector& losses, double p, double mu);

// sum q L - mu d(q)
double smoothed_dual_objective(const Vector& q, const Vector& losses, double mu, bool entropic);

// Central differences of f at x with step h.
Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                          double h);

// Random least-squares instance with standard Gaussian features and targets.
Dataset random_dataset(std::size_t n, std::size_t d, std::mt19937_64& gen);

Vector random_vector(std::size_t n, std::mt19937_64& gen, double scale = 1.0);

// Student-t with 3 degrees of freedom, rescaled by `scale`.
Vector heavy_tailed_vector(std::size_t n, std::mt19937_64& gen, double scale = 1.0);

std::vector<double> to_std(const Vector& v);

}  // namespace tailrisk::testing
