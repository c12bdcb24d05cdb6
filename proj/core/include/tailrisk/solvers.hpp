#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tailrisk/loss.hpp"

namespace tailrisk {

// Returns f(x) and a (sub)gradient at x.
using Oracle = std::function<OracleResult(const Vector&)>;

enum class Algorithm {
  kSubgradient,
  kDualAveraging,
  kGradientDescent,
  kAcceleratedGradient,
  kLbfgs,
};

enum class Termination {
  kMaxIters,
  kGradTol,
  kFTol,
  kLineSearchFailure,
};

std::string_view to_string(Algorithm algorithm);
std::string_view to_string(Termination termination);
// Accepts the names produced by to_string plus the short CLI aliases
// (subgradient, dual-averaging, gd, agd, lbfgs). Throws ParameterError.
Algorithm parse_algorithm(std::string_view name);

// True for the methods that need the smoothed (differentiable) oracle.
bool needs_smooth_oracle(Algorithm algorithm);

/// Solver settings shared by every algorithm.
///
/// step_size meaning per algorithm:
///   subgradient       alpha_hat in alpha_k = alpha_hat / sqrt(k + 1)
///   dual averaging    length of the first step, i.e. 1 / alpha_hat in
///                     alpha_k = alpha_hat * sqrt(k + 1)
///   gradient descent  fixed step (no line search)
///   accelerated       1 / beta (no backtracking)
///   L-BFGS            ignored (Armijo backtracking from a unit step)
/// Leaving it empty tunes it once at the first iterate; gradient descent and
/// accelerated gradient then also backtrack.
struct SolverConfig {
  Algorithm algorithm = Algorithm::kLbfgs;
  int max_iters = 1000;
  double grad_tol = 1e-8;
  // Stop when the best objective improved by at most f_tol over the last
  // 10 iterations. 0 disables the test.
  double f_tol = 1e-10;
  std::optional<double> step_size;
  int lbfgs_memory = 10;
  // Empty means the zero vector.
  Vector initial_point;
  bool record_iterates = false;

  void validate() const;
};

struct SolverResult {
  Vector solution;  // lowest-objective iterate seen
  double best_objective = 0.0;
  std::vector<double> objective_trace;  // one value per iteration
  std::vector<Vector> iterate_trace;    // filled when record_iterates is set
  Termination termination = Termination::kMaxIters;
  std::int64_t oracle_calls = 0;
  double step_size = 0.0;  // the (possibly tuned) step parameter that was used
};

// Thrown when the oracle returns a non-finite value or gradient; carries the
// run up to the failing evaluation.
class SolverAborted : public Error {
 public:
  SolverAborted(const std::string& what, SolverResult partial)
      : Error(what), partial_(std::move(partial)) {}

  const SolverResult& partial() const noexcept { return partial_; }

 private:
  SolverResult partial_;
};

struct StepTuning {
  double step = 0.0;
  bool fallback = false;  // no grid step decreased the objective
  int evaluations = 0;
};

/// Scans alpha = 2^k / (1 + ||g0||) for k = 20 down to -20 and returns the
/// largest alpha with f(x0 - alpha g0) < f(x0). Falls back to the smallest
/// grid value (flagged) when none decreases.
StepTuning tune_initial_step(const Oracle& oracle, const Vector& x0);

/// The momentum sequence alpha_0 = 0, alpha_s = (1 + sqrt(1 + 4 alpha_{s-1}^2)) / 2
/// of the accelerated method, first `count` terms.
std::vector<double> momentum_sequence(int count);

// gamma_s = (1 - alpha_s) / alpha_{s+1}
double momentum_weight(double alpha_s, double alpha_next);

// x_{k+1} = x_k - alpha_hat / sqrt(k + 1) * g_k, best iterate returned.
SolverResult subgradient_method(const Oracle& oracle, const SolverConfig& config,
                                Eigen::Index dimension);

// s_{k+1} = sum_{i<=k} g_i / ||g_i||,  x_{k+1} = x_0 - s_{k+1} / (alpha_hat sqrt(k + 1)).
SolverResult dual_averaging(const Oracle& oracle, const SolverConfig& config,
                            Eigen::Index dimension);

SolverResult gradient_descent(const Oracle& oracle, const SolverConfig& config,
                              Eigen::Index dimension);

// x_{s+1} = y_s - (1/beta) grad f(y_s),  y_{s+1} = (1 - gamma_s) x_{s+1} + gamma_s x_s.
SolverResult accelerated_gradient(const Oracle& oracle, const SolverConfig& config,
                                  Eigen::Index dimension);

// Two-loop L-BFGS with Armijo backtracking.
SolverResult lbfgs(const Oracle& oracle, const SolverConfig& config, Eigen::Index dimension);

// Dispatches on config.algorithm.
SolverResult minimize(const Oracle& oracle, const SolverConfig& config, Eigen::Index dimension);

// Oracles over a dataset. They hold references: loss and data must outlive them.
Oracle make_exact_oracle(const PerSampleLoss& loss, const Dataset& data, double p);
Oracle make_smoothed_oracle(const PerSampleLoss& loss, const Dataset& data,
                            const RiskParams& params);

// Minimizes the superquantile objective with the oracle the algorithm needs:
// exact for subgradient / dual averaging, smoothed otherwise.
SolverResult train(const PerSampleLoss& loss, const Dataset& data, const RiskParams& params,
                   const SolverConfig& config);

}  // namespace tailrisk
