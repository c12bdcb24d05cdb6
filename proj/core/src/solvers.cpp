#include "tailrisk/solvers.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "tailrisk/smoothing.hpp"
#include "tailrisk/superquantile.hpp"

namespace tailrisk {

namespace {

constexpr int kFTolWindow = 10;
constexpr int kMaxHalvings = 50;
constexpr double kArmijo = 1e-4;

// Counts oracle calls.
class CountingOracle {
 public:
  explicit CountingOracle(const Oracle& oracle) : oracle_(oracle) {}

  OracleResult operator()(const Vector& x) {
    ++calls_;
    return oracle_(x);
  }

  std::int64_t calls() const noexcept { return calls_; }

 private:
  const Oracle& oracle_;
  std::int64_t calls_ = 0;
};

// Bookkeeping shared by all solvers: trace, best iterate, stopping tests.
class Run {
 public:
  Run(const SolverConfig& config, CountingOracle& oracle) : config_(config), oracle_(oracle) {}

  // Records the evaluation at x; returns the reason to stop, if any.
  std::optional<Termination> record(const Vector& x, const OracleResult& r) {
    result_.objective_trace.push_back(r.value);
    if (config_.record_iterates) result_.iterate_trace.push_back(x);
    if (!std::isfinite(r.value) || !r.gradient.allFinite()) {
      result_.oracle_calls = oracle_.calls();
      if (result_.solution.size() == 0) {
        result_.solution = x;
        result_.best_objective = r.value;
      }
      throw SolverAborted("oracle returned a non-finite value or gradient", result_);
    }
    if (result_.solution.size() == 0 || r.value < result_.best_objective) {
      result_.solution = x;
      result_.best_objective = r.value;
    }
    best_history_.push_back(result_.best_objective);

    if (r.gradient.norm() <= config_.grad_tol) return Termination::kGradTol;
    const auto k = best_history_.size();
    if (config_.f_tol > 0.0 && k > kFTolWindow &&
        best_history_[k - 1 - kFTolWindow] - best_history_[k - 1] <= config_.f_tol) {
      return Termination::kFTol;
    }
    if (static_cast<int>(result_.objective_trace.size()) >= config_.max_iters) {
      return Termination::kMaxIters;
    }
    return std::nullopt;
  }

  SolverResult finish(Termination why, double step) {
    result_.termination = why;
    result_.oracle_calls = oracle_.calls();
    result_.step_size = step;
    return std::move(result_);
  }

 private:
  const SolverConfig& config_;
  CountingOracle& oracle_;
  SolverResult result_;
  std::vector<double> best_history_;
};

Vector start_point(const SolverConfig& config, Eigen::Index dimension) {
  config.validate();
  if (config.initial_point.size() == 0) return Vector::Zero(dimension);
  if (config.initial_point.size() != dimension) {
    throw ParameterError("initial point has length " + std::to_string(config.initial_point.size()) +
                         ", expected " + std::to_string(dimension));
  }
  return config.initial_point;
}

// Sufficient decrease f_new <= f + required (required < 0), or a plain
// non-increase when the required decrease is below the resolution of f.
bool accept_step(double f_new, double f, double required) {
  if (!std::isfinite(f_new)) return false;
  if (f_new <= f + required) return true;
  return -required <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f) && f_new <= f;
}

StepTuning tune(CountingOracle& oracle, const Vector& x0, const OracleResult& at_x0) {
  StepTuning out;
  const double base = 1.0 / (1.0 + at_x0.gradient.norm());
  for (int k = 20; k >= -20; --k) {
    const double alpha = std::ldexp(base, k);
    ++out.evaluations;
    const double trial = oracle(x0 - alpha * at_x0.gradient).value;
    if (trial < at_x0.value) {
      out.step = alpha;
      return out;
    }
  }
  out.step = std::ldexp(base, -20);
  out.fallback = true;
  return out;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kSubgradient: return "subgradient";
    case Algorithm::kDualAveraging: return "dual_averaging";
    case Algorithm::kGradientDescent: return "gradient_descent";
    case Algorithm::kAcceleratedGradient: return "accelerated_gradient";
    case Algorithm::kLbfgs: return "lbfgs";
  }
  return "unknown";
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::kMaxIters: return "max_iters";
    case Termination::kGradTol: return "grad_tol";
    case Termination::kFTol: return "f_tol";
    case Termination::kLineSearchFailure: return "line_search_failure";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "subgradient") return Algorithm::kSubgradient;
  if (name == "dual_averaging" || name == "dual-averaging" || name == "da") {
    return Algorithm::kDualAveraging;
  }
  if (name == "gradient_descent" || name == "gd") return Algorithm::kGradientDescent;
  if (name == "accelerated_gradient" || name == "agd") return Algorithm::kAcceleratedGradient;
  if (name == "lbfgs" || name == "l-bfgs") return Algorithm::kLbfgs;
  throw ParameterError("unknown algorithm '" + std::string(name) + "'");
}

bool needs_smooth_oracle(Algorithm algorithm) {
  return algorithm != Algorithm::kSubgradient && algorithm != Algorithm::kDualAveraging;
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (!(grad_tol >= 0.0)) throw ParameterError("grad_tol must be non-negative");
  if (!(f_tol >= 0.0)) throw ParameterError("f_tol must be non-negative");
  if (step_size && !(*step_size > 0.0 && std::isfinite(*step_size))) {
    throw ParameterError("step_size must be positive");
  }
  if (lbfgs_memory < 1) throw ParameterError("lbfgs_memory must be at least 1");
}

StepTuning tune_initial_step(const Oracle& oracle, const Vector& x0) {
  CountingOracle counted(oracle);
  const OracleResult at_x0 = counted(x0);
  return tune(counted, x0, at_x0);
}

std::vector<double> momentum_sequence(int count) {
  std::vector<double> alpha;
  if (count <= 0) return alpha;
  alpha.reserve(static_cast<std::size_t>(count));
  alpha.push_back(0.0);
  for (int s = 1; s < count; ++s) {
    const double prev = alpha.back();
    alpha.push_back((1.0 + std::sqrt(1.0 + 4.0 * prev * prev)) / 2.0);
  }
  return alpha;
}

double momentum_weight(double alpha_s, double alpha_next) { return (1.0 - alpha_s) / alpha_next; }

SolverResult subgradient_method(const Oracle& oracle, const SolverConfig& config,
                                Eigen::Index dimension) {
  Vector x = start_point(config, dimension);
  CountingOracle counted(oracle);
  Run run(config, counted);

  OracleResult r = counted(x);
  if (auto stop = run.record(x, r)) return run.finish(*stop, config.step_size.value_or(0.0));
  const double alpha_hat = config.step_size ? *config.step_size : tune(counted, x, r).step;

  for (int k = 0;; ++k) {
    x -= (alpha_hat / std::sqrt(static_cast<double>(k + 1))) * r.gradient;
    r = counted(x);
    if (auto stop = run.record(x, r)) return run.finish(*stop, alpha_hat);
  }
}

SolverResult dual_averaging(const Oracle& oracle, const SolverConfig& config,
                            Eigen::Index dimension) {
  const Vector x0 = start_point(config, dimension);
  CountingOracle counted(oracle);
  Run run(config, counted);

  Vector x = x0;
  OracleResult r = counted(x);
  if (auto stop = run.record(x, r)) return run.finish(*stop, config.step_size.value_or(0.0));

  // First displacement has length 1 / alpha_hat.
  double alpha_hat = 0.0;
  if (config.step_size) {
    alpha_hat = 1.0 / *config.step_size;
  } else {
    alpha_hat = 1.0 / (tune(counted, x, r).step * r.gradient.norm());
  }

  Vector s = Vector::Zero(dimension);
  for (int k = 0;; ++k) {
    s += r.gradient / r.gradient.norm();
    x = x0 - s / (alpha_hat * std::sqrt(static_cast<double>(k + 1)));
    r = counted(x);
    if (auto stop = run.record(x, r)) return run.finish(*stop, 1.0 / alpha_hat);
  }
}

SolverResult gradient_descent(const Oracle& oracle, const SolverConfig& config,
                              Eigen::Index dimension) {
  Vector x = start_point(config, dimension);
  CountingOracle counted(oracle);
  Run run(config, counted);

  OracleResult r = counted(x);
  if (auto stop = run.record(x, r)) return run.finish(*stop, config.step_size.value_or(0.0));

  if (config.step_size) {
    const double step = *config.step_size;
    while (true) {
      x -= step * r.gradient;
      r = counted(x);
      if (auto stop = run.record(x, r)) return run.finish(*stop, step);
    }
  }

  const double tuned = tune(counted, x, r).step;
  double step = tuned;
  while (true) {
    const double slope = -r.gradient.squaredNorm();
    double trial_step = 2.0 * step;
    bool accepted = false;
    Vector trial;
    OracleResult trial_r;
    for (int h = 0; h <= kMaxHalvings; ++h, trial_step *= 0.5) {
      trial = x - trial_step * r.gradient;
      trial_r = counted(trial);
      if (accept_step(trial_r.value, r.value, kArmijo * trial_step * slope)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return run.finish(Termination::kLineSearchFailure, tuned);
    step = trial_step;
    x = std::move(trial);
    r = std::move(trial_r);
    if (auto stop = run.record(x, r)) return run.finish(*stop, tuned);
  }
}

SolverResult accelerated_gradient(const Oracle& oracle, const SolverConfig& config,
                                  Eigen::Index dimension) {
  Vector y = start_point(config, dimension);
  CountingOracle counted(oracle);
  Run run(config, counted);

  OracleResult r = counted(y);
  if (auto stop = run.record(y, r)) return run.finish(*stop, config.step_size.value_or(0.0));

  const bool backtrack = !config.step_size;
  double step = backtrack ? tune(counted, y, r).step : *config.step_size;

  Vector x_prev = y;
  double alpha = 1.0;  // alpha_1, from alpha_0 = 0
  while (true) {
    Vector x_next = y - step * r.gradient;
    if (backtrack) {
      // Safeguard: f(x_next) <= f(y) - (step / 2) ||g||^2, halving the step otherwise.
      int halvings = 0;
      while (true) {
        const double f_next = counted(x_next).value;
        if (accept_step(f_next, r.value, -0.5 * step * r.gradient.squaredNorm())) break;
        if (++halvings > kMaxHalvings) return run.finish(Termination::kLineSearchFailure, step);
        step *= 0.5;
        x_next = y - step * r.gradient;
      }
    }
    const double alpha_next = (1.0 + std::sqrt(1.0 + 4.0 * alpha * alpha)) / 2.0;
    const double gamma = momentum_weight(alpha, alpha_next);
    y = (1.0 - gamma) * x_next + gamma * x_prev;
    x_prev = std::move(x_next);
    alpha = alpha_next;

    r = counted(y);
    if (auto stop = run.record(y, r)) return run.finish(*stop, step);
  }
}

SolverResult lbfgs(const Oracle& oracle, const SolverConfig& config, Eigen::Index dimension) {
  Vector x = start_point(config, dimension);
  CountingOracle counted(oracle);
  Run run(config, counted);

  OracleResult r = counted(x);
  if (auto stop = run.record(x, r)) return run.finish(*stop, 1.0);

  struct Pair {
    Vector s;
    Vector y;
    double rho;
  };
  std::deque<Pair> pairs;
  const auto memory = static_cast<std::size_t>(config.lbfgs_memory);
  std::vector<double> coef;

  while (true) {
    // Two-loop recursion: direction = -H g.
    Vector direction = -r.gradient;
    coef.assign(pairs.size(), 0.0);
    for (std::size_t j = pairs.size(); j-- > 0;) {
      coef[j] = pairs[j].rho * pairs[j].s.dot(direction);
      direction -= coef[j] * pairs[j].y;
    }
    if (!pairs.empty()) {
      const Pair& last = pairs.back();
      direction *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const double b = pairs[j].rho * pairs[j].y.dot(direction);
      direction += (coef[j] - b) * pairs[j].s;
    }
    double slope = r.gradient.dot(direction);
    if (!(slope < 0.0)) {
      direction = -r.gradient;
      slope = -r.gradient.squaredNorm();
    }

    double step = 1.0;
    bool accepted = false;
    Vector trial;
    OracleResult trial_r;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      trial = x + step * direction;
      trial_r = counted(trial);
      if (accept_step(trial_r.value, r.value, kArmijo * step * slope)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return run.finish(Termination::kLineSearchFailure, 1.0);

    Vector s = trial - x;
    Vector y = trial_r.gradient - r.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (pairs.size() == memory) pairs.pop_front();
      pairs.push_back({std::move(s), std::move(y), 1.0 / sy});
    }
    x = std::move(trial);
    r = std::move(trial_r);
    if (auto stop = run.record(x, r)) return run.finish(*stop, 1.0);
  }
}

SolverResult minimize(const Oracle& oracle, const SolverConfig& config, Eigen::Index dimension) {
  switch (config.algorithm) {
    case Algorithm::kSubgradient: return subgradient_method(oracle, config, dimension);
    case Algorithm::kDualAveraging: return dual_averaging(oracle, config, dimension);
    case Algorithm::kGradientDescent: return gradient_descent(oracle, config, dimension);
    case Algorithm::kAcceleratedGradient: return accelerated_gradient(oracle, config, dimension);
    case Algorithm::kLbfgs: return lbfgs(oracle, config, dimension);
  }
  throw ParameterError("unknown algorithm");
}

Oracle make_exact_oracle(const PerSampleLoss& loss, const Dataset& data, double p) {
  check_tail_level(p);
  return [&loss, &data, p](const Vector& w) { return exact_oracle(loss, data, w, p); };
}

Oracle make_smoothed_oracle(const PerSampleLoss& loss, const Dataset& data,
                            const RiskParams& params) {
  params.validate(/*require_mu=*/true);
  return [&loss, &data, params](const Vector& w) { return smoothed_oracle(loss, data, w, params); };
}

SolverResult train(const PerSampleLoss& loss, const Dataset& data, const RiskParams& params,
                   const SolverConfig& config) {
  const auto dimension = static_cast<Eigen::Index>(data.d());
  if (needs_smooth_oracle(config.algorithm)) {
    return minimize(make_smoothed_oracle(loss, data, params), config, dimension);
  }
  return minimize(make_exact_oracle(loss, data, params.p), config, dimension);
}

}  // namespace tailrisk
