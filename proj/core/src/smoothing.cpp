#include "tailrisk/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace tailrisk {

namespace {

// theta'(a) within this distance of zero is taken as the root itself.
constexpr double kRootTolerance = 1e-12;

void check_smoothing(double p, double mu) {
  RiskParams{p, mu, Penalty::kEuclidean}.validate(/*require_mu=*/true);
}

SmoothedOracleOutput finish(const Vector& L, Vector q, double cap, double mu, double lambda,
                            double penalty) {
  const double value = q.dot(L) - mu * penalty;
  return {value, DualWeights(std::move(q), cap), lambda, penalty};
}

// Evaluates theta' in O(log n) from losses shifted by mu/n and sorted
// ascending, plus their prefix sums.
class SortedTheta {
 public:
  SortedTheta(std::vector<double> sorted_u, double cap, double mu)
      : u_(std::move(sorted_u)), prefix_(u_.size() + 1, 0.0), cap_(cap), mu_(mu) {
    std::partial_sum(u_.begin(), u_.end(), prefix_.begin() + 1);
  }

  double operator()(double lambda) const {
    // Coordinates with u_i > lambda + mu cap are capped; those with
    // lambda < u_i <= lambda + mu cap are on the linear piece.
    const auto lin_begin = std::upper_bound(u_.begin(), u_.end(), lambda) - u_.begin();
    const auto cap_begin = std::upper_bound(u_.begin(), u_.end(), lambda + mu_ * cap_) - u_.begin();
    const auto n = static_cast<std::ptrdiff_t>(u_.size());
    const double capped = static_cast<double>(n - cap_begin) * cap_;
    const double lin_count = static_cast<double>(cap_begin - lin_begin);
    const double lin_sum = prefix_[static_cast<std::size_t>(cap_begin)] -
                           prefix_[static_cast<std::size_t>(lin_begin)];
    return 1.0 - (capped + (lin_sum - lin_count * lambda) / mu_);
  }

 private:
  std::vector<double> u_;
  std::vector<double> prefix_;
  double cap_;
  double mu_;
};

double direct_theta(const Vector& u, double lambda, double cap, double mu) {
  double s = 0.0;
  for (double ui : u) s += std::clamp((ui - lambda) / mu, 0.0, cap);
  return 1.0 - s;
}

double interpolate_root(double a, double b, double ta, double tb) {
  if (std::abs(ta) <= kRootTolerance) return a;
  return a - ta * (b - a) / (tb - ta);
}

double root_by_sorting(const Vector& u, double cap, double mu) {
  std::vector<double> sorted(u.begin(), u.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> lower(sorted.size());
  std::transform(sorted.begin(), sorted.end(), lower.begin(),
                 [&](double ui) { return ui - mu * cap; });
  std::vector<double> points(2 * sorted.size());
  std::merge(sorted.begin(), sorted.end(), lower.begin(), lower.end(), points.begin());
  points.erase(std::unique(points.begin(), points.end()), points.end());

  const SortedTheta theta(std::move(sorted), cap, mu);
  // theta' is 1 - n cap <= 0 at the lowest breakpoint and 1 at the highest.
  std::size_t lo = 0;
  std::size_t hi = points.size() - 1;
  double t_lo = theta(points[lo]);
  if (t_lo >= 0.0 || lo == hi) return points[lo];
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (theta(points[mid]) <= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Prefix-sum differences lose digits for large n; re-evaluate the two
  // bracket ends directly and nudge the bracket if a sign flipped.
  t_lo = direct_theta(u, points[lo], cap, mu);
  double t_hi = direct_theta(u, points[hi], cap, mu);
  while (t_lo > 0.0 && lo > 0) {
    hi = lo--;
    t_hi = t_lo;
    t_lo = direct_theta(u, points[lo], cap, mu);
  }
  while (t_hi <= 0.0 && hi + 1 < points.size()) {
    lo = hi++;
    t_lo = t_hi;
    t_hi = direct_theta(u, points[hi], cap, mu);
  }
  return interpolate_root(points[lo], points[hi], t_lo, t_hi);
}

// Shrinks the bracket [a, b] by pivoting on the median live breakpoint.
// Coordinates whose piece is fixed over the whole bracket are folded into
// running totals, so each round only touches the still-undecided ones.
double root_by_selection(const Vector& u, double cap, double mu) {
  const double width = mu * cap;
  double a = u.minCoeff() - width;
  double b = u.maxCoeff();

  double capped = 0.0;
  double lin_sum = 0.0;
  double lin_count = 0.0;
  std::vector<double> live(u.begin(), u.end());
  std::vector<double> candidates;
  candidates.reserve(2 * live.size());

  auto theta_at = [&](double lambda) {
    double s = capped + (lin_sum - lin_count * lambda) / mu;
    for (double ui : live) s += std::clamp((ui - lambda) / mu, 0.0, cap);
    return 1.0 - s;
  };
  auto fold = [&]() {
    auto keep = live.begin();
    for (double ui : live) {
      if (ui <= a) continue;
      if (ui - width >= b) {
        capped += cap;
      } else if (ui - width <= a && ui >= b) {
        lin_sum += ui;
        lin_count += 1.0;
      } else {
        *keep++ = ui;
      }
    }
    live.erase(keep, live.end());
  };

  if (theta_at(a) >= 0.0) return a;
  fold();
  while (true) {
    candidates.clear();
    for (double ui : live) {
      if (ui > a && ui < b) candidates.push_back(ui);
      const double lo = ui - width;
      if (lo > a && lo < b) candidates.push_back(lo);
    }
    if (candidates.empty()) break;
    auto mid = candidates.begin() + static_cast<std::ptrdiff_t>(candidates.size() / 2);
    std::nth_element(candidates.begin(), mid, candidates.end());
    const double pivot = *mid;
    if (theta_at(pivot) <= 0.0) {
      a = pivot;
    } else {
      b = pivot;
    }
    fold();
  }
  fold();
  // Every coordinate is now affine on [a, b].
  const double ta = 1.0 - (capped + (lin_sum - lin_count * a) / mu);
  const double tb = 1.0 - (capped + (lin_sum - lin_count * b) / mu);
  return interpolate_root(a, b, ta, tb);
}

}  // namespace

double euclidean_penalty(const Vector& q) {
  const double center = 1.0 / static_cast<double>(q.size());
  return 0.5 * (q.array() - center).square().sum();
}

double entropic_penalty(const Vector& q) {
  double s = std::log(static_cast<double>(q.size()));
  for (double qi : q) {
    if (qi > 0.0) s += qi * std::log(qi);
  }
  return s;
}

double theta_prime(double lambda, const LossVector& losses, double p, double mu) {
  check_smoothing(p, mu);
  const Vector& L = losses.values();
  const double n = static_cast<double>(L.size());
  const double cap = simplex_cap(losses.size(), p);
  double s = 0.0;
  for (double li : L) s += std::clamp((li + mu / n - lambda) / mu, 0.0, cap);
  return 1.0 - s;
}

SmoothedOracleOutput smoothed_weights_euclidean(const LossVector& losses, double p, double mu,
                                                BreakpointSearch search) {
  check_smoothing(p, mu);
  const Vector& L = losses.values();
  const std::size_t n = losses.size();
  const double cap = simplex_cap(n, p);
  const Vector u = L.array() + mu / static_cast<double>(n);

  if (p == 0.0) {
    Vector q = Vector::Constant(L.size(), 1.0 / static_cast<double>(n));
    return finish(L, std::move(q), cap, mu, u.minCoeff() - mu * cap, 0.0);
  }

  const double lambda =
      search == BreakpointSearch::kSort ? root_by_sorting(u, cap, mu) : root_by_selection(u, cap, mu);

  Vector q(L.size());
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (lambda < u[i] - mu * cap) {
      q[i] = cap;
    } else if (lambda < u[i]) {
      q[i] = std::min((u[i] - lambda) / mu, cap);
      free.push_back(i);
    } else {
      q[i] = 0.0;
    }
  }
  // When |L| is large against mu, rounding in u - lambda is amplified by
  // 1/mu; hand the leftover mass to the coordinates on the linear piece.
  for (int pass = 0; pass < 4 && !free.empty(); ++pass) {
    const double residual = 1.0 - q.sum();
    if (std::abs(residual) <= 1e-15) break;
    const double share = residual / static_cast<double>(free.size());
    for (Eigen::Index i : free) q[i] = std::clamp(q[i] + share, 0.0, cap);
  }
  const double penalty = euclidean_penalty(q);
  return finish(L, std::move(q), cap, mu, lambda, penalty);
}

SmoothedOracleOutput smoothed_weights_entropic(const LossVector& losses, double p, double mu) {
  check_smoothing(p, mu);
  const Vector& L = losses.values();
  const std::size_t n = losses.size();
  const double cap = simplex_cap(n, p);
  const double log_cap = std::log(cap);

  if (p == 0.0) {
    Vector q = Vector::Constant(L.size(), 1.0 / static_cast<double>(n));
    return finish(L, std::move(q), cap, mu, L.minCoeff() - mu * log_cap - mu, 0.0);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return L[static_cast<Eigen::Index>(i)] > L[static_cast<Eigen::Index>(j)];
  });
  auto loss = [&](std::size_t rank) { return L[static_cast<Eigen::Index>(order[rank])]; };

  // tail[k] = sum_{r >= k} exp((L_(r) - L_(k)) / mu) >= 1, losses in
  // decreasing order. Kept relative to the largest term of each tail so the
  // cap test below carries no absolute rounding from large L / mu.
  std::vector<double> tail(n);
  tail[n - 1] = 1.0;
  for (std::size_t r = n - 1; r-- > 0;) {
    tail[r] = 1.0 + tail[r + 1] * std::exp((loss(r + 1) - loss(r)) / mu);
  }

  // Fewest capped coordinates for which the largest remaining softmax weight
  // mass / tail[k] fits under the cap. Once mass <= cap the test holds
  // trivially, so the scan stops with mass > 0 (up to rounding).
  std::size_t capped = 0;
  double mass = 1.0;
  for (; capped + 1 < n; ++capped) {
    mass = 1.0 - static_cast<double>(capped) * cap;
    if (mass <= cap * tail[capped]) break;
  }
  mass = std::max(1.0 - static_cast<double>(capped) * cap, 0.0);
  const double log_mass = std::log(mass);
  const double log_tail = std::log(tail[capped]);
  const double top = loss(capped);

  Vector q(L.size());
  double penalty = std::log(static_cast<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const auto i = static_cast<Eigen::Index>(order[r]);
    if (r < capped) {
      q[i] = cap;
      penalty += cap * log_cap;
    } else {
      const double log_q = log_mass + (loss(r) - top) / mu - log_tail;
      q[i] = std::exp(log_q);
      if (q[i] > 0.0) penalty += q[i] * log_q;
    }
  }
  penalty = std::max(penalty, 0.0);
  // q_i = c exp(L_i / mu) on the uncapped coordinates.
  const double log_c = log_mass - top / mu - log_tail;
  return finish(L, std::move(q), cap, mu, -mu * (log_c + 1.0), penalty);
}

SmoothedOracleOutput smoothed_weights(const LossVector& losses, const RiskParams& params) {
  switch (params.penalty) {
    case Penalty::kEuclidean:
      return smoothed_weights_euclidean(losses, params.p, params.mu);
    case Penalty::kEntropic:
      return smoothed_weights_entropic(losses, params.p, params.mu);
  }
  throw ParameterError("unknown penalty");
}

OracleResult smoothed_oracle(const PerSampleLoss& loss, const Dataset& data, ConstVectorRef w,
                             const RiskParams& params) {
  params.validate(/*require_mu=*/true);
  const LossVector losses = batch_losses(loss, data, w);
  SmoothedOracleOutput out = smoothed_weights(losses, params);
  return {out.value, jacobian_transpose_apply(loss, data, w, out.weights)};
}

}  // namespace tailrisk
