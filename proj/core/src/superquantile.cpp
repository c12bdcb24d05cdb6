#include "tailrisk/superquantile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tailrisk {

std::size_t quantile_rank(std::size_t n, double p) {
  if (n == 0) throw ParameterError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ParameterError("quantile level must lie in [0, 1], got " + std::to_string(p));
  }
  const double dn = static_cast<double>(n);
  auto reaches = [&](std::size_t k) { return static_cast<double>(k) / dn >= p; };
  auto k = static_cast<std::size_t>(std::ceil(dn * p));
  k = std::clamp<std::size_t>(k, 1, n);
  while (k > 1 && reaches(k - 1)) --k;
  while (k < n && !reaches(k)) ++k;
  return k;
}

namespace {

double nth_smallest(std::vector<double> work, std::size_t k) {
  auto nth = work.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(work.begin(), nth, work.end());
  return *nth;
}

// k-th smallest (1-based). Large inputs go through a sampling step: a
// strided sample brackets the answer, one sequential pass keeps only the
// values inside the bracket, and selection runs on that short list. Falls
// back to plain selection when the bracket misses.
double select_kth(const Vector& values, std::size_t k) {
  const auto n = static_cast<std::size_t>(values.size());
  if (n < 8192) return nth_smallest({values.begin(), values.end()}, k);

  const std::size_t m = static_cast<std::size_t>(4.0 * std::sqrt(static_cast<double>(n)));
  std::vector<double> sample(m);
  for (std::size_t j = 0; j < m; ++j) sample[j] = values[static_cast<Eigen::Index>(j * n / m)];
  std::sort(sample.begin(), sample.end());

  const double center = static_cast<double>(k) * static_cast<double>(m) / static_cast<double>(n);
  const double spread = 3.0 * std::sqrt(static_cast<double>(m));
  const auto lo_rank = static_cast<std::ptrdiff_t>(center - spread);
  const auto hi_rank = static_cast<std::ptrdiff_t>(center + spread);
  const double lo = lo_rank < 0 ? -std::numeric_limits<double>::infinity()
                                : sample[static_cast<std::size_t>(lo_rank)];
  const double hi = hi_rank >= static_cast<std::ptrdiff_t>(m)
                        ? std::numeric_limits<double>::infinity()
                        : sample[static_cast<std::size_t>(hi_rank)];

  std::size_t below = 0;
  std::vector<double> band;
  band.reserve(4 * static_cast<std::size_t>(spread) * (n / m) + 16);
  for (double v : values) {
    if (v < lo) {
      ++below;
    } else if (v <= hi) {
      band.push_back(v);
    }
  }
  if (below < k && k <= below + band.size()) return nth_smallest(std::move(band), k - below);
  return nth_smallest({values.begin(), values.end()}, k);
}

}  // namespace

double quantile(const LossVector& losses, double p) {
  return select_kth(losses.values(), quantile_rank(losses.size(), p));
}

double superquantile(const LossVector& losses, double p) {
  check_tail_level(p);
  const Vector& L = losses.values();
  if (p == 0.0) return L.mean();
  const double q = quantile(losses, p);
  const double cap = simplex_cap(losses.size(), p);
  return q + cap * (L.array() - q).max(0.0).sum();
}

ExactOracleOutput exact_subgradient_weights(const LossVector& losses, double p) {
  check_tail_level(p);
  const std::size_t n = losses.size();
  const Vector& L = losses.values();
  const double cap = simplex_cap(n, p);

  if (p == 0.0) {
    const double lowest = L.minCoeff();
    const auto ties = static_cast<std::size_t>((L.array() == lowest).count());
    return {L.mean(), DualWeights(Vector::Constant(L.size(), 1.0 / static_cast<double>(n)), cap),
            lowest, ties};
  }

  const double q = quantile(losses, p);
  std::size_t above = 0;
  std::size_t ties = 0;
  for (Eigen::Index i = 0; i < L.size(); ++i) {
    if (L[i] > q) {
      ++above;
    } else if (L[i] == q) {
      ++ties;
    }
  }
  // ties >= 1 because q is itself one of the losses.
  const double tie_weight =
      std::clamp((1.0 - static_cast<double>(above) * cap) / static_cast<double>(ties), 0.0, cap);

  Vector weights(L.size());
  for (Eigen::Index i = 0; i < L.size(); ++i) {
    weights[i] = L[i] > q ? cap : (L[i] == q ? tie_weight : 0.0);
  }
  const double value = q + cap * (L.array() - q).max(0.0).sum();
  return {value, DualWeights(std::move(weights), cap), q, ties};
}

OracleResult exact_oracle(const PerSampleLoss& loss, const Dataset& data, ConstVectorRef w,
                          double p) {
  const LossVector losses = batch_losses(loss, data, w);
  ExactOracleOutput out = exact_subgradient_weights(losses, p);
  return {out.value, jacobian_transpose_apply(loss, data, w, out.weights)};
}

}  // namespace tailrisk
