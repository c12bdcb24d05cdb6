#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tailrisk/types.hpp"

namespace tailrisk {

/// Synthetic regression protocol: low-rank features and targets
/// y = x.w_bar + beta N(0,1) + (1 - beta) Laplace(loc, scale), beta ~ Bernoulli.
struct SyntheticSpec {
  std::size_t n = 10000;
  std::size_t d = 40;
  std::size_t effective_rank = 30;
  std::optional<Vector> w_bar;  // seeded standard Gaussian when absent
  double bernoulli_p = 0.8;
  double laplace_loc = 10.0;
  double laplace_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Independent random streams derived from one seed.
enum class Stream : std::uint64_t {
  kMatrix = 1,
  kNoise = 2,
  kSplit = 3,
  kWeights = 4,
};

// All randomness goes through mt19937_64 seeded from (seed, purpose).
std::mt19937_64 make_generator(std::uint64_t seed, Stream purpose);

/// n x d matrix U diag(s) V^T with random orthonormal U, V (QR of seeded
/// Gaussian matrices) and singular values
///   s_k = exp(-(k / effective_rank)^2) + 0.01 exp(-k / effective_rank).
Matrix generate_low_rank(std::size_t n, std::size_t d, std::size_t effective_rank,
                         std::uint64_t seed);

// Standard Gaussian coefficients from the kWeights stream.
Vector default_w_bar(std::size_t d, std::uint64_t seed);

// Targets X w_bar plus the Bernoulli mixture of Gaussian and Laplace noise,
// drawn from the kNoise stream of spec.seed.
Vector generate_targets(const Matrix& features, const Vector& w_bar, const SyntheticSpec& spec);

struct SyntheticData {
  Dataset train;
  Dataset test;
  Vector w_bar;
};

// Draws spec.n + test_n rows from one low-rank matrix and one noise stream;
// the first spec.n rows form the training set.
SyntheticData generate_synthetic(const SyntheticSpec& spec, std::size_t test_n);

/// Reads a comma-separated file with a header row. The column named
/// target_column becomes the targets; every other column is a feature.
/// Row numbers in error messages count data rows from 1 (header excluded).
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);

// Writes features as x0..x{d-1} followed by the target column, 17 significant digits.
void save_csv(const Dataset& data, const std::filesystem::path& path,
              const std::string& target_column = "y");

// Seeded permutation split; the test part has round(n * test_fraction) rows.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

// Appends a constant-one feature column.
Dataset with_intercept(const Dataset& data);

// (y_i - w.x_i)^2 for every sample.
Vector squared_residuals(const Vector& w, const Dataset& data);

struct QuantileReport {
  double mean = 0.0;
  std::vector<double> p_levels;   // ascending, unique
  std::vector<double> quantiles;  // quantiles[j] belongs to p_levels[j]

  // Quantile at a level present in p_levels; throws ParameterError otherwise.
  double at(double p) const;
};

// Mean and empirical quantiles of the squared residuals. Levels must lie in
// [0, 1); they are reported sorted and deduplicated.
QuantileReport residual_quantile_report(const Vector& w, const Dataset& data,
                                        std::vector<double> p_levels);

}  // namespace tailrisk
