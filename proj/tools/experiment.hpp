#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tailrisk/dataio.hpp"
#include "tailrisk/solvers.hpp"

namespace tailrisk::cli {

// ERM baseline plus superquantile models on freshly generated data, evaluated
// on a held-out test set.
struct ExperimentConfig {
  SyntheticSpec data;  // data.seed is the first seed
  std::size_t test_n = 2000;
  int seeds = 1;       // runs use data.seed, data.seed + 1, ...
  std::vector<double> tail_levels{0.5, 0.7, 0.9};
  RiskParams risk{0.0, 1000.0, Penalty::kEuclidean};  // risk.p is overwritten per model
  SolverConfig solver;
  bool intercept = true;
};

struct ModelRow {
  std::string model;  // "ERM" or "SQ_p<level>"
  double mean = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::vector<ModelRow> rows;  // ERM first, then tail levels in order
};

struct TrendVerdict {
  int seeds = 0;
  int q90_lower = 0;      // seeds where the highest-level model has lower test q0.9 than ERM
  int mean_not_lower = 0; // seeds where its test mean is >= ERM's
  bool q90_nonincreasing = false;  // seed-averaged q0.9 along ERM, then increasing levels
  bool pass = false;
};

struct ExperimentResult {
  std::vector<SeedOutcome> per_seed;
  std::vector<ModelRow> averaged;  // mean over seeds, same row order
  TrendVerdict verdict;
};

class SolverFailed : public Error {
 public:
  using Error::Error;
};

// tailrisk::train, but a line-search failure throws SolverFailed.
SolverResult fit_superquantile(const PerSampleLoss& loss, const Dataset& data,
                               const RiskParams& risk, const SolverConfig& solver);

// Throws tailrisk::Error subclasses; a solver line-search failure surfaces as
// SolverFailed.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Required fraction of seeds for the per-seed trend tests: at least 4 of 5.
TrendVerdict judge_trend(const std::vector<SeedOutcome>& outcomes,
                         const std::vector<ModelRow>& averaged);


void write_table_csv(const std::vector<ModelRow>& rows, const std::string& path);

}  // namespace tailrisk::cli
