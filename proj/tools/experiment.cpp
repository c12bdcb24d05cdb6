#include "experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "tailrisk/models.hpp"

namespace tailrisk::cli {

namespace {

std::string level_name(double p) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "SQ_p%g", p);
  return buffer;
}

ModelRow evaluate(std::string name, const Vector& w, const Dataset& test) {
  const QuantileReport report = residual_quantile_report(w, test, {0.5, 0.9});
  return {std::move(name), report.mean, report.at(0.5), report.at(0.9)};
}

}  // namespace

SolverResult fit_superquantile(const PerSampleLoss& loss, const Dataset& data,
                               const RiskParams& risk, const SolverConfig& solver) {
  SolverResult fit = train(loss, data, risk, solver);
  if (fit.termination == Termination::kLineSearchFailure) {
    throw SolverFailed("line search failed after " + std::to_string(fit.objective_trace.size()) +
                       " iterations (p = " + std::to_string(risk.p) + ")");
  }
  return fit;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.seeds < 1) throw ParameterError("need at least one seed");
  if (config.tail_levels.empty()) throw ParameterError("need at least one tail level");
  for (double p : config.tail_levels) check_tail_level(p);

  const LeastSquaresLoss loss;
  ExperimentResult result;
  for (int s = 0; s < config.seeds; ++s) {
    SyntheticSpec spec = config.data;
    spec.seed = config.data.seed + static_cast<std::uint64_t>(s);
    SyntheticData generated = generate_synthetic(spec, config.test_n);
    const Dataset train = config.intercept ? with_intercept(generated.train) : generated.train;
    const Dataset test = config.intercept ? with_intercept(generated.test) : generated.test;

    SeedOutcome outcome;
    outcome.seed = spec.seed;
    outcome.rows.push_back(evaluate("ERM", ols_closed_form(train), test));

    for (double p : config.tail_levels) {
      RiskParams risk = config.risk;
      risk.p = p;
      const SolverResult fit = fit_superquantile(loss, train, risk, config.solver);
      outcome.rows.push_back(evaluate(level_name(p), fit.solution, test));
    }
    result.per_seed.push_back(std::move(outcome));
  }

  const auto count = static_cast<double>(result.per_seed.size());
  result.averaged = result.per_seed.front().rows;
  for (std::size_t r = 0; r < result.averaged.size(); ++r) {
    ModelRow& avg = result.averaged[r];
    avg.mean = avg.q50 = avg.q90 = 0.0;
    for (const SeedOutcome& o : result.per_seed) {
      avg.mean += o.rows[r].mean / count;
      avg.q50 += o.rows[r].q50 / count;
      avg.q90 += o.rows[r].q90 / count;
    }
  }
  result.verdict = judge_trend(result.per_seed, result.averaged);
  return result;
}

TrendVerdict judge_trend(const std::vector<SeedOutcome>& outcomes,
                         const std::vector<ModelRow>& averaged) {
  TrendVerdict v;
  v.seeds = static_cast<int>(outcomes.size());
  for (const SeedOutcome& o : outcomes) {
    const ModelRow& erm = o.rows.front();
    const ModelRow& top = o.rows.back();
    if (top.q90 < erm.q90) ++v.q90_lower;
    if (top.mean >= erm.mean) ++v.mean_not_lower;
  }
  v.q90_nonincreasing = true;
  for (std::size_t r = 1; r < averaged.size(); ++r) {
    if (averaged[r].q90 > averaged[r - 1].q90) v.q90_nonincreasing = false;
  }
  // 4 of 5 seeds, scaled to the number of seeds.
  const int needed = static_cast<int>(std::ceil(0.8 * v.seeds));
  v.pass = v.q90_lower >= needed && v.mean_not_lower >= needed && v.q90_nonincreasing;
  return v;
}

void write_table_csv(const std::vector<ModelRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Kind::kWriteFailed, "cannot write '" + path + "'");
  out << "model,mean,q0.5,q0.9\n";
  char buffer[128];
  for (const ModelRow& row : rows) {
    std::snprintf(buffer, sizeof buffer, "%s,%.17g,%.17g,%.17g\n", row.model.c_str(), row.mean,
                  row.q50, row.q90);
    out << buffer;
  }
  if (!out) throw DataError(DataError::Kind::kWriteFailed, "failed while writing '" + path + "'");
}

}  // namespace tailrisk::cli
