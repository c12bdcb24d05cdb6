#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "experiment.hpp"
#include "tailrisk/tailrisk.hpp"

namespace tailrisk::cli {

namespace {

using nlohmann::json;

std::string penalty_name(Penalty p) { return p == Penalty::kEuclidean ? "euclidean" : "entropic"; }

Penalty parse_penalty(const std::string& name) {
  if (name == "euclidean") return Penalty::kEuclidean;
  if (name == "entropic") return Penalty::kEntropic;
  throw ParameterError("unknown penalty '" + name + "'");
}

json spec_json(const SyntheticSpec& spec) {
  return {{"n", spec.n},
          {"d", spec.d},
          {"rank", spec.effective_rank},
          {"bernoulli_p", spec.bernoulli_p},
          {"laplace_loc", spec.laplace_loc},
          {"laplace_scale", spec.laplace_scale},
          {"seed", spec.seed}};
}

json solver_json(const SolverConfig& c) {
  json j = {{"algorithm", std::string(to_string(c.algorithm))},
            {"max_iters", c.max_iters},
            {"grad_tol", c.grad_tol},
            {"f_tol", c.f_tol},
            {"lbfgs_memory", c.lbfgs_memory}};
  j["step_size"] = c.step_size ? json(*c.step_size) : json("auto");
  return j;
}

json rows_json(const std::vector<ModelRow>& rows) {
  json out = json::array();
  for (const ModelRow& r : rows) {
    out.push_back({{"model", r.model}, {"mean", r.mean}, {"q0.5", r.q50}, {"q0.9", r.q90}});
  }
  return out;
}

void write_json_file(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(DataError::Kind::kWriteFailed, "cannot write '" + path + "'");
  out << doc.dump(2) << '\n';
  if (!out) throw DataError(DataError::Kind::kWriteFailed, "failed while writing '" + path + "'");
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataError::Kind::kMissingFile, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::kMalformedRow, path + ": " + e.what());
  }
}

// Flags shared by train and experiment.
struct SolverFlags {
  std::string algorithm = "lbfgs";
  int max_iters = 1000;
  double grad_tol = 1e-8;
  double f_tol = 1e-10;
  double step_size = 0.0;  // 0 = auto
  int memory = 10;

  void attach(CLI::App& cmd) {
    cmd.add_option("--algorithm", algorithm,
                   "subgradient | dual-averaging | gd | agd | lbfgs")
        ->capture_default_str();
    cmd.add_option("--max-iters", max_iters, "Iteration budget")->capture_default_str();
    cmd.add_option("--grad-tol", grad_tol, "Stop when the gradient norm falls below this")
        ->capture_default_str();
    cmd.add_option("--f-tol", f_tol, "Stop when 10 iterations improve less than this (0 = off)")
        ->capture_default_str();
    cmd.add_option("--step-size", step_size, "Step parameter; 0 tunes it at the first iterate")
        ->capture_default_str();
    cmd.add_option("--lbfgs-memory", memory, "L-BFGS history length")->capture_default_str();
  }

  SolverConfig build() const {
    SolverConfig c;
    c.algorithm = parse_algorithm(algorithm);
    c.max_iters = max_iters;
    c.grad_tol = grad_tol;
    c.f_tol = f_tol;
    if (step_size != 0.0) c.step_size = step_size;
    c.lbfgs_memory = memory;
    c.validate();
    return c;
  }
};

struct SyntheticFlags {
  std::size_t n = 10000;
  std::size_t d = 40;
  std::size_t rank = 30;
  std::size_t test_n = 2000;
  double bernoulli_p = 0.8;
  double laplace_loc = 10.0;
  double laplace_scale = 1.0;

  void attach(CLI::App& cmd) {
    cmd.add_option("--n", n, "Training rows")->capture_default_str();
    cmd.add_option("--d", d, "Feature count")->capture_default_str();
    cmd.add_option("--rank", rank, "Effective rank of the feature matrix")->capture_default_str();
    cmd.add_option("--test-n", test_n, "Test rows")->capture_default_str();
    cmd.add_option("--bernoulli-p", bernoulli_p, "Probability of Gaussian noise")
        ->capture_default_str();
    cmd.add_option("--laplace-loc", laplace_loc, "Laplace noise location")->capture_default_str();
    cmd.add_option("--laplace-scale", laplace_scale, "Laplace noise scale")->capture_default_str();
  }

  SyntheticSpec build(std::uint64_t seed) const {
    SyntheticSpec spec;
    spec.n = n;
    spec.d = d;
    spec.effective_rank = rank;
    spec.bernoulli_p = bernoulli_p;
    spec.laplace_loc = laplace_loc;
    spec.laplace_scale = laplace_scale;
    spec.seed = seed;
    spec.validate();
    return spec;
  }
};

int gen_data(const SyntheticFlags& flags, std::uint64_t seed, const std::string& out_train,
             const std::string& out_test, std::ostream& out) {
  const SyntheticSpec spec = flags.build(seed);
  const SyntheticData data = generate_synthetic(spec, flags.test_n);
  save_csv(data.train, out_train);
  save_csv(data.test, out_test);
  json line = {{"command", "gen-data"},
               {"seed", seed},
               {"spec", spec_json(spec)},
               {"test_n", flags.test_n},
               {"train_rows", data.train.n()},
               {"test_rows", data.test.n()},
               {"out_train", out_train},
               {"out_test", out_test}};
  out << line.dump() << '\n';
  return kOk;
}

struct TrainFlags {
  std::string data;
  std::string target = "y";
  std::string objective = "superquantile";
  std::string loss = "lsq";
  double p = 0.9;
  double mu = 1000.0;
  std::string penalty = "euclidean";
  double ridge = 0.0;
  bool no_intercept = false;
  std::string out;
};

int train_cmd(const TrainFlags& flags, const SolverFlags& solver_flags, std::uint64_t seed,
              std::ostream& out) {
  if (flags.objective != "erm" && flags.objective != "superquantile") {
    throw ParameterError("--objective must be erm or superquantile");
  }
  if (flags.loss != "lsq" && flags.loss != "logistic") {
    throw ParameterError("--loss must be lsq or logistic");
  }
  const SolverConfig solver = solver_flags.build();
  RiskParams risk{flags.objective == "erm" ? 0.0 : flags.p, flags.mu, parse_penalty(flags.penalty)};
  risk.validate(needs_smooth_oracle(solver.algorithm));

  const Dataset raw = load_csv(flags.data, flags.target);
  const Dataset data = flags.no_intercept ? raw : with_intercept(raw);

  const LeastSquaresLoss lsq;
  const LogisticLoss logistic;
  const PerSampleLoss& loss = flags.loss == "lsq" ? static_cast<const PerSampleLoss&>(lsq)
                                                  : static_cast<const PerSampleLoss&>(logistic);

  Vector weights;
  std::vector<double> trace;
  std::string termination;
  std::string method;
  if (flags.objective == "erm" && flags.loss == "lsq") {
    weights = ols_closed_form(data, flags.ridge);
    trace.push_back(superquantile(batch_losses(loss, data, weights), 0.0));
    termination = "closed_form";
    method = "closed_form";
  } else {
    const SolverResult fit = fit_superquantile(loss, data, risk, solver);
    weights = fit.solution;
    trace = fit.objective_trace;
    termination = std::string(to_string(fit.termination));
    method = std::string(to_string(solver.algorithm));
  }
  const double final_objective = superquantile(batch_losses(loss, data, weights), risk.p);

  json config = {{"objective", flags.objective},
                 {"loss", flags.loss},
                 {"p", risk.p},
                 {"mu", risk.mu},
                 {"penalty", flags.penalty},
                 {"ridge", flags.ridge},
                 {"method", method},
                 {"solver", solver_json(solver)},
                 {"seed", seed},
                 {"data", flags.data},
                 {"target", flags.target}};
  json model = {{"format", "tailrisk-model"},
                {"version", 1},
                {"weights", std::vector<double>(weights.begin(), weights.end())},
                {"intercept", !flags.no_intercept},
                {"feature_count", raw.d()},
                {"config", config},
                {"objective_trace", trace},
                {"termination", termination},
                {"final_objective", final_objective}};
  write_json_file(model, flags.out);

  json line = {{"command", "train"},
               {"final_objective", final_objective},
               {"termination", termination},
               {"iterations", trace.size()},
               {"out", flags.out}};
  out << line.dump() << '\n';
  return kOk;
}

struct LoadedModel {
  Vector weights;
  bool intercept = false;
};

LoadedModel load_model(const std::string& path) {
  const json doc = read_json_file(path);
  try {
    LoadedModel m;
    const auto w = doc.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    m.intercept = doc.value("intercept", false);
    return m;
  } catch (const json::exception& e) {
    throw DataError(DataError::Kind::kMalformedRow, path + ": " + e.what());
  }
}

void print_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows,
                 std::ostream& os) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) os << "  ";
      os << std::string(width[c] - cells[c].size(), ' ') << cells[c];
    }
    os << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
}

std::string fixed(double v, int digits = 4) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

std::string level_label(double p) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "q%g", p);
  return buffer;
}

int eval_cmd(const std::string& model_path, const std::string& data_path, const std::string& target,
             const std::vector<double>& levels, const std::string& residuals_out, std::ostream& out,
             std::ostream& err) {
  const LoadedModel model = load_model(model_path);
  const Dataset raw = load_csv(data_path, target);
  const Dataset data = model.intercept ? with_intercept(raw) : raw;
  const QuantileReport report = residual_quantile_report(model.weights, data, levels);

  json quantiles = json::object();
  for (std::size_t j = 0; j < report.p_levels.size(); ++j) {
    quantiles[level_label(report.p_levels[j])] = report.quantiles[j];
  }
  json line = {{"command", "eval"},
               {"n", data.n()},
               {"mean", report.mean},
               {"levels", report.p_levels},
               {"quantiles", quantiles}};
  out << line.dump() << '\n';

  std::vector<std::string> header{"mean"};
  std::vector<std::string> cells{fixed(report.mean)};
  for (std::size_t j = 0; j < report.p_levels.size(); ++j) {
    header.push_back(level_label(report.p_levels[j]));
    cells.push_back(fixed(report.quantiles[j]));
  }
  print_table(header, {cells}, err);

  if (!residuals_out.empty()) {
    const Vector r2 = squared_residuals(model.weights, data);
    std::ofstream os(residuals_out);
    if (!os) throw DataError(DataError::Kind::kWriteFailed, "cannot write '" + residuals_out + "'");
    os << "squared_residual\n";
    char buffer[32];
    for (double v : r2) {
      std::snprintf(buffer, sizeof buffer, "%.17g\n", v);
      os << buffer;
    }
  }
  return kOk;
}

struct ExperimentFlags {
  int seeds = 1;
  double mu = 1000.0;
  std::string penalty = "euclidean";
  std::string out;
};

int experiment_cmd(const SyntheticFlags& data_flags, const SolverFlags& solver_flags,
                   const ExperimentFlags& flags, std::uint64_t seed, std::ostream& out,
                   std::ostream& err) {
  ExperimentConfig config;
  config.data = data_flags.build(seed);
  config.test_n = data_flags.test_n;
  config.seeds = flags.seeds;
  config.risk = RiskParams{0.0, flags.mu, parse_penalty(flags.penalty)};
  config.risk.validate(/*require_mu=*/true);
  config.solver = solver_flags.build();

  const ExperimentResult result = run_experiment(config);
  if (!flags.out.empty()) write_table_csv(result.averaged, flags.out);

  std::vector<std::vector<std::string>> table;
  for (const ModelRow& r : result.averaged) {
    table.push_back({r.model, fixed(r.mean, 2), fixed(r.q50, 2), fixed(r.q90, 2)});
  }
  print_table({"model", "mean", "q0.5", "q0.9"}, table, err);

  json per_seed = json::array();
  for (const SeedOutcome& o : result.per_seed) {
    per_seed.push_back({{"seed", o.seed}, {"rows", rows_json(o.rows)}});
  }
  const TrendVerdict& v = result.verdict;
  json line = {{"command", "experiment"},
               {"seed", seed},
               {"seeds", v.seeds},
               {"spec", spec_json(config.data)},
               {"test_n", config.test_n},
               {"mu", config.risk.mu},
               {"penalty", penalty_name(config.risk.penalty)},
               {"solver", solver_json(config.solver)},
               {"table", rows_json(result.averaged)},
               {"per_seed", per_seed},
               {"verdict",
                {{"q90_lower_than_erm", v.q90_lower},
                 {"mean_not_lower_than_erm", v.mean_not_lower},
                 {"q90_nonincreasing", v.q90_nonincreasing},
                 {"pass", v.pass}}}};
  if (!flags.out.empty()) line["out"] = flags.out;
  out << line.dump() << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Superquantile (CVaR) training and evaluation", "tailrisk"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  };

  std::function<int()> action;

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate synthetic train/test CSV files");
  SyntheticFlags gen_flags;
  gen_flags.attach(*gen);
  std::string out_train = "train.csv";
  std::string out_test = "test.csv";
  gen->add_option("--out-train", out_train, "Training CSV path")->capture_default_str();
  gen->add_option("--out-test", out_test, "Test CSV path")->capture_default_str();
  add_seed(gen);
  gen->callback([&] { action = [&] { return gen_data(gen_flags, seed, out_train, out_test, out); }; });

  // train
  auto* train = app.add_subcommand("train", "Fit a linear model (ERM or superquantile)");
  TrainFlags train_flags;
  SolverFlags train_solver;
  train->add_option("--data", train_flags.data, "Training CSV")->required();
  train->add_option("--target", train_flags.target, "Target column")->capture_default_str();
  train->add_option("--objective", train_flags.objective, "erm | superquantile")
      ->capture_default_str();
  train->add_option("--loss", train_flags.loss, "lsq | logistic")->capture_default_str();
  train->add_option("--p", train_flags.p, "Tail level in [0, 1)")->capture_default_str();
  train->add_option("--mu", train_flags.mu, "Smoothing scale")->capture_default_str();
  train->add_option("--penalty", train_flags.penalty, "euclidean | entropic")
      ->capture_default_str();
  train->add_option("--ridge", train_flags.ridge, "Ridge term for the closed-form ERM fit")
      ->capture_default_str();
  train->add_flag("--no-intercept", train_flags.no_intercept, "Do not append a constant feature");
  train->add_option("--out", train_flags.out, "Model JSON path")->required();
  train_solver.attach(*train);
  add_seed(train);
  train->callback([&] { action = [&] { return train_cmd(train_flags, train_solver, seed, out); }; });

  // eval
  auto* eval = app.add_subcommand("eval", "Report mean and quantiles of squared residuals");
  std::string model_path;
  std::string eval_data;
  std::string eval_target = "y";
  std::vector<double> levels{0.5, 0.9};
  std::string residuals_out;
  eval->add_option("--model", model_path, "Model JSON")->required();
  eval->add_option("--data", eval_data, "CSV to evaluate on")->required();
  eval->add_option("--target", eval_target, "Target column")->capture_default_str();
  eval->add_option("--levels", levels, "Comma-separated quantile levels")
      ->delimiter(',')
      ->capture_default_str();
  eval->add_option("--residuals-out", residuals_out, "Write squared residuals (histogram input)");
  add_seed(eval);
  eval->callback([&] {
    action = [&] {
      return eval_cmd(model_path, eval_data, eval_target, levels, residuals_out, out, err);
    };
  });

  // experiment
  auto* experiment = app.add_subcommand("experiment", "ERM vs superquantile study on synthetic data");
  SyntheticFlags exp_data;
  SolverFlags exp_solver;
  ExperimentFlags exp_flags;
  exp_data.attach(*experiment);
  exp_solver.attach(*experiment);
  experiment->add_option("--seeds", exp_flags.seeds, "Number of consecutive seeds to run")
      ->capture_default_str();
  experiment->add_option("--mu", exp_flags.mu, "Smoothing scale")->capture_default_str();
  experiment->add_option("--penalty", exp_flags.penalty, "euclidean | entropic")
      ->capture_default_str();
  experiment->add_option("--out", exp_flags.out, "Result table CSV (model,mean,q0.5,q0.9)");
  add_seed(experiment);
  experiment->callback([&] {
    action = [&] { return experiment_cmd(exp_data, exp_solver, exp_flags, seed, out, err); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    return action();
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const SolverFailed& e) {
    err << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const SolverAborted& e) {
    err << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const EvaluationError& e) {
    err << "error: " << e.what() << '\n';
    return kSolver;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
}

}  // namespace tailrisk::cli
