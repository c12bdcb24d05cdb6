#include "tailrisk/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include <Eigen/QR>

#include "tailrisk/superquantile.hpp"

namespace tailrisk {

namespace {

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(gen);
  }
  return m;
}

Eigen::MatrixXd orthonormal_columns(const Matrix& g) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
}

// Uniform on the open interval (0, 1) from 53 random bits.
double open_uniform(std::mt19937_64& gen) {
  return (static_cast<double>(gen() >> 11) + 0.5) * 0x1.0p-53;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_number(std::string_view field, double& out) {
  if (field.empty()) return false;
  if (field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(data.d()));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(rows[r]);
    x.row(static_cast<Eigen::Index>(r)) = data.features().row(src);
    y[static_cast<Eigen::Index>(r)] = data.targets()[src];
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n < 1 || d < 1) throw ParameterError("synthetic data needs n >= 1 and d >= 1");
  if (effective_rank < 1 || effective_rank > d) {
    throw ParameterError("effective_rank must lie in [1, d]");
  }
  if (!(bernoulli_p >= 0.0 && bernoulli_p <= 1.0)) {
    throw ParameterError("bernoulli_p must lie in [0, 1]");
  }
  if (!(laplace_scale >= 0.0) || !std::isfinite(laplace_loc)) {
    throw ParameterError("laplace_scale must be non-negative and laplace_loc finite");
  }
  if (w_bar && static_cast<std::size_t>(w_bar->size()) != d) {
    throw ParameterError("w_bar must have length d");
  }
}

std::mt19937_64 make_generator(std::uint64_t seed, Stream purpose) {
  const auto tag = static_cast<std::uint64_t>(purpose);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return std::mt19937_64(seq);
}

Matrix generate_low_rank(std::size_t n, std::size_t d, std::size_t effective_rank,
                         std::uint64_t seed) {
  if (n < 1 || d < 1) throw ParameterError("low-rank matrix needs n >= 1 and d >= 1");
  if (effective_rank < 1 || effective_rank > d) {
    throw ParameterError("effective_rank must lie in [1, d]");
  }
  const auto rows = static_cast<Eigen::Index>(n);
  const auto cols = static_cast<Eigen::Index>(d);
  const Eigen::Index k = std::min(rows, cols);

  auto gen = make_generator(seed, Stream::kMatrix);
  const Eigen::MatrixXd u = orthonormal_columns(gaussian_matrix(rows, k, gen));
  const Eigen::MatrixXd v = orthonormal_columns(gaussian_matrix(cols, k, gen));

  const double r = static_cast<double>(effective_rank);
  Vector s(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double t = static_cast<double>(j) / r;
    s[j] = std::exp(-t * t) + 0.01 * std::exp(-t);
  }
  return u * s.asDiagonal() * v.transpose();
}

Vector default_w_bar(std::size_t d, std::uint64_t seed) {
  auto gen = make_generator(seed, Stream::kWeights);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector w(static_cast<Eigen::Index>(d));
  for (auto& wi : w) wi = normal(gen);
  return w;
}

Vector generate_targets(const Matrix& features, const Vector& w_bar, const SyntheticSpec& spec) {
  if (features.cols() != w_bar.size()) {
    throw ParameterError("w_bar length does not match the feature count");
  }
  auto gen = make_generator(spec.seed, Stream::kNoise);
  std::normal_distribution<double> normal(0.0, 1.0);

  Vector y = features * w_bar;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // Fixed draw order per sample: Bernoulli, Gaussian, Laplace.
    const bool gaussian = open_uniform(gen) < spec.bernoulli_p;
    const double eps_normal = normal(gen);
    const double centered = open_uniform(gen) - 0.5;
    const double eps_laplace =
        spec.laplace_loc -
        spec.laplace_scale * std::copysign(1.0, centered) * std::log(1.0 - 2.0 * std::abs(centered));
    y[i] += gaussian ? eps_normal : eps_laplace;
  }
  return y;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::size_t test_n) {
  spec.validate();
  if (test_n < 1) throw ParameterError("test set needs at least one row");
  const Vector w_bar = spec.w_bar ? *spec.w_bar : default_w_bar(spec.d, spec.seed);
  const Matrix x = generate_low_rank(spec.n + test_n, spec.d, spec.effective_rank, spec.seed);
  const Vector y = generate_targets(x, w_bar, spec);

  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto m = static_cast<Eigen::Index>(test_n);
  return {Dataset(x.topRows(n), y.head(n)), Dataset(x.bottomRows(m), y.tail(m)), w_bar};
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(DataError::Kind::kMissingFile, "cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw DataError(DataError::Kind::kEmptyDataset, "empty dataset: '" + path.string() +
                                                        "' has no header row");
  }
  const std::string header_line = line;
  const auto header = split_fields(header_line);
  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end()) {
    throw DataError(DataError::Kind::kMissingColumn,
                    "column '" + target_column + "' not found in '" + path.string() + "'");
  }
  const auto target_index = static_cast<std::size_t>(target_it - header.begin());
  const std::size_t width = header.size();
  if (width < 2) {
    throw DataError(DataError::Kind::kMalformedRow, "need at least one feature column");
  }

  std::vector<double> features;
  std::vector<double> targets;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw DataError(DataError::Kind::kMalformedRow,
                      "row " + std::to_string(row) + ": expected " + std::to_string(width) +
                          " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < width; ++c) {
      double value = 0.0;
      if (!parse_number(fields[c], value)) {
        throw DataError(DataError::Kind::kNonNumeric,
                        "row " + std::to_string(row) + ", column '" + std::string(header[c]) +
                            "': non-numeric value '" + std::string(fields[c]) + "'");
      }
      (c == target_index ? targets : features).push_back(value);
    }
  }
  if (row == 0) {
    throw DataError(DataError::Kind::kEmptyDataset,
                    "empty dataset: '" + path.string() + "' has no data rows");
  }

  const auto n = static_cast<Eigen::Index>(row);
  const auto d = static_cast<Eigen::Index>(width - 1);
  Matrix x = Eigen::Map<const Matrix>(features.data(), n, d);
  Vector y = Eigen::Map<const Vector>(targets.data(), n);
  try {
    return Dataset(std::move(x), std::move(y));
  } catch (const ParameterError& e) {
    throw DataError(DataError::Kind::kNonNumeric, path.string() + ": " + e.what());
  }
}

void save_csv(const Dataset& data, const std::filesystem::path& path,
              const std::string& target_column) {
  std::ofstream out(path);
  if (!out) {
    throw DataError(DataError::Kind::kWriteFailed, "cannot write '" + path.string() + "'");
  }
  for (std::size_t j = 0; j < data.d(); ++j) out << 'x' << j << ',';
  out << target_column << '\n';

  char buffer[32];
  auto put = [&](double v) {
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    out << buffer;
  };
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.d(); ++j) {
      put(data.features()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out << ',';
    }
    put(data.y(i));
    out << '\n';
  }
  if (!out) {
    throw DataError(DataError::Kind::kWriteFailed, "failed while writing '" + path.string() + "'");
  }
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ParameterError("test_fraction must lie in (0, 1)");
  }
  const std::size_t n = data.n();
  const auto test_size = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n < 2 || test_size == 0 || test_size >= n) {
    throw ParameterError("split of " + std::to_string(n) + " rows at fraction " +
                         std::to_string(test_fraction) + " leaves an empty part");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto gen = make_generator(seed, Stream::kSplit);
  // Fisher-Yates with our own index draws so the permutation does not depend
  // on the standard library's shuffle.
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(gen() % (i + 1));
    std::swap(order[i], order[j]);
  }
  const std::vector<std::size_t> test_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(test_size));
  const std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(test_size), order.end());
  return {take_rows(data, train_rows), take_rows(data, test_rows)};
}

Dataset with_intercept(const Dataset& data) {
  Matrix x(data.features().rows(), data.features().cols() + 1);
  x.leftCols(data.features().cols()) = data.features();
  x.col(x.cols() - 1).setOnes();
  return Dataset(std::move(x), data.targets());
}

Vector squared_residuals(const Vector& w, const Dataset& data) {
  if (static_cast<std::size_t>(w.size()) != data.d()) {
    throw ParameterError("model has " + std::to_string(w.size()) + " weights, data has " +
                         std::to_string(data.d()) + " features");
  }
  return (data.targets() - data.features() * w).array().square();
}

double QuantileReport::at(double p) const {
  for (std::size_t j = 0; j < p_levels.size(); ++j) {
    if (p_levels[j] == p) return quantiles[j];
  }
  throw ParameterError("level " + std::to_string(p) + " not in report");
}

QuantileReport residual_quantile_report(const Vector& w, const Dataset& data,
                                        std::vector<double> p_levels) {
  for (double p : p_levels) check_tail_level(p);
  std::sort(p_levels.begin(), p_levels.end());
  p_levels.erase(std::unique(p_levels.begin(), p_levels.end()), p_levels.end());

  const LossVector r2(squared_residuals(w, data));
  QuantileReport report;
  report.mean = r2.values().mean();
  report.p_levels = p_levels;
  for (double p : p_levels) report.quantiles.push_back(quantile(r2, p));
  return report;
}

}  // namespace tailrisk
