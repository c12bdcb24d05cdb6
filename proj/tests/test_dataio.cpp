#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/SVD>

#include "oracles.hpp"
#include "tailrisk/dataio.hpp"

using namespace tailrisk;
using namespace tailrisk::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("tailrisk_dataio_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

DataError::Kind load_error_kind(const fs::path& p, const std::string& target = "y") {
  try {
    load_csv(p, target);
  } catch (const DataError& e) {
    return e.kind();
  }
  FAIL("expected DataError");
  return DataError::Kind::kMissingFile;
}

}  // namespace

TEST_CASE("low-rank generator") {
  SUBCASE("deterministic per seed") {
    const Matrix a = generate_low_rank(50, 8, 4, 123);
    const Matrix b = generate_low_rank(50, 8, 4, 123);
    CHECK((a.array() == b.array()).all());
    CHECK((a.array() != generate_low_rank(50, 8, 4, 124).array()).any());
  }
  SUBCASE("top singular values carry the energy") {
    const Matrix x = generate_low_rank(200, 40, 30, 5);
    const Vector s = Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues();
    CHECK(s.head(30).squaredNorm() >= 0.9 * s.squaredNorm());
  }
  SUBCASE("full effective rank has no sharp knee") {
    const Matrix x = generate_low_rank(5, 5, 5, 1);
    const Vector s = Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues();
    CHECK(s.minCoeff() / s.maxCoeff() >= 0.1);
  }
  SUBCASE("invalid rank") {
    CHECK_THROWS_AS(generate_low_rank(10, 3, 4, 0), ParameterError);
    CHECK_THROWS_AS(generate_low_rank(10, 3, 0, 0), ParameterError);
  }
}

TEST_CASE("noise model") {
  const std::size_t n = 100000;
  const Matrix x = Matrix::Zero(static_cast<Eigen::Index>(n), 2);
  const Vector w = Vector::Zero(2);
  SyntheticSpec spec;
  spec.n = n;
  spec.d = 2;
  spec.effective_rank = 2;
  spec.seed = 9;

  spec.bernoulli_p = 1.0;
  CHECK(std::abs(generate_targets(x, w, spec).mean()) <= 3.0 / std::sqrt(n));

  spec.bernoulli_p = 0.0;
  CHECK(std::abs(generate_targets(x, w, spec).mean() - 10.0) <= 3.0 * std::sqrt(2.0) / std::sqrt(n));

  spec.laplace_scale = 0.0;
  const Vector y = generate_targets(x, w, spec);
  CHECK((y.array() == 10.0).all());

  spec.bernoulli_p = 1.5;
  CHECK_THROWS_AS(spec.validate(), ParameterError);
}

TEST_CASE("generate_synthetic shapes and determinism") {
  SyntheticSpec spec;
  spec.n = 120;
  spec.d = 6;
  spec.effective_rank = 3;
  spec.seed = 77;
  const SyntheticData a = generate_synthetic(spec, 30);
  const SyntheticData b = generate_synthetic(spec, 30);
  CHECK(a.train.n() == 120);
  CHECK(a.test.n() == 30);
  CHECK(a.train.d() == 6);
  CHECK((a.train.features().array() == b.train.features().array()).all());
  CHECK((a.test.targets().array() == b.test.targets().array()).all());
  CHECK(a.w_bar == default_w_bar(6, 77));
}

TEST_CASE("CSV round trip and errors") {
  TempDir dir;
  std::mt19937_64 gen(3);

  SUBCASE("exact round trip") {
    const Dataset data = random_dataset(10, 3, gen);
    save_csv(data, dir.file("d.csv"));
    const Dataset back = load_csv(dir.file("d.csv"), "y");
    CHECK((back.features().array() == data.features().array()).all());
    CHECK((back.targets().array() == data.targets().array()).all());
  }
  SUBCASE("target column may sit anywhere") {
    write_text(dir.file("t.csv"), "a,label,b\n1,2,3\n4,5,6\n");
    const Dataset d = load_csv(dir.file("t.csv"), "label");
    CHECK(d.d() == 2);
    CHECK(d.y(1) == 5.0);
    CHECK(d.features()(1, 1) == 6.0);
  }
  SUBCASE("text cell at row 7") {
    std::string text = "x0,y\n";
    for (int i = 1; i <= 9; ++i) text += (i == 7 ? std::string("abc") : std::to_string(i)) + ",1\n";
    write_text(dir.file("bad.csv"), text);
    try {
      load_csv(dir.file("bad.csv"), "y");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::kNonNumeric);
      CHECK(std::string(e.what()).find("row 7") != std::string::npos);
    }
  }
  SUBCASE("header only") {
    write_text(dir.file("empty.csv"), "x0,y\n");
    try {
      load_csv(dir.file("empty.csv"), "y");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(e.kind() == DataError::Kind::kEmptyDataset);
      CHECK(std::string(e.what()).find("empty dataset") != std::string::npos);
    }
  }
  SUBCASE("distinct error kinds") {
    CHECK(load_error_kind(dir.file("missing.csv")) == DataError::Kind::kMissingFile);
    write_text(dir.file("nocol.csv"), "a,b\n1,2\n");
    CHECK(load_error_kind(dir.file("nocol.csv")) == DataError::Kind::kMissingColumn);
    write_text(dir.file("short.csv"), "a,y\n1,2\n3\n");
    CHECK(load_error_kind(dir.file("short.csv")) == DataError::Kind::kMalformedRow);
  }
}

TEST_CASE("train_test_split") {
  std::mt19937_64 gen(4);
  const Dataset data = random_dataset(10, 2, gen);
  const auto [train, test] = train_test_split(data, 0.2, 5);
  CHECK(train.n() == 8);
  CHECK(test.n() == 2);
  const auto [train2, test2] = train_test_split(data, 0.2, 5);
  CHECK((train.targets().array() == train2.targets().array()).all());
  // Every sample lands in exactly one part.
  std::vector<double> all(train.targets().begin(), train.targets().end());
  all.insert(all.end(), test.targets().begin(), test.targets().end());
  std::vector<double> original(data.targets().begin(), data.targets().end());
  std::sort(all.begin(), all.end());
  std::sort(original.begin(), original.end());
  CHECK(all == original);
  CHECK_THROWS_AS(train_test_split(data, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(train_test_split(data, 1.0, 1), ParameterError);
}

TEST_CASE("residual reports") {
  SUBCASE("perfect fit") {
    std::mt19937_64 gen(5);
    const Dataset base = random_dataset(20, 3, gen);
    const Vector w = random_vector(3, gen);
    const Dataset data(base.features(), base.features() * w);
    CHECK(squared_residuals(w, data).norm() <= 1e-24);
    const QuantileReport r = residual_quantile_report(w, data, {0.5, 0.9});
    CHECK(r.mean <= 1e-24);
  }
  SUBCASE("constructed squared residuals") {
    Vector y(4);
    y << 1.0, -2.0, 3.0, -4.0;
    const Dataset data(Matrix::Zero(4, 1), y);
    const QuantileReport r = residual_quantile_report(Vector::Zero(1), data, {0.75, 0.5, 0.75});
    REQUIRE(r.p_levels == std::vector<double>{0.5, 0.75});
    CHECK(r.at(0.5) == 4.0);
    CHECK(r.at(0.75) == 9.0);
    CHECK(r.mean == 7.5);
    CHECK_THROWS_AS(r.at(0.9), ParameterError);
  }
  SUBCASE("quantiles nondecreasing and mean within range") {
    std::mt19937_64 gen(6);
    const Dataset data = random_dataset(200, 3, gen);
    const Vector w = random_vector(3, gen);
    const QuantileReport r = residual_quantile_report(w, data, {0.9, 0.1, 0.5, 0.99, 0.0});
    for (std::size_t j = 1; j < r.quantiles.size(); ++j) CHECK(r.quantiles[j] >= r.quantiles[j - 1]);
    const Vector r2 = squared_residuals(w, data);
    CHECK(r.mean >= r2.minCoeff());
    CHECK(r.mean <= r2.maxCoeff());
  }
  SUBCASE("invalid level") {
    std::mt19937_64 gen(7);
    const Dataset data = random_dataset(5, 1, gen);
    CHECK_THROWS_AS(residual_quantile_report(Vector::Zero(1), data, {1.0}), ParameterError);
  }
}

TEST_CASE("with_intercept appends a constant column") {
  std::mt19937_64 gen(8);
  const Dataset data = random_dataset(6, 2, gen);
  const Dataset aug = with_intercept(data);
  CHECK(aug.d() == 3);
  CHECK((aug.features().col(2).array() == 1.0).all());
  CHECK((aug.features().leftCols(2).array() == data.features().array()).all());
}
