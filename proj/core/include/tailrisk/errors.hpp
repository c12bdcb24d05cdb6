#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tailrisk {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid tail level, smoothing scale, solver setting, or mismatched sizes.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A loss or gradient evaluated to NaN/Inf.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t sample)
      : Error(what + " (sample " + std::to_string(sample) + ")"), sample_(sample) {}

  std::size_t sample() const noexcept { return sample_; }

 private:
  std::size_t sample_;
};

// Failures while reading or writing datasets and model files.
class DataError : public Error {
 public:
  enum class Kind {
    kMissingFile,
    kMissingColumn,
    kNonNumeric,
    kMalformedRow,
    kEmptyDataset,
    kWriteFailed,
  };

  DataError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace tailrisk
