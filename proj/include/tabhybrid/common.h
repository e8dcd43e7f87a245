#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tabhybrid {

enum class ErrorCode {
  kMissingColumn,
  kUnparseableCell,
  kUnknownCategory,
  kTargetNotFound,
  kEmptyFile,
  kKTooLarge,
  kInvalidArgument,
  kCodeOutOfRange,
  kDegenerateBatch,
  kNonFiniteLoss,
  kSingleClassInput,
  kFeatureCountMismatch,
  kLengthMismatch,
  kSingleClass,
  kSchemaMismatch,
  kMissingCoverCounts,
  kConfig,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// All library failures surface as this exception; `code()` identifies the
// contract violation so callers and tests can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Matrix SelectRows(std::span<const std::size_t> indices) const;
  // Concatenates columns of `other` to the right; row counts must match.
  Matrix HStack(const Matrix& other) const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Deterministic seed derivation. Every random stream in the toolkit is
// seeded by mixing the experiment seed with a path of integers such as
// (component, fold, candidate, row).
std::uint64_t SplitMix64(std::uint64_t x);
std::uint64_t DeriveSeed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);
// Uniform double in [0, 1) from a 64-bit counter hash.
double HashUniform(std::uint64_t seed, std::uint64_t counter);

// Shortest decimal that parses back to the same double.
std::string FormatDouble(double value);

double Sigmoid(double x);

// FNV-1a over raw bytes.
std::uint64_t Fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string HexDigest(std::uint64_t value);

// Whole-file helpers; failures throw kIo.
std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view contents);

}  // namespace tabhybrid
