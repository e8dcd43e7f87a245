#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"
#include "tabhybrid/common.h"

namespace tabhybrid {

enum class FeatureKind { kNumerical, kBinary, kCategorical, kTarget };

std::string_view FeatureKindName(FeatureKind kind);
FeatureKind ParseFeatureKind(std::string_view name);

struct FeatureEntry {
  std::string name;
  FeatureKind kind = FeatureKind::kNumerical;
  // Level vocabulary for binary and categorical features. The target carries
  // its two class labels here as well.
  std::vector<std::string> categories;
  // Target only: which label counts as the positive class (encoded as 1).
  std::string positive_label;

  bool operator==(const FeatureEntry&) const = default;
};

class FeatureSchema {
 public:
  FeatureSchema() = default;
  // Throws kInvalidArgument when an invariant is violated.
  explicit FeatureSchema(std::vector<FeatureEntry> entries);

  const std::vector<FeatureEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const FeatureEntry& entry(std::size_t i) const { return entries_[i]; }
  std::size_t target_index() const { return target_index_; }
  const FeatureEntry& target() const { return entries_[target_index_]; }
  std::optional<std::size_t> IndexOf(std::string_view name) const;
  // Entry indices of every non-target column, in schema order.
  std::vector<std::size_t> FeatureIndices() const;

  nlohmann::json ToJson() const;
  static FeatureSchema FromJson(const nlohmann::json& j);
  static FeatureSchema ReadFile(const std::filesystem::path& path);
  void WriteFile(const std::filesystem::path& path) const;

  bool operator==(const FeatureSchema& other) const { return entries_ == other.entries_; }

 private:
  std::vector<FeatureEntry> entries_;
  std::size_t target_index_ = 0;
};

using Cell = std::variant<double, std::string>;

struct DataTable {
  FeatureSchema schema;
  std::vector<std::vector<Cell>> rows;
  // Position of each row in the file it was loaded from. Survives row
  // selection so fitted state can be audited against its source rows.
  std::vector<std::size_t> row_ids;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return schema.size(); }

  // 0/1 target labels.
  std::vector<int> Labels() const;
  DataTable SelectRows(std::span<const std::size_t> indices) const;
};

struct LoadOptions {
  // Accept categorical values outside the schema vocabulary.
  bool allow_unknown = false;
  // Drop header columns the schema does not declare instead of failing.
  bool ignore_extra_columns = false;
};

DataTable LoadCsv(const std::filesystem::path& path, const FeatureSchema& schema,
                  const LoadOptions& options = {});
DataTable ParseCsvTable(std::string_view text, const FeatureSchema& schema,
                        const LoadOptions& options = {});

FeatureSchema InferSchema(const std::filesystem::path& path, const std::string& target_name,
                          const std::vector<std::string>& exclude = {});
FeatureSchema InferSchemaFromText(std::string_view text, const std::string& target_name,
                                  const std::vector<std::string>& exclude = {});

// Fitted level lists for every binary/categorical feature, sorted
// lexicographically.
class Vocabulary {
 public:
  struct Feature {
    std::string name;
    std::vector<std::string> levels;
  };

  Vocabulary() = default;
  explicit Vocabulary(std::vector<Feature> features);

  const std::vector<Feature>& features() const { return features_; }
  const Feature* Find(std::string_view name) const;
  std::optional<std::size_t> Code(std::size_t feature, const std::string& value) const;
  std::optional<std::size_t> FeaturePosition(std::string_view name) const;

  nlohmann::json ToJson() const;
  static Vocabulary FromJson(const nlohmann::json& j);
  // Order-sensitive FNV-1a over names and levels; used for model
  // compatibility checks.
  std::uint64_t Fingerprint() const;

  bool operator==(const Vocabulary& other) const;

 private:
  void BuildIndex();

  std::vector<Feature> features_;
  std::vector<std::unordered_map<std::string, std::size_t>> index_;
};

Vocabulary FitVocabulary(const DataTable& table);

enum class UnknownPolicy { kError, kAllow };

enum class ColumnEncoding { kPassthrough, kOnehotLevel, kOrdinal, kEmbeddingDim };

std::string_view ColumnEncodingName(ColumnEncoding encoding);

struct ColumnMeta {
  std::string source_feature;
  ColumnEncoding encoding = ColumnEncoding::kPassthrough;
  std::string detail;

  bool operator==(const ColumnMeta&) const = default;
};

struct EncodedMatrix {
  Matrix values;
  std::vector<ColumnMeta> column_meta;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  std::vector<std::string> ColumnNames() const;
  EncodedMatrix SelectRows(std::span<const std::size_t> indices) const;
};

// Numerical features pass through, binary features become one {0,1} column,
// and a categorical feature with k levels expands to k indicator columns.
// Under kAllow an unseen level produces an all-zeros group.
EncodedMatrix OneHotEncode(const DataTable& table, const Vocabulary& vocab,
                           UnknownPolicy policy = UnknownPolicy::kError);

// One column per feature; binary and categorical cells become their 0-based
// level index. Under kAllow an unseen level maps to k.
EncodedMatrix OrdinalEncode(const DataTable& table, const Vocabulary& vocab,
                            UnknownPolicy policy = UnknownPolicy::kError);

// Inverse of OrdinalEncode for in-vocabulary codes.
std::vector<std::vector<Cell>> OrdinalDecode(const EncodedMatrix& matrix, const Vocabulary& vocab);

struct ColumnScale {
  std::size_t column = 0;
  double mean = 0.0;
  double stddev = 0.0;
  bool constant = false;

  bool operator==(const ColumnScale&) const = default;
};

struct ScalerParams {
  std::vector<ColumnScale> columns;

  nlohmann::json ToJson() const;
  static ScalerParams FromJson(const nlohmann::json& j);
  bool operator==(const ScalerParams&) const = default;
};

// Indices of the passthrough (numerical) columns of an encoded matrix.
std::vector<std::size_t> NumericalColumns(const EncodedMatrix& matrix);

// Population mean and standard deviation over the rows provided.
ScalerParams StandardizeFit(const EncodedMatrix& matrix, std::span<const std::size_t> columns);
EncodedMatrix StandardizeApply(const EncodedMatrix& matrix, const ScalerParams& params);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  std::uint64_t seed = 0;

  std::vector<std::size_t> TrainIndices(std::size_t fold) const;
  std::vector<std::size_t> ValidationIndices(std::size_t fold) const;
};

FoldPlan StratifiedKFold(std::span<const int> labels, std::size_t k, std::uint64_t seed);

struct NumericSummary {
  std::string name;
  double min = 0, max = 0, mean = 0, stddev = 0, q1 = 0, median = 0, q3 = 0;
};

struct LevelCounts {
  std::string name;
  std::vector<std::pair<std::string, std::size_t>> counts;
};

struct SummaryReport {
  std::size_t n_rows = 0;
  std::vector<NumericSummary> numerical;
  std::vector<LevelCounts> categorical;
  std::string positive_label;
  std::string negative_label;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::vector<std::string> correlation_names;
  Matrix correlation;

  double positive_fraction() const;
  nlohmann::json ToJson() const;
};

SummaryReport Summarize(const DataTable& table);

double PearsonCorrelation(std::span<const double> x, std::span<const double> y);

}  // namespace tabhybrid
