#include "tabhybrid/tabular.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "tabhybrid/csv.h"

namespace tabhybrid {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> ParseNumber(std::string_view raw) {
  const std::string_view s = Trim(raw);
  if (s.empty()) return std::nullopt;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  double value = 0;
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

// Labels that conventionally denote the event class of a binary target.
bool LooksPositive(const std::string& label) {
  static const std::set<std::string> kPositive = {"1", "Left", "left", "Yes", "yes",
                                                  "YES", "True", "true", "TRUE"};
  return kPositive.count(label) > 0;
}

}  // namespace

std::string_view FeatureKindName(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kNumerical: return "numerical";
    case FeatureKind::kBinary: return "binary";
    case FeatureKind::kCategorical: return "categorical";
    case FeatureKind::kTarget: return "target";
  }
  return "numerical";
}

FeatureKind ParseFeatureKind(std::string_view name) {
  if (name == "numerical") return FeatureKind::kNumerical;
  if (name == "binary") return FeatureKind::kBinary;
  if (name == "categorical") return FeatureKind::kCategorical;
  if (name == "target") return FeatureKind::kTarget;
  throw Error(ErrorCode::kInvalidArgument, "unknown feature kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// FeatureSchema

FeatureSchema::FeatureSchema(std::vector<FeatureEntry> entries) : entries_(std::move(entries)) {
  std::size_t targets = 0;
  std::set<std::string> names;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!names.insert(e.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate feature name '" + e.name + "'");
    }
    std::set<std::string> levels(e.categories.begin(), e.categories.end());
    if (levels.size() != e.categories.size()) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate category in '" + e.name + "'");
    }
    const bool needs_levels =
        e.kind == FeatureKind::kBinary || e.kind == FeatureKind::kCategorical;
    if (needs_levels && e.categories.empty()) {
      throw Error(ErrorCode::kInvalidArgument, "feature '" + e.name + "' has no categories");
    }
    if (e.kind == FeatureKind::kNumerical && !e.categories.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "numerical feature '" + e.name + "' must not list categories");
    }
    if (e.kind == FeatureKind::kTarget) {
      ++targets;
      target_index_ = i;
      if (e.categories.size() > 2) {
        throw Error(ErrorCode::kInvalidArgument, "target must be binary");
      }
      if (!e.categories.empty() && !levels.count(e.positive_label)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "target positive label '" + e.positive_label + "' is not a category");
      }
    }
  }
  if (targets != 1) {
    throw Error(ErrorCode::kInvalidArgument, "schema must declare exactly one target");
  }
}

std::optional<std::size_t> FeatureSchema::IndexOf(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::size_t> FeatureSchema::FeatureIndices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i != target_index_) out.push_back(i);
  }
  return out;
}

nlohmann::json FeatureSchema::ToJson() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& e : entries_) {
    nlohmann::json f = {{"name", e.name},
                        {"kind", FeatureKindName(e.kind)},
                        {"categories", e.categories}};
    if (e.kind == FeatureKind::kTarget) f["positive"] = e.positive_label;
    features.push_back(std::move(f));
  }
  return {{"features", features}};
}

FeatureSchema FeatureSchema::FromJson(const nlohmann::json& j) {
  std::vector<FeatureEntry> entries;
  for (const auto& f : j.at("features")) {
    FeatureEntry e;
    e.name = f.at("name").get<std::string>();
    e.kind = ParseFeatureKind(f.at("kind").get<std::string>());
    if (f.contains("categories")) e.categories = f.at("categories").get<std::vector<std::string>>();
    if (f.contains("positive")) e.positive_label = f.at("positive").get<std::string>();
    if (e.kind == FeatureKind::kTarget && e.positive_label.empty() && !e.categories.empty()) {
      e.positive_label = e.categories.back();
    }
    entries.push_back(std::move(e));
  }
  return FeatureSchema(std::move(entries));
}

FeatureSchema FeatureSchema::ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open schema " + path.string());
  try {
    return FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, "malformed schema " + path.string() + ": " + e.what());
  }
}

void FeatureSchema::WriteFile(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << ToJson().dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// DataTable

std::vector<int> DataTable::Labels() const {
  const std::size_t t = schema.target_index();
  const auto& target = schema.target();
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (const auto& row : rows) {
    const auto& cell = row[t];
    if (const auto* text = std::get_if<std::string>(&cell)) {
      labels.push_back(*text == target.positive_label ? 1 : 0);
    } else {
      labels.push_back(std::get<double>(cell) != 0.0 ? 1 : 0);
    }
  }
  return labels;
}

DataTable DataTable::SelectRows(std::span<const std::size_t> indices) const {
  DataTable out;
  out.schema = schema;
  out.rows.reserve(indices.size());
  out.row_ids.reserve(indices.size());
  for (std::size_t i : indices) {
    out.rows.push_back(rows[i]);
    out.row_ids.push_back(row_ids.empty() ? i : row_ids[i]);
  }
  return out;
}

DataTable ParseCsvTable(std::string_view text, const FeatureSchema& schema,
                        const LoadOptions& options) {
  const csv::Document doc = csv::Parse(text);
  if (doc.header.empty()) throw Error(ErrorCode::kEmptyFile, "CSV has no header row");

  // Map schema entries to file columns.
  std::vector<std::size_t> source(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto it = std::find(doc.header.begin(), doc.header.end(), schema.entry(i).name);
    if (it == doc.header.end()) throw Error(ErrorCode::kMissingColumn, schema.entry(i).name);
    source[i] = static_cast<std::size_t>(it - doc.header.begin());
  }
  if (!options.ignore_extra_columns) {
    for (const auto& name : doc.header) {
      if (!schema.IndexOf(name)) {
        throw Error(ErrorCode::kSchemaMismatch, "column '" + name + "' is not in the schema");
      }
    }
  }

  std::vector<std::set<std::string>> levels(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    levels[i].insert(schema.entry(i).categories.begin(), schema.entry(i).categories.end());
  }

  DataTable table;
  table.schema = schema;
  table.rows.reserve(doc.rows.size());
  table.row_ids.reserve(doc.rows.size());
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& record = doc.rows[r];
    if (record.size() != doc.header.size()) {
      throw Error(ErrorCode::kUnparseableCell,
                  "row " + std::to_string(r) + " has " + std::to_string(record.size()) +
                      " fields, expected " + std::to_string(doc.header.size()));
    }
    std::vector<Cell> row;
    row.reserve(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
      const auto& entry = schema.entry(c);
      const std::string& raw = record[source[c]];
      const auto where = "(row " + std::to_string(r) + ", col " + std::to_string(c) + ", '" +
                         raw + "')";
      if (entry.kind == FeatureKind::kNumerical) {
        const auto value = ParseNumber(raw);
        if (!value) throw Error(ErrorCode::kUnparseableCell, where);
        row.emplace_back(*value);
        continue;
      }
      std::string value(Trim(raw));
      if (!levels[c].empty() && !levels[c].count(value)) {
        if (entry.kind == FeatureKind::kTarget) {
          throw Error(ErrorCode::kUnparseableCell, "unexpected target label " + where);
        }
        if (!options.allow_unknown) throw Error(ErrorCode::kUnknownCategory, where);
      }
      row.emplace_back(std::move(value));
    }
    table.rows.push_back(std::move(row));
    table.row_ids.push_back(r);
  }
  return table;
}

DataTable LoadCsv(const std::filesystem::path& path, const FeatureSchema& schema,
                  const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ParseCsvTable(text, schema, options);
}

FeatureSchema InferSchemaFromText(std::string_view text, const std::string& target_name,
                                  const std::vector<std::string>& exclude) {
  const csv::Document doc = csv::Parse(text);
  if (doc.header.empty()) throw Error(ErrorCode::kEmptyFile, "CSV has no header row");
  if (std::find(doc.header.begin(), doc.header.end(), target_name) == doc.header.end()) {
    throw Error(ErrorCode::kTargetNotFound, target_name);
  }
  std::vector<FeatureEntry> entries;
  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    const std::string& name = doc.header[c];
    if (std::find(exclude.begin(), exclude.end(), name) != exclude.end()) continue;
    bool all_numeric = true;
    std::set<std::string> distinct;
    for (const auto& record : doc.rows) {
      if (c >= record.size()) {
        throw Error(ErrorCode::kUnparseableCell, "short row while inferring '" + name + "'");
      }
      const std::string value(Trim(record[c]));
      if (all_numeric && !ParseNumber(value)) all_numeric = false;
      distinct.insert(value);
    }
    FeatureEntry e;
    e.name = name;
    if (name == target_name) {
      e.kind = FeatureKind::kTarget;
      if (distinct.size() > 2) {
        throw Error(ErrorCode::kInvalidArgument, "target '" + name + "' has more than 2 levels");
      }
      e.categories.assign(distinct.begin(), distinct.end());
      if (!e.categories.empty()) {
        e.positive_label = e.categories.back();
        for (const auto& level : e.categories) {
          if (LooksPositive(level)) e.positive_label = level;
        }
      }
    } else if (all_numeric && !doc.rows.empty()) {
      e.kind = FeatureKind::kNumerical;
    } else {
      e.kind = distinct.size() == 2 ? FeatureKind::kBinary : FeatureKind::kCategorical;
      e.categories.assign(distinct.begin(), distinct.end());
    }
    entries.push_back(std::move(e));
  }
  return FeatureSchema(std::move(entries));
}

FeatureSchema InferSchema(const std::filesystem::path& path, const std::string& target_name,
                          const std::vector<std::string>& exclude) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (text.empty()) throw Error(ErrorCode::kEmptyFile, path.string());
  return InferSchemaFromText(text, target_name, exclude);
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary(std::vector<Feature> features) : features_(std::move(features)) {
  BuildIndex();
}

void Vocabulary::BuildIndex() {
  index_.clear();
  index_.reserve(features_.size());
  for (const auto& f : features_) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < f.levels.size(); ++i) idx.emplace(f.levels[i], i);
    index_.push_back(std::move(idx));
  }
}

const Vocabulary::Feature* Vocabulary::Find(std::string_view name) const {
  for (const auto& f : features_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::optional<std::size_t> Vocabulary::FeaturePosition(std::string_view name) const {
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Vocabulary::Code(std::size_t feature, const std::string& value) const {
  const auto it = index_[feature].find(value);
  if (it == index_[feature].end()) return std::nullopt;
  return it->second;
}

nlohmann::json Vocabulary::ToJson() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : features_) out.push_back({{"name", f.name}, {"levels", f.levels}});
  return out;
}

Vocabulary Vocabulary::FromJson(const nlohmann::json& j) {
  std::vector<Feature> features;
  for (const auto& f : j) {
    features.push_back({f.at("name").get<std::string>(),
                        f.at("levels").get<std::vector<std::string>>()});
  }
  return Vocabulary(std::move(features));
}

std::uint64_t Vocabulary::Fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  for (const auto& f : features_) {
    mix(f.name);
    for (const auto& level : f.levels) mix(level);
  }
  return h;
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  if (features_.size() != other.features_.size()) return false;
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].name != other.features_[i].name ||
        features_[i].levels != other.features_[i].levels) {
      return false;
    }
  }
  return true;
}

Vocabulary FitVocabulary(const DataTable& table) {
  std::vector<Vocabulary::Feature> features;
  for (std::size_t c : table.schema.FeatureIndices()) {
    const auto& entry = table.schema.entry(c);
    if (entry.kind != FeatureKind::kBinary && entry.kind != FeatureKind::kCategorical) continue;
    std::set<std::string> levels;
    for (const auto& row : table.rows) levels.insert(std::get<std::string>(row[c]));
    features.push_back({entry.name, std::vector<std::string>(levels.begin(), levels.end())});
  }
  return Vocabulary(std::move(features));
}

// ---------------------------------------------------------------------------
// Encoders

std::string_view ColumnEncodingName(ColumnEncoding encoding) {
  switch (encoding) {
    case ColumnEncoding::kPassthrough: return "passthrough";
    case ColumnEncoding::kOnehotLevel: return "onehot_level";
    case ColumnEncoding::kOrdinal: return "ordinal";
    case ColumnEncoding::kEmbeddingDim: return "embedding_dim";
  }
  return "passthrough";
}

std::vector<std::string> EncodedMatrix::ColumnNames() const {
  std::vector<std::string> names;
  names.reserve(column_meta.size());
  for (const auto& meta : column_meta) {
    if (meta.encoding == ColumnEncoding::kOnehotLevel) {
      names.push_back(meta.source_feature + "=" + meta.detail);
    } else {
      names.push_back(meta.source_feature);
    }
  }
  return names;
}

EncodedMatrix EncodedMatrix::SelectRows(std::span<const std::size_t> indices) const {
  return {values.SelectRows(indices), column_meta};
}

namespace {

struct EncodingPlanItem {
  std::size_t table_column;
  FeatureKind kind;
  std::optional<std::size_t> vocab_feature;
};

std::vector<EncodingPlanItem> PlanColumns(const DataTable& table, const Vocabulary& vocab) {
  std::vector<EncodingPlanItem> plan;
  for (std::size_t c : table.schema.FeatureIndices()) {
    const auto& entry = table.schema.entry(c);
    EncodingPlanItem item{c, entry.kind, std::nullopt};
    if (entry.kind != FeatureKind::kNumerical) {
      item.vocab_feature = vocab.FeaturePosition(entry.name);
      if (!item.vocab_feature) {
        throw Error(ErrorCode::kSchemaMismatch, "no fitted vocabulary for '" + entry.name + "'");
      }
    }
    plan.push_back(item);
  }
  return plan;
}

std::optional<std::size_t> LookupCode(const Vocabulary& vocab, std::size_t feature,
                                      const Cell& cell, std::size_t row, std::size_t col,
                                      UnknownPolicy policy) {
  const auto& value = std::get<std::string>(cell);
  const auto code = vocab.Code(feature, value);
  if (!code && policy == UnknownPolicy::kError) {
    throw Error(ErrorCode::kUnknownCategory, "(row " + std::to_string(row) + ", col " +
                                                 std::to_string(col) + ", '" + value + "')");
  }
  return code;
}

}  // namespace

EncodedMatrix OneHotEncode(const DataTable& table, const Vocabulary& vocab, UnknownPolicy policy) {
  const auto plan = PlanColumns(table, vocab);
  EncodedMatrix out;
  std::vector<std::size_t> offsets;
  for (const auto& item : plan) {
    offsets.push_back(out.column_meta.size());
    const auto& name = table.schema.entry(item.table_column).name;
    if (item.kind == FeatureKind::kNumerical) {
      out.column_meta.push_back({name, ColumnEncoding::kPassthrough, ""});
    } else if (item.kind == FeatureKind::kBinary) {
      out.column_meta.push_back({name, ColumnEncoding::kOrdinal, "binary"});
    } else {
      for (const auto& level : vocab.features()[*item.vocab_feature].levels) {
        out.column_meta.push_back({name, ColumnEncoding::kOnehotLevel, level});
      }
    }
  }
  out.values = Matrix(table.n_rows(), out.column_meta.size());
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    auto dst = out.values.row(r);
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& item = plan[i];
      const Cell& cell = table.rows[r][item.table_column];
      if (item.kind == FeatureKind::kNumerical) {
        dst[offsets[i]] = std::get<double>(cell);
        continue;
      }
      const auto code =
          LookupCode(vocab, *item.vocab_feature, cell, r, item.table_column, policy);
      if (item.kind == FeatureKind::kBinary) {
        dst[offsets[i]] = code ? static_cast<double>(*code) : 0.0;
      } else if (code) {
        dst[offsets[i] + *code] = 1.0;
      }
    }
  }
  return out;
}

EncodedMatrix OrdinalEncode(const DataTable& table, const Vocabulary& vocab,
                            UnknownPolicy policy) {
  const auto plan = PlanColumns(table, vocab);
  EncodedMatrix out;
  for (const auto& item : plan) {
    const auto& name = table.schema.entry(item.table_column).name;
    if (item.kind == FeatureKind::kNumerical) {
      out.column_meta.push_back({name, ColumnEncoding::kPassthrough, ""});
    } else {
      const auto k = vocab.features()[*item.vocab_feature].levels.size();
      out.column_meta.push_back({name, ColumnEncoding::kOrdinal, std::to_string(k)});
    }
  }
  out.values = Matrix(table.n_rows(), plan.size());
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const auto& item = plan[i];
      const Cell& cell = table.rows[r][item.table_column];
      if (item.kind == FeatureKind::kNumerical) {
        out.values(r, i) = std::get<double>(cell);
        continue;
      }
      const auto code =
          LookupCode(vocab, *item.vocab_feature, cell, r, item.table_column, policy);
      const auto k = vocab.features()[*item.vocab_feature].levels.size();
      out.values(r, i) = static_cast<double>(code ? *code : k);
    }
  }
  return out;
}

std::vector<std::vector<Cell>> OrdinalDecode(const EncodedMatrix& matrix, const Vocabulary& vocab) {
  std::vector<std::vector<Cell>> rows(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    rows[r].reserve(matrix.cols());
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
      const auto& meta = matrix.column_meta[c];
      const double v = matrix.values(r, c);
      if (meta.encoding != ColumnEncoding::kOrdinal) {
        rows[r].emplace_back(v);
        continue;
      }
      const auto* feature = vocab.Find(meta.source_feature);
      if (feature == nullptr || v < 0 || v >= static_cast<double>(feature->levels.size()) ||
          v != std::floor(v)) {
        throw Error(ErrorCode::kCodeOutOfRange, meta.source_feature);
      }
      rows[r].emplace_back(feature->levels[static_cast<std::size_t>(v)]);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Scaling

nlohmann::json ScalerParams::ToJson() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : columns) {
    out.push_back({{"column", c.column},
                   {"mean", c.mean},
                   {"stddev", c.stddev},
                   {"constant", c.constant}});
  }
  return out;
}

ScalerParams ScalerParams::FromJson(const nlohmann::json& j) {
  ScalerParams params;
  for (const auto& c : j) {
    params.columns.push_back({c.at("column").get<std::size_t>(), c.at("mean").get<double>(),
                              c.at("stddev").get<double>(), c.at("constant").get<bool>()});
  }
  return params;
}

std::vector<std::size_t> NumericalColumns(const EncodedMatrix& matrix) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < matrix.column_meta.size(); ++c) {
    if (matrix.column_meta[c].encoding == ColumnEncoding::kPassthrough) out.push_back(c);
  }
  return out;
}

ScalerParams StandardizeFit(const EncodedMatrix& matrix, std::span<const std::size_t> columns) {
  if (matrix.rows() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "standardize_fit needs at least 2 rows");
  }
  ScalerParams params;
  const double n = static_cast<double>(matrix.rows());
  for (std::size_t c : columns) {
    double sum = 0;
    for (std::size_t r = 0; r < matrix.rows(); ++r) sum += matrix.values(r, c);
    const double mean = sum / n;
    double ss = 0;
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
      const double d = matrix.values(r, c) - mean;
      ss += d * d;
    }
    const double stddev = std::sqrt(ss / n);
    params.columns.push_back({c, mean, stddev, stddev == 0.0});
  }
  return params;
}

EncodedMatrix StandardizeApply(const EncodedMatrix& matrix, const ScalerParams& params) {
  EncodedMatrix out = matrix;
  for (const auto& col : params.columns) {
    if (col.column >= out.cols()) {
      throw Error(ErrorCode::kFeatureCountMismatch, "scaler column out of range");
    }
    for (std::size_t r = 0; r < out.rows(); ++r) {
      double& v = out.values(r, col.column);
      v = col.constant ? 0.0 : (v - col.mean) / col.stddev;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Folds

std::vector<std::size_t> FoldPlan::TrainIndices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::ValidationIndices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

FoldPlan StratifiedKFold(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "k must be at least 2");
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] != 0 ? positives : negatives).push_back(i);
  }
  if (positives.empty() || negatives.empty()) {
    throw Error(ErrorCode::kSingleClassInput, "stratified folds need both classes");
  }
  if (k > std::min(positives.size(), negatives.size())) {
    throw Error(ErrorCode::kKTooLarge, "k = " + std::to_string(k) + " exceeds minority count");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(positives.begin(), positives.end(), rng);
  std::shuffle(negatives.begin(), negatives.end(), rng);

  // Positives then negatives, dealt round-robin off one running counter.
  FoldPlan plan{k, std::vector<std::size_t>(labels.size()), seed};
  std::size_t slot = 0;
  for (std::size_t i : positives) plan.assignments[i] = slot++ % k;
  for (std::size_t i : negatives) plan.assignments[i] = slot++ % k;
  return plan;
}

// ---------------------------------------------------------------------------
// Summary

double PearsonCorrelation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kLengthMismatch, "pearson");
  const double n = static_cast<double>(x.size());
  if (x.empty()) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  // Constant columns are uncorrelated with everything.
  if (sxx == 0 || syy == 0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double SummaryReport::positive_fraction() const {
  const std::size_t n = n_positive + n_negative;
  return n == 0 ? 0.0 : static_cast<double>(n_positive) / static_cast<double>(n);
}

nlohmann::json SummaryReport::ToJson() const {
  nlohmann::json j;
  j["n_rows"] = n_rows;
  j["numerical"] = nlohmann::json::array();
  for (const auto& s : numerical) {
    j["numerical"].push_back({{"name", s.name},
                              {"min", s.min},
                              {"max", s.max},
                              {"mean", s.mean},
                              {"stddev", s.stddev},
                              {"q1", s.q1},
                              {"median", s.median},
                              {"q3", s.q3}});
  }
  j["categorical"] = nlohmann::json::array();
  for (const auto& c : categorical) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [level, count] : c.counts) counts[level] = count;
    j["categorical"].push_back({{"name", c.name}, {"counts", counts}});
  }
  j["target"] = {{"positive_label", positive_label},
                 {"negative_label", negative_label},
                 {"n_positive", n_positive},
                 {"n_negative", n_negative},
                 {"positive_fraction", positive_fraction()}};
  nlohmann::json corr = nlohmann::json::array();
  for (std::size_t r = 0; r < correlation.rows(); ++r) {
    const auto row = correlation.row(r);
    corr.push_back(std::vector<double>(row.begin(), row.end()));
  }
  j["correlation"] = {{"names", correlation_names}, {"matrix", corr}};
  return j;
}

namespace {

double Quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

SummaryReport Summarize(const DataTable& table) {
  SummaryReport report;
  report.n_rows = table.n_rows();
  std::vector<std::vector<double>> numeric_columns;
  for (std::size_t c : table.schema.FeatureIndices()) {
    const auto& entry = table.schema.entry(c);
    if (entry.kind == FeatureKind::kNumerical) {
      std::vector<double> values;
      values.reserve(table.n_rows());
      for (const auto& row : table.rows) values.push_back(std::get<double>(row[c]));
      NumericSummary s;
      s.name = entry.name;
      if (!values.empty()) {
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        const double n = static_cast<double>(values.size());
        s.min = sorted.front();
        s.max = sorted.back();
        s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double ss = 0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / n);
        s.q1 = Quantile(sorted, 0.25);
        s.median = Quantile(sorted, 0.5);
        s.q3 = Quantile(sorted, 0.75);
      }
      report.numerical.push_back(s);
      report.correlation_names.push_back(entry.name);
      numeric_columns.push_back(std::move(values));
    } else {
      std::map<std::string, std::size_t> counts;
      for (const auto& level : entry.categories) counts[level] = 0;
      for (const auto& row : table.rows) ++counts[std::get<std::string>(row[c])];
      report.categorical.push_back({entry.name, {counts.begin(), counts.end()}});
    }
  }

  const auto& target = table.schema.target();
  report.positive_label = target.positive_label;
  for (const auto& level : target.categories) {
    if (level != target.positive_label) report.negative_label = level;
  }
  for (int y : table.Labels()) (y ? report.n_positive : report.n_negative)++;

  const std::size_t p = numeric_columns.size();
  report.correlation = Matrix(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    report.correlation(i, i) = 1.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      const double r = PearsonCorrelation(numeric_columns[i], numeric_columns[j]);
      report.correlation(i, j) = r;
      report.correlation(j, i) = r;
    }
  }
  return report;
}

}  // namespace tabhybrid
