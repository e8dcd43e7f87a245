#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabhybrid/gbdt.h"
#include "tabhybrid/saint.h"
#include "tabhybrid/tabular.h"

namespace tabhybrid::pipeline {

enum class PipelineKind {
  kSaint,
  kGbdtDepthwise,
  kGbdtLeafwise,
  kHybridDepthwise,
  kHybridLeafwise,
};

std::string_view PipelineKindName(PipelineKind kind);
PipelineKind ParsePipelineKind(std::string_view name);
bool UsesSaint(PipelineKind kind);
bool UsesTrees(PipelineKind kind);

enum class HybridFeatures { kOrdinalPlusEmbedding, kEmbeddingOnly };

struct PipelineSpec {
  PipelineKind kind = PipelineKind::kGbdtDepthwise;
  std::optional<saint::SaintConfig> saint_config;
  std::optional<gbdt::GbdtConfig> gbdt_config;
  HybridFeatures hybrid_features = HybridFeatures::kOrdinalPlusEmbedding;
  bool standardize_for_trees = false;
  std::uint64_t seed = 0;

  // Throws kConfig when a required component config is absent.
  void Validate() const;
  nlohmann::json ToJson() const;
  static PipelineSpec FromJson(const nlohmann::json& j);
};

// Named hyperparameter lists. Keys are dotted paths into PipelineSpec JSON,
// e.g. "gbdt.max_depth" or "saint.embed_dim".
struct ParamGrid {
  struct Axis {
    std::string name;
    std::vector<nlohmann::json> values;
  };
  std::vector<Axis> axes;

  // Cartesian product size; an empty grid has one (empty) candidate.
  std::size_t size() const;
  // Candidate i of the product, last axis varying fastest.
  nlohmann::json Candidate(std::size_t index) const;
  nlohmann::json ToJson() const;
  static ParamGrid FromJson(const nlohmann::json& j);
};

PipelineSpec ApplyParams(const PipelineSpec& spec, const nlohmann::json& params);

// Called once per fitted preprocessing or model stage with the row ids of
// the rows it saw.
using FitAudit =
    std::function<void(const std::string& stage, const std::vector<std::size_t>& row_ids)>;

struct FittedPipeline {
  PipelineSpec spec;
  FeatureSchema schema;
  Vocabulary vocabulary;
  ScalerParams scaler;
  std::optional<saint::SaintModel> saint;
  std::optional<gbdt::GbdtModel> gbdt;
  std::vector<ColumnMeta> tree_columns;  // layout of the tree input matrix
  double fit_seconds = 0.0;

  // Compares every piece of fitted state; fit time is ignored.
  bool SameFittedState(const FittedPipeline& other) const;
};

FittedPipeline FitPipeline(const PipelineSpec& spec, const DataTable& train,
                           const FitAudit& audit = {});

// Probabilities of the positive class.
std::vector<double> PredictPipeline(const FittedPipeline& fitted, const DataTable& data,
                                    UnknownPolicy policy = UnknownPolicy::kError);
std::vector<double> PredictMargins(const FittedPipeline& fitted, const DataTable& data,
                                   UnknownPolicy policy = UnknownPolicy::kError);

// Encoded, scaled input fed to SAINT (ordinal layout).
EncodedMatrix SaintInput(const FittedPipeline& fitted, const DataTable& data,
                         UnknownPolicy policy = UnknownPolicy::kError);
// Matrix fed to the tree model, with its column layout.
EncodedMatrix TreeInput(const FittedPipeline& fitted, const DataTable& data,
                        UnknownPolicy policy = UnknownPolicy::kError);

struct NamedPreset {
  std::string name;
  PipelineSpec spec;
  ParamGrid grid;  // empty when the PipelineSpec is used as is
};

// saint, xgboost-grid, lightgbm-grid, saint-xgboost, saint-lightgbm.
std::vector<NamedPreset> BuiltinPresets();
std::optional<NamedPreset> FindPreset(std::string_view name);

// Fingerprint of a table's schema and cell contents.
std::uint64_t DataFingerprint(const DataTable& table);

// Directory with manifest.json plus one JSON file per fitted component.
void WriteBundle(const std::filesystem::path& dir, const FittedPipeline& fitted,
                 std::uint64_t data_fingerprint);
FittedPipeline ReadBundle(const std::filesystem::path& dir);

}  // namespace tabhybrid::pipeline
