#include "tabhybrid/pipeline.h"

#include <chrono>

namespace tabhybrid::pipeline {

namespace {

constexpr std::uint64_t kSaintStream = 0x5a17;
constexpr std::uint64_t kTreeStream = 0x7ee5;

struct KindName {
  PipelineKind kind;
  std::string_view name;
};

constexpr KindName kKindNames[] = {
    {PipelineKind::kSaint, "saint"},
    {PipelineKind::kGbdtDepthwise, "gbdt_depthwise"},
    {PipelineKind::kGbdtLeafwise, "gbdt_leafwise"},
    {PipelineKind::kHybridDepthwise, "hybrid_depthwise"},
    {PipelineKind::kHybridLeafwise, "hybrid_leafwise"},
};

void Audit(const FitAudit& audit, const std::string& stage, const DataTable& table) {
  if (audit) audit(stage, table.row_ids);
}

gbdt::Growth GrowthFor(PipelineKind kind) {
  return kind == PipelineKind::kGbdtLeafwise || kind == PipelineKind::kHybridLeafwise
             ? gbdt::Growth::kLeafWise
             : gbdt::Growth::kDepthWise;
}

void CheckSchema(const FittedPipeline& fitted, const DataTable& data) {
  if (!(data.schema == fitted.schema)) {
    throw Error(ErrorCode::kSchemaMismatch, "data schema differs from the fitted schema");
  }
}

std::vector<ColumnMeta> EmbeddingColumns(std::size_t width) {
  std::vector<ColumnMeta> out;
  for (std::size_t i = 0; i < width; ++i) {
    out.push_back({"saint_emb_" + std::to_string(i), ColumnEncoding::kEmbeddingDim,
                   std::to_string(i)});
  }
  return out;
}

// Assembles the hybrid tree input from the scaled ordinal matrix.
EncodedMatrix HybridTreeInput(const PipelineSpec& spec, const saint::SaintModel& model,
                              const EncodedMatrix& ordinal) {
  EncodedMatrix emb;
  emb.values = saint::ExtractEmbeddings(model, ordinal.values);
  emb.column_meta = EmbeddingColumns(emb.values.cols());
  if (spec.hybrid_features == HybridFeatures::kEmbeddingOnly) return emb;
  EncodedMatrix out;
  out.values = ordinal.values.HStack(emb.values);
  out.column_meta = ordinal.column_meta;
  out.column_meta.insert(out.column_meta.end(), emb.column_meta.begin(), emb.column_meta.end());
  return out;
}

nlohmann::json* FindPath(nlohmann::json& root, const std::string& dotted) {
  nlohmann::json* node = &root;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &(*node)[key];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

}  // namespace

std::string_view PipelineKindName(PipelineKind kind) {
  for (const auto& k : kKindNames) {
    if (k.kind == kind) return k.name;
  }
  return "unknown";
}

PipelineKind ParsePipelineKind(std::string_view name) {
  for (const auto& k : kKindNames) {
    if (k.name == name) return k.kind;
  }
  throw Error(ErrorCode::kConfig, "unknown pipeline kind '" + std::string(name) + "'");
}

bool UsesSaint(PipelineKind kind) {
  return kind == PipelineKind::kSaint || kind == PipelineKind::kHybridDepthwise ||
         kind == PipelineKind::kHybridLeafwise;
}

bool UsesTrees(PipelineKind kind) { return kind != PipelineKind::kSaint; }

void PipelineSpec::Validate() const {
  if (UsesSaint(kind) && !saint_config) {
    throw Error(ErrorCode::kConfig,
                std::string(PipelineKindName(kind)) + " pipeline needs a saint config");
  }
  if (UsesTrees(kind) && !gbdt_config) {
    throw Error(ErrorCode::kConfig,
                std::string(PipelineKindName(kind)) + " pipeline needs a gbdt config");
  }
  try {
    if (saint_config) saint_config->Validate();
    if (gbdt_config) gbdt_config->Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
}

nlohmann::json PipelineSpec::ToJson() const {
  nlohmann::json j = {
      {"kind", PipelineKindName(kind)},
      {"hybrid_features", hybrid_features == HybridFeatures::kOrdinalPlusEmbedding
                              ? "ordinal_plus_embedding"
                              : "embedding_only"},
      {"standardize_for_trees", standardize_for_trees},
      {"seed", seed}};
  if (saint_config) j["saint"] = saint_config->ToJson();
  if (gbdt_config) j["gbdt"] = gbdt_config->ToJson();
  return j;
}

PipelineSpec PipelineSpec::FromJson(const nlohmann::json& j) {
  PipelineSpec s;
  try {
    s.kind = ParsePipelineKind(j.at("kind").get<std::string>());
    const std::string hf = j.value("hybrid_features", std::string("ordinal_plus_embedding"));
    if (hf == "ordinal_plus_embedding") {
      s.hybrid_features = HybridFeatures::kOrdinalPlusEmbedding;
    } else if (hf == "embedding_only") {
      s.hybrid_features = HybridFeatures::kEmbeddingOnly;
    } else {
      throw Error(ErrorCode::kConfig, "unknown hybrid_features '" + hf + "'");
    }
    s.standardize_for_trees = j.value("standardize_for_trees", false);
    s.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("saint")) s.saint_config = saint::SaintConfig::FromJson(j.at("saint"));
    if (j.contains("gbdt")) s.gbdt_config = gbdt::GbdtConfig::FromJson(j.at("gbdt"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("pipeline spec: ") + e.what());
  }
  return s;
}

// ---------------------------------------------------------------------------

std::size_t ParamGrid::size() const {
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.values.size();
  return n;
}

nlohmann::json ParamGrid::Candidate(std::size_t index) const {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t a = axes.size(); a-- > 0;) {
    const auto& axis = axes[a];
    out[axis.name] = axis.values[index % axis.values.size()];
    index /= axis.values.size();
  }
  return out;
}

nlohmann::json ParamGrid::ToJson() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& axis : axes) j.push_back({{"name", axis.name}, {"values", axis.values}});
  return j;
}

ParamGrid ParamGrid::FromJson(const nlohmann::json& j) {
  ParamGrid grid;
  if (j.is_object()) {
    // {"gbdt.max_depth": [2, 3], ...} in key order
    for (const auto& [name, values] : j.items()) {
      grid.axes.push_back({name, values.get<std::vector<nlohmann::json>>()});
    }
  } else {
    for (const auto& axis : j) {
      grid.axes.push_back(
          {axis.at("name").get<std::string>(), axis.at("values").get<std::vector<nlohmann::json>>()});
    }
  }
  for (const auto& axis : grid.axes) {
    if (axis.values.empty()) throw Error(ErrorCode::kConfig, "grid axis '" + axis.name + "' is empty");
  }
  return grid;
}

PipelineSpec ApplyParams(const PipelineSpec& spec, const nlohmann::json& params) {
  nlohmann::json j = spec.ToJson();
  for (const auto& [name, value] : params.items()) {
    nlohmann::json* slot = FindPath(j, name);
    if (slot == nullptr) throw Error(ErrorCode::kConfig, "unknown parameter '" + name + "'");
    *slot = value;
  }
  return PipelineSpec::FromJson(j);
}

// ---------------------------------------------------------------------------

bool FittedPipeline::SameFittedState(const FittedPipeline& other) const {
  if (!(vocabulary == other.vocabulary) || !(scaler == other.scaler)) return false;
  if (!(schema == other.schema) || tree_columns != other.tree_columns) return false;
  if (saint.has_value() != other.saint.has_value()) return false;
  if (saint && saint->ToJson() != other.saint->ToJson()) return false;
  if (gbdt.has_value() != other.gbdt.has_value()) return false;
  if (gbdt && !(*gbdt == *other.gbdt)) return false;
  return true;
}

FittedPipeline FitPipeline(const PipelineSpec& spec, const DataTable& train,
                           const FitAudit& audit) {
  spec.Validate();
  const auto start = std::chrono::steady_clock::now();
  FittedPipeline fitted;
  fitted.spec = spec;
  fitted.schema = train.schema;
  const std::vector<int> labels = train.Labels();

  fitted.vocabulary = FitVocabulary(train);
  Audit(audit, "vocabulary", train);

  if (UsesSaint(spec.kind)) {
    const EncodedMatrix ordinal = OrdinalEncode(train, fitted.vocabulary);
    fitted.scaler = StandardizeFit(ordinal, NumericalColumns(ordinal));
    Audit(audit, "scaler", train);
    const EncodedMatrix scaled = StandardizeApply(ordinal, fitted.scaler);
    saint::SaintConfig config = *spec.saint_config;
    config.seed = DeriveSeed(spec.seed, {kSaintStream});
    saint::TrainResult trained = saint::Train(scaled, labels, config);
    trained.model.vocabulary_fingerprint = fitted.vocabulary.Fingerprint();
    fitted.saint = std::move(trained.model);
    Audit(audit, "saint", train);
    if (UsesTrees(spec.kind)) {
      const EncodedMatrix tree_input = HybridTreeInput(spec, *fitted.saint, scaled);
      fitted.tree_columns = tree_input.column_meta;
      gbdt::GbdtConfig gconfig = *spec.gbdt_config;
      gconfig.growth = GrowthFor(spec.kind);
      gconfig.seed = DeriveSeed(spec.seed, {kTreeStream});
      fitted.gbdt = gbdt::Fit(tree_input.values, labels, gconfig);
      Audit(audit, "gbdt", train);
    }
  } else {
    EncodedMatrix onehot = OneHotEncode(train, fitted.vocabulary);
    if (spec.standardize_for_trees) {
      fitted.scaler = StandardizeFit(onehot, NumericalColumns(onehot));
      Audit(audit, "scaler", train);
      onehot = StandardizeApply(onehot, fitted.scaler);
    }
    fitted.tree_columns = onehot.column_meta;
    gbdt::GbdtConfig gconfig = *spec.gbdt_config;
    gconfig.growth = GrowthFor(spec.kind);
    gconfig.seed = DeriveSeed(spec.seed, {kTreeStream});
    fitted.gbdt = gbdt::Fit(onehot.values, labels, gconfig);
    Audit(audit, "gbdt", train);
  }
  fitted.fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return fitted;
}

EncodedMatrix SaintInput(const FittedPipeline& fitted, const DataTable& data,
                         UnknownPolicy policy) {
  CheckSchema(fitted, data);
  return StandardizeApply(OrdinalEncode(data, fitted.vocabulary, policy), fitted.scaler);
}

EncodedMatrix TreeInput(const FittedPipeline& fitted, const DataTable& data,
                        UnknownPolicy policy) {
  CheckSchema(fitted, data);
  if (!fitted.gbdt) throw Error(ErrorCode::kInvalidArgument, "pipeline has no tree model");
  if (fitted.saint) {
    return HybridTreeInput(fitted.spec, *fitted.saint, SaintInput(fitted, data, policy));
  }
  EncodedMatrix onehot = OneHotEncode(data, fitted.vocabulary, policy);
  if (fitted.spec.standardize_for_trees) onehot = StandardizeApply(onehot, fitted.scaler);
  return onehot;
}

std::vector<double> PredictMargins(const FittedPipeline& fitted, const DataTable& data,
                                   UnknownPolicy policy) {
  if (fitted.gbdt) return gbdt::PredictMargin(*fitted.gbdt, TreeInput(fitted, data, policy).values);
  return saint::PredictLogits(*fitted.saint, SaintInput(fitted, data, policy).values);
}

std::vector<double> PredictPipeline(const FittedPipeline& fitted, const DataTable& data,
                                    UnknownPolicy policy) {
  std::vector<double> out = PredictMargins(fitted, data, policy);
  for (double& v : out) v = Sigmoid(v);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<NamedPreset> BuiltinPresets() {
  using nlohmann::json;
  saint::SaintConfig saint_best;
  saint_best.embed_dim = 16;
  saint_best.hidden_dim = 64;
  saint_best.n_heads = 2;
  saint_best.n_layers = 2;
  saint_best.dropout = 0.1;
  saint_best.learning_rate = 0.001;
  saint_best.batch_size = 100;
  saint_best.n_epochs = 1;

  gbdt::GbdtConfig xgb;
  xgb.growth = gbdt::Growth::kDepthWise;
  xgb.n_estimators = 300;
  xgb.max_depth = 3;
  xgb.learning_rate = 0.05;
  xgb.subsample = 0.9;
  xgb.colsample = 0.8;
  xgb.min_child_weight = 3;
  xgb.reg_lambda = 1;
  xgb.gamma = 0;

  gbdt::GbdtConfig lgb;
  lgb.growth = gbdt::Growth::kLeafWise;
  lgb.learning_rate = 0.05;
  lgb.num_leaves = 10;
  lgb.n_estimators = 300;
  lgb.subsample = 0.8;
  lgb.colsample = 0.8;
  lgb.reg_alpha = 0.1;
  lgb.reg_lambda = 5;
  lgb.min_child_weight = 1e-3;

  ParamGrid xgb_grid{{
      {"gbdt.n_estimators", {300, 400, 500}},
      {"gbdt.max_depth", {2, 3, 4}},
      {"gbdt.learning_rate", {0.05, 0.01}},
      {"gbdt.subsample", {0.9}},
      {"gbdt.colsample", {0.8, 1.0}},
      {"gbdt.min_child_weight", {3, 4}},
      {"gbdt.reg_lambda", {1, 2}},
      {"gbdt.gamma", {0}},
  }};
  ParamGrid lgb_grid{{
      {"gbdt.learning_rate", {0.1, 0.05}},
      {"gbdt.num_leaves", {5, 10, 20}},
      {"gbdt.n_estimators", {200, 300, 400}},
      {"gbdt.subsample", {0.8}},
      {"gbdt.colsample", {0.8}},
      {"gbdt.reg_alpha", {0.1}},
      {"gbdt.reg_lambda", {5}},
  }};

  auto make = [](PipelineKind kind, std::optional<saint::SaintConfig> s,
                 std::optional<gbdt::GbdtConfig> g) {
    PipelineSpec spec;
    spec.kind = kind;
    spec.saint_config = s;
    spec.gbdt_config = g;
    return spec;
  };
  return {
      {"saint", make(PipelineKind::kSaint, saint_best, std::nullopt), {}},
      {"xgboost-grid", make(PipelineKind::kGbdtDepthwise, std::nullopt, xgb), xgb_grid},
      {"lightgbm-grid", make(PipelineKind::kGbdtLeafwise, std::nullopt, lgb), lgb_grid},
      {"saint-xgboost", make(PipelineKind::kHybridDepthwise, saint_best, xgb), xgb_grid},
      {"saint-lightgbm", make(PipelineKind::kHybridLeafwise, saint_best, lgb), lgb_grid},
  };
}

std::optional<NamedPreset> FindPreset(std::string_view name) {
  for (auto& p : BuiltinPresets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

std::uint64_t DataFingerprint(const DataTable& table) {
  std::uint64_t h = Fnv1a64(table.schema.ToJson().dump());
  for (const auto& row : table.rows) {
    for (const auto& cell : row) {
      if (const auto* d = std::get_if<double>(&cell)) {
        h = Fnv1a64(FormatDouble(*d), h);
      } else {
        h = Fnv1a64(std::get<std::string>(cell), h);
      }
      h = Fnv1a64(",", h);
    }
    h = Fnv1a64("\n", h);
  }
  return h;
}

void WriteBundle(const std::filesystem::path& dir, const FittedPipeline& fitted,
                 std::uint64_t data_fingerprint) {
  nlohmann::json columns = nlohmann::json::array();
  for (const auto& c : fitted.tree_columns) {
    columns.push_back({{"source", c.source_feature},
                       {"encoding", ColumnEncodingName(c.encoding)},
                       {"detail", c.detail}});
  }
  nlohmann::json manifest = {
      {"format", "tabhybrid.bundle.v1"},
      {"spec", fitted.spec.ToJson()},
      {"saint_seed", DeriveSeed(fitted.spec.seed, {kSaintStream})},
      {"gbdt_seed", DeriveSeed(fitted.spec.seed, {kTreeStream})},
      {"fit_seconds", fitted.fit_seconds},
      {"data_fingerprint", HexDigest(data_fingerprint)},
      {"tree_columns", columns},
      {"components", nlohmann::json::array()}};
  WriteTextFile(dir / "schema.json", fitted.schema.ToJson().dump(2) + "\n");
  WriteTextFile(dir / "vocabulary.json", fitted.vocabulary.ToJson().dump(2) + "\n");
  WriteTextFile(dir / "scaler.json", fitted.scaler.ToJson().dump(2) + "\n");
  if (fitted.saint) {
    WriteTextFile(dir / "saint.json", fitted.saint->ToJson().dump() + "\n");
    manifest["components"].push_back("saint");
  }
  if (fitted.gbdt) {
    WriteTextFile(dir / "gbdt.json", fitted.gbdt->ToJson().dump() + "\n");
    manifest["components"].push_back("gbdt");
  }
  WriteTextFile(dir / "manifest.json", manifest.dump(2) + "\n");
}

FittedPipeline ReadBundle(const std::filesystem::path& dir) {
  auto read_json = [&](const char* name) {
    try {
      return nlohmann::json::parse(ReadTextFile(dir / name));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kIo, std::string(name) + ": " + e.what());
    }
  };
  const nlohmann::json manifest = read_json("manifest.json");
  FittedPipeline fitted;
  fitted.spec = PipelineSpec::FromJson(manifest.at("spec"));
  fitted.fit_seconds = manifest.value("fit_seconds", 0.0);
  fitted.schema = FeatureSchema::FromJson(read_json("schema.json"));
  fitted.vocabulary = Vocabulary::FromJson(read_json("vocabulary.json"));
  fitted.scaler = ScalerParams::FromJson(read_json("scaler.json"));
  for (const auto& c : manifest.at("tree_columns")) {
    ColumnMeta meta;
    meta.source_feature = c.at("source").get<std::string>();
    const std::string enc = c.at("encoding").get<std::string>();
    for (auto e : {ColumnEncoding::kPassthrough, ColumnEncoding::kOnehotLevel,
                   ColumnEncoding::kOrdinal, ColumnEncoding::kEmbeddingDim}) {
      if (ColumnEncodingName(e) == enc) meta.encoding = e;
    }
    meta.detail = c.at("detail").get<std::string>();
    fitted.tree_columns.push_back(meta);
  }
  for (const auto& component : manifest.at("components")) {
    if (component == "saint") fitted.saint = saint::SaintModel::FromJson(read_json("saint.json"));
    if (component == "gbdt") fitted.gbdt = gbdt::GbdtModel::FromJson(read_json("gbdt.json"));
  }
  return fitted;
}

}  // namespace tabhybrid::pipeline
