#include "tabhybrid/pipeline.h"

#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "synthetic.h"

namespace tabhybrid::pipeline {
namespace {

saint::SaintConfig TinySaint(std::size_t dim = 8) {
  saint::SaintConfig c;
  c.embed_dim = dim;
  c.hidden_dim = 16;
  c.n_heads = 2;
  c.n_layers = 1;
  c.batch_size = 32;
  c.n_epochs = 1;
  return c;
}

gbdt::GbdtConfig TinyTrees() {
  gbdt::GbdtConfig c;
  c.n_estimators = 10;
  c.max_depth = 3;
  c.num_leaves = 6;
  c.learning_rate = 0.3;
  c.subsample = 0.8;
  c.colsample = 0.8;
  return c;
}

PipelineSpec Spec(PipelineKind kind, std::uint64_t seed = 11) {
  PipelineSpec spec;
  spec.kind = kind;
  if (UsesSaint(kind)) spec.saint_config = TinySaint();
  if (UsesTrees(kind)) spec.gbdt_config = TinyTrees();
  spec.seed = seed;
  return spec;
}

constexpr PipelineKind kAllKinds[] = {PipelineKind::kSaint, PipelineKind::kGbdtDepthwise,
                                      PipelineKind::kGbdtLeafwise, PipelineKind::kHybridDepthwise,
                                      PipelineKind::kHybridLeafwise};

TEST(PipelineSpecTest, KindNamesRoundTrip) {
  for (auto kind : kAllKinds) EXPECT_EQ(ParsePipelineKind(PipelineKindName(kind)), kind);
  EXPECT_THROW(ParsePipelineKind("forest"), Error);
}

TEST(PipelineSpecTest, MissingComponentConfigIsRejected) {
  PipelineSpec spec;
  spec.kind = PipelineKind::kHybridDepthwise;
  spec.gbdt_config = TinyTrees();
  try {
    spec.Validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
  spec.kind = PipelineKind::kGbdtLeafwise;
  EXPECT_NO_THROW(spec.Validate());
}

TEST(PipelineSpecTest, JsonRoundTrip) {
  PipelineSpec spec = Spec(PipelineKind::kHybridLeafwise, 99);
  spec.hybrid_features = HybridFeatures::kEmbeddingOnly;
  spec.standardize_for_trees = true;
  const PipelineSpec back = PipelineSpec::FromJson(spec.ToJson());
  EXPECT_EQ(back.ToJson(), spec.ToJson());
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(*back.saint_config, *spec.saint_config);
  EXPECT_EQ(*back.gbdt_config, *spec.gbdt_config);
}

TEST(ParamGridTest, ProductOrderLastAxisFastest) {
  ParamGrid grid{{{"gbdt.max_depth", {2, 3}}, {"gbdt.learning_rate", {0.1, 0.2, 0.3}}}};
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_EQ(grid.Candidate(0), nlohmann::json({{"gbdt.max_depth", 2}, {"gbdt.learning_rate", 0.1}}));
  EXPECT_EQ(grid.Candidate(1), nlohmann::json({{"gbdt.max_depth", 2}, {"gbdt.learning_rate", 0.2}}));
  EXPECT_EQ(grid.Candidate(5), nlohmann::json({{"gbdt.max_depth", 3}, {"gbdt.learning_rate", 0.3}}));
  EXPECT_EQ(ParamGrid{}.size(), 1u);
  EXPECT_EQ(ParamGrid{}.Candidate(0), nlohmann::json::object());
}

TEST(ParamGridTest, JsonFormsAndErrors) {
  ParamGrid grid{{{"gbdt.max_depth", {2, 3}}}};
  EXPECT_EQ(ParamGrid::FromJson(grid.ToJson()).ToJson(), grid.ToJson());
  const auto object_form = ParamGrid::FromJson(nlohmann::json::parse(
      R"({"gbdt.num_leaves": [5, 10], "gbdt.learning_rate": [0.1]})"));
  ASSERT_EQ(object_form.axes.size(), 2u);
  EXPECT_EQ(object_form.axes[0].name, "gbdt.learning_rate");
  EXPECT_THROW(ParamGrid::FromJson(nlohmann::json::parse(R"({"gbdt.gamma": []})")), Error);
}

TEST(ParamGridTest, ApplyParamsWritesDottedPaths) {
  const PipelineSpec spec = Spec(PipelineKind::kHybridDepthwise);
  const PipelineSpec out =
      ApplyParams(spec, {{"gbdt.max_depth", 5}, {"saint.embed_dim", 4}, {"seed", 3}});
  EXPECT_EQ(out.gbdt_config->max_depth, 5u);
  EXPECT_EQ(out.saint_config->embed_dim, 4u);
  EXPECT_EQ(out.seed, 3u);
  EXPECT_EQ(out.gbdt_config->learning_rate, spec.gbdt_config->learning_rate);
  try {
    ApplyParams(spec, {{"gbdt.depth", 5}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
}

TEST(PresetTest, BuiltinPresetsCarryTunedSettings) {
  const auto presets = BuiltinPresets();
  ASSERT_EQ(presets.size(), 5u);
  const auto saint_preset = FindPreset("saint");
  ASSERT_TRUE(saint_preset);
  const auto& sc = *saint_preset->spec.saint_config;
  EXPECT_EQ(sc.embed_dim, 16u);
  EXPECT_EQ(sc.hidden_dim, 64u);
  EXPECT_EQ(sc.n_heads, 2u);
  EXPECT_EQ(sc.n_layers, 2u);
  EXPECT_DOUBLE_EQ(sc.dropout, 0.1);
  EXPECT_DOUBLE_EQ(sc.learning_rate, 0.001);
  EXPECT_EQ(sc.batch_size, 100u);
  EXPECT_EQ(sc.n_epochs, 1u);
  EXPECT_EQ(saint_preset->grid.size(), 1u);

  const auto depth = FindPreset("xgboost-grid");
  ASSERT_TRUE(depth);
  EXPECT_EQ(depth->grid.size(), 144u);
  bool saw_depth_axis = false;
  for (const auto& axis : depth->grid.axes) {
    if (axis.name == "gbdt.max_depth") {
      saw_depth_axis = true;
      EXPECT_EQ(nlohmann::json(axis.values), nlohmann::json({2, 3, 4}));
    }
  }
  EXPECT_TRUE(saw_depth_axis);

  const auto leaves = FindPreset("lightgbm-grid");
  ASSERT_TRUE(leaves);
  EXPECT_EQ(leaves->grid.size(), 18u);
  for (const auto& axis : leaves->grid.axes) {
    if (axis.name == "gbdt.num_leaves") {
      EXPECT_EQ(nlohmann::json(axis.values), nlohmann::json({5, 10, 20}));
    }
  }
  EXPECT_EQ(FindPreset("saint-xgboost")->spec.kind, PipelineKind::kHybridDepthwise);
  EXPECT_EQ(FindPreset("saint-lightgbm")->spec.kind, PipelineKind::kHybridLeafwise);
  EXPECT_FALSE(FindPreset("catboost"));
  for (const auto& p : presets) {
    EXPECT_NO_THROW(p.spec.Validate()) << p.name;
    for (std::size_t c = 0; c < p.grid.size(); c += 7) {
      EXPECT_NO_THROW(ApplyParams(p.spec, p.grid.Candidate(c)).Validate()) << p.name;
    }
  }
}

TEST(FitPipelineTest, TreeInputLayouts) {
  const DataTable data = testing::AttritionTable(150, 1);

  const auto trees_only = FitPipeline(Spec(PipelineKind::kGbdtDepthwise), data);
  EXPECT_FALSE(trees_only.saint.has_value());
  ASSERT_TRUE(trees_only.gbdt.has_value());
  std::size_t expected = 0;
  for (auto i : data.schema.FeatureIndices()) {
    const auto& e = data.schema.entry(i);
    expected += e.kind == FeatureKind::kCategorical ? e.categories.size() : 1;
  }
  EXPECT_EQ(trees_only.tree_columns.size(), expected);
  EXPECT_EQ(TreeInput(trees_only, data).cols(), expected);

  const auto hybrid = FitPipeline(Spec(PipelineKind::kHybridLeafwise), data);
  ASSERT_TRUE(hybrid.saint.has_value());
  const auto input = TreeInput(hybrid, data);
  EXPECT_EQ(input.cols(), 14u + 8u);
  EXPECT_EQ(input.column_meta[13].source_feature, data.schema.entry(data.schema.FeatureIndices()[13]).name);
  EXPECT_EQ(input.column_meta[14].encoding, ColumnEncoding::kEmbeddingDim);
  EXPECT_EQ(input.column_meta[21].source_feature, "saint_emb_7");
  EXPECT_EQ(input.ColumnNames()[21], "saint_emb_7");

  PipelineSpec embedding_only = Spec(PipelineKind::kHybridDepthwise);
  embedding_only.hybrid_features = HybridFeatures::kEmbeddingOnly;
  const auto emb = FitPipeline(embedding_only, data);
  EXPECT_EQ(TreeInput(emb, data).cols(), 8u);

  const auto saint_only = FitPipeline(Spec(PipelineKind::kSaint), data);
  EXPECT_FALSE(saint_only.gbdt.has_value());
  EXPECT_THROW(TreeInput(saint_only, data), Error);
  EXPECT_EQ(SaintInput(saint_only, data).cols(), 14u);
}

TEST(FitPipelineTest, PresetSizedHybridHasThirtyTreeColumns) {
  const DataTable data = testing::AttritionTable(120, 2);
  PipelineSpec spec = FindPreset("saint-xgboost")->spec;
  spec.gbdt_config->n_estimators = 5;
  const auto fitted = FitPipeline(spec, data);
  EXPECT_EQ(fitted.tree_columns.size(), 30u);
}

TEST(FitPipelineTest, PredictionsAreProbabilitiesOfMargins) {
  const DataTable data = testing::AttritionTable(150, 3);
  for (auto kind : kAllKinds) {
    const auto fitted = FitPipeline(Spec(kind), data);
    const auto margins = PredictMargins(fitted, data);
    const auto probs = PredictPipeline(fitted, data);
    ASSERT_EQ(probs.size(), data.n_rows());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      ASSERT_GT(probs[i], 0.0);
      ASSERT_LT(probs[i], 1.0);
      ASSERT_NEAR(probs[i], 1 / (1 + std::exp(-margins[i])), 1e-15);
    }
  }
}

TEST(FitPipelineTest, SameSeedSameState) {
  const DataTable data = testing::AttritionTable(140, 4);
  for (auto kind : kAllKinds) {
    const auto a = FitPipeline(Spec(kind, 5), data);
    const auto b = FitPipeline(Spec(kind, 5), data);
    EXPECT_TRUE(a.SameFittedState(b)) << PipelineKindName(kind);
  }
  const auto c = FitPipeline(Spec(PipelineKind::kHybridDepthwise, 6), data);
  const auto d = FitPipeline(Spec(PipelineKind::kHybridDepthwise, 5), data);
  EXPECT_FALSE(c.SameFittedState(d));
}

TEST(FitPipelineTest, AuditReportsStagesAndRows) {
  const DataTable data = testing::AttritionTable(100, 5);
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < 100; i += 3) subset.push_back(i);
  const DataTable train = data.SelectRows(subset);
  std::vector<std::string> stages;
  FitPipeline(Spec(PipelineKind::kHybridDepthwise), train,
              [&](const std::string& stage, const std::vector<std::size_t>& ids) {
                stages.push_back(stage);
                EXPECT_EQ(ids, train.row_ids);
              });
  EXPECT_EQ(stages, (std::vector<std::string>{"vocabulary", "scaler", "saint", "gbdt"}));
}

// Rows outside the training subset are replaced with noise, including
// unseen categorical levels; the fitted state must not move.
TEST(FitPipelineTest, HeldOutRowsDoNotLeakIntoFittedState) {
  const DataTable clean = testing::AttritionTable(160, 6);
  const FoldPlan folds = StratifiedKFold(clean.Labels(), 4, 8);
  DataTable noisy = clean;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss(0, 1000);
  for (auto r : folds.ValidationIndices(0)) {
    for (auto c : clean.schema.FeatureIndices()) {
      auto& cell = noisy.rows[r][c];
      if (std::holds_alternative<double>(cell)) {
        cell = gauss(rng);
      } else {
        cell = std::string("noise_") + std::to_string(rng() % 1000);
      }
    }
  }
  for (auto kind : kAllKinds) {
    PipelineSpec spec = Spec(kind);
    spec.standardize_for_trees = true;
    const auto train_idx = folds.TrainIndices(0);
    const auto a = FitPipeline(spec, clean.SelectRows(train_idx));
    const auto b = FitPipeline(spec, noisy.SelectRows(train_idx));
    EXPECT_TRUE(a.SameFittedState(b)) << PipelineKindName(kind);
  }
}

TEST(FitPipelineTest, SchemaMismatchIsRejected) {
  const DataTable data = testing::AttritionTable(80, 7);
  const auto fitted = FitPipeline(Spec(PipelineKind::kGbdtLeafwise), data);
  DataTable other = data;
  auto entries = other.schema.entries();
  entries[0].name = "renamed";
  other.schema = FeatureSchema(entries);
  try {
    PredictPipeline(fitted, other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(FitPipelineTest, UnknownLevelPolicy) {
  const DataTable data = testing::AttritionTable(80, 8);
  const auto fitted = FitPipeline(Spec(PipelineKind::kHybridDepthwise), data);
  DataTable shifted = data.SelectRows(std::vector<std::size_t>{0, 1});
  for (auto c : data.schema.FeatureIndices()) {
    if (data.schema.entry(c).kind == FeatureKind::kCategorical) {
      shifted.rows[0][c] = std::string("Astronaut");
      break;
    }
  }
  EXPECT_THROW(PredictPipeline(fitted, shifted), Error);
  const auto probs = PredictPipeline(fitted, shifted, UnknownPolicy::kAllow);
  EXPECT_EQ(probs.size(), 2u);
  EXPECT_TRUE(std::isfinite(probs[0]));
}

TEST(BundleTest, RoundTripPreservesStateAndPredictions) {
  const DataTable data = testing::AttritionTable(120, 9);
  testing::TempDir dir("bundle");
  for (auto kind : kAllKinds) {
    const auto fitted = FitPipeline(Spec(kind), data);
    const auto path = dir.path() / std::string(PipelineKindName(kind));
    std::filesystem::create_directories(path);
    WriteBundle(path, fitted, DataFingerprint(data));
    const auto manifest = nlohmann::json::parse(ReadTextFile(path / "manifest.json"));
    EXPECT_EQ(manifest["data_fingerprint"], HexDigest(DataFingerprint(data)));
    const auto back = ReadBundle(path);
    EXPECT_TRUE(back.SameFittedState(fitted)) << PipelineKindName(kind);
    EXPECT_EQ(PredictPipeline(back, data), PredictPipeline(fitted, data));
  }
}

TEST(BundleTest, MissingOrCorruptFilesThrow) {
  testing::TempDir dir("bundle_bad");
  EXPECT_THROW(ReadBundle(dir.path()), Error);
  WriteTextFile(dir.path() / "manifest.json", "{not json");
  try {
    ReadBundle(dir.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(DataFingerprintTest, SensitiveToCells) {
  const DataTable data = testing::AttritionTable(30, 10);
  DataTable changed = data;
  EXPECT_EQ(DataFingerprint(data), DataFingerprint(changed));
  for (auto c : data.schema.FeatureIndices()) {
    if (std::holds_alternative<double>(changed.rows[3][c])) {
      changed.rows[3][c] = std::get<double>(changed.rows[3][c]) + 1;
      break;
    }
  }
  EXPECT_NE(DataFingerprint(data), DataFingerprint(changed));
}

}  // namespace
}  // namespace tabhybrid::pipeline
