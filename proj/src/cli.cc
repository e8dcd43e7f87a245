#include "tabhybrid/cli.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <random>
#include <set>

#include "CLI11.hpp"
#include "tabhybrid/attribution.h"
#include "tabhybrid/eval.h"

namespace tabhybrid::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string Slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    out.push_back(keep ? c : '_');
  }
  return out.empty() ? "model" : out;
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.lexically_normal();
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

// `n` row indices drawn per class in proportion to the class balance.
std::vector<std::size_t> StratifiedSample(const std::vector<int>& labels, std::size_t n,
                                          std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  n = std::min(n, labels.size());
  std::size_t n_pos = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * static_cast<double>(pos.size()) /
                   static_cast<double>(std::max<std::size_t>(1, labels.size()))));
  n_pos = std::min(n_pos, pos.size());
  const std::size_t n_neg = std::min(n - n_pos, neg.size());
  std::vector<std::size_t> out(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(n_pos));
  out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> FirstRows(std::size_t n_rows, std::size_t limit) {
  std::vector<std::size_t> out(limit == 0 ? n_rows : std::min(limit, n_rows));
  std::iota(out.begin(), out.end(), 0);
  return out;
}

std::vector<std::string> RowIdStrings(const DataTable& table) {
  std::vector<std::string> out;
  for (std::size_t id : table.row_ids) out.push_back(std::to_string(id));
  return out;
}

struct ExplainOutput {
  attribution::ShapMatrix shap;
  std::vector<ColumnMeta> columns;
  std::optional<double> max_residual;  // tree models
};

// Tree pipelines get exact TreeSHAP over their tree input; SAINT gets
// sampled attributions over its ordinal input.
ExplainOutput Explain(const pipeline::FittedPipeline& fitted, const DataTable& rows,
                      const DataTable& background_pool, UnknownPolicy policy,
                      std::size_t n_background, std::size_t n_permutations, std::uint64_t seed,
                      std::size_t jobs) {
  ExplainOutput out;
  if (fitted.gbdt) {
    const EncodedMatrix input = pipeline::TreeInput(fitted, rows, policy);
    out.columns = input.column_meta;
    out.shap = attribution::TreeShap(*fitted.gbdt, input.values, input.ColumnNames());
    const auto margins = gbdt::PredictMargin(*fitted.gbdt, input.values);
    double worst = 0;
    for (std::size_t r = 0; r < input.rows(); ++r) {
      double total = out.shap.base_value;
      for (std::size_t c = 0; c < input.cols(); ++c) total += out.shap.values(r, c);
      worst = std::max(worst, std::abs(total - margins[r]));
    }
    out.max_residual = worst;
    return out;
  }
  const EncodedMatrix input = pipeline::SaintInput(fitted, rows, policy);
  const EncodedMatrix pool = pipeline::SaintInput(fitted, background_pool, UnknownPolicy::kAllow);
  const auto bg_rows = StratifiedSample(background_pool.Labels(), n_background,
                                        DeriveSeed(seed, {0xb6}));
  const Matrix background = pool.values.SelectRows(bg_rows);
  out.columns = input.column_meta;
  const saint::SaintModel& model = *fitted.saint;
  attribution::SamplingOptions options;
  options.n_permutations = n_permutations;
  options.seed = seed;
  options.jobs = jobs;
  out.shap = attribution::SamplingShap(
      [&model](const Matrix& m) { return saint::PredictLogits(model, m); }, background,
      input.values, options, input.ColumnNames());
  return out;
}

void WriteExplainFiles(const fs::path& dir, const std::string& prefix, const ExplainOutput& ex,
                       const std::vector<std::string>& row_ids, bool collapse) {
  WriteTextFile(dir / (prefix + "values.csv"), attribution::ShapMatrixCsv(ex.shap, row_ids));
  if (ex.shap.standard_errors.rows() > 0) {
    attribution::ShapMatrix se = ex.shap;
    se.values = ex.shap.standard_errors;
    WriteTextFile(dir / (prefix + "standard_errors.csv"), attribution::ShapMatrixCsv(se, row_ids));
  }
  WriteTextFile(dir / (prefix + "summary.csv"),
                attribution::SummaryCsv(attribution::Summarize(ex.shap, collapse ? &ex.columns : nullptr)));
}

double MeanStandardError(const attribution::ShapMatrix& shap) {
  const Matrix& se = shap.standard_errors;
  if (se.rows() == 0 || se.cols() == 0) return 0.0;
  double total = 0;
  for (std::size_t r = 0; r < se.rows(); ++r) {
    for (std::size_t c = 0; c < se.cols(); ++c) total += se(r, c);
  }
  return total / static_cast<double>(se.rows() * se.cols());
}

// Moves every entry of `staging` into `out`, replacing existing entries.
void Commit(const fs::path& staging, const fs::path& out) {
  for (const auto& entry : fs::directory_iterator(staging)) {
    const fs::path target = out / entry.path().filename();
    fs::remove_all(target);
    fs::rename(entry.path(), target);
  }
  fs::remove_all(staging);
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
    case ErrorCode::kConfig:
    case ErrorCode::kEmptyFile:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

EmitFlags EmitFlags::Parse(const std::vector<std::string>& names) {
  EmitFlags f{false, false, false, false, false};
  for (std::string name : names) {
    std::size_t start = 0;
    while (start <= name.size()) {
      const std::size_t comma = name.find(',', start);
      const std::string item =
          name.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (item == "all") {
        f = {true, true, true, true, true};
      } else if (item == "none" || item.empty()) {
      } else if (item == "reports") {
        f.reports = true;
      } else if (item == "roc") {
        f.roc = true;
      } else if (item == "confusion") {
        f.confusion = true;
      } else if (item == "shap") {
        f.shap = true;
      } else if (item == "models") {
        f.models = true;
      } else {
        throw Error(ErrorCode::kConfig, "unknown emit flag '" + item + "'");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
  return f;
}

nlohmann::json EmitFlags::ToJson() const {
  return {{"reports", reports}, {"roc", roc}, {"confusion", confusion}, {"shap", shap},
          {"models", models}};
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  std::vector<std::string> problems;
  auto get_string = [&](const char* key) -> std::string {
    if (!j.contains(key)) return {};
    if (!j.at(key).is_string()) {
      problems.push_back(std::string(key) + " must be a string");
      return {};
    }
    return j.at(key).get<std::string>();
  };
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  try {
    c.train_path = Resolve(base_dir, get_string("train"));
    c.test_path = Resolve(base_dir, get_string("test"));
    c.schema_path = Resolve(base_dir, get_string("schema"));
    if (c.train_path.empty()) problems.push_back("train path is required");
    if (c.test_path.empty()) problems.push_back("test path is required");
    c.target = j.value("target", c.target);
    c.exclude = j.value("exclude", c.exclude);
    c.seed = j.value("seed", c.seed);
    if (j.contains("output")) c.output_dir = Resolve(base_dir, get_string("output"));
    c.allow_unknown = j.value("allow_unknown", c.allow_unknown);
    if (j.contains("cv")) {
      const auto& cv = j.at("cv");
      c.cross_validate = cv.value("enabled", c.cross_validate);
      c.k_outer = cv.value("k_outer", c.k_outer);
      c.k_inner = cv.value("k_inner", c.k_inner);
      if (c.k_outer < 2 || c.k_inner < 2) problems.push_back("cv folds must be at least 2");
    }
    if (j.contains("emit")) {
      const auto& e = j.at("emit");
      c.emit.reports = e.value("reports", c.emit.reports);
      c.emit.roc = e.value("roc", c.emit.roc);
      c.emit.confusion = e.value("confusion", c.emit.confusion);
      c.emit.shap = e.value("shap", c.emit.shap);
      c.emit.models = e.value("models", c.emit.models);
    }
    if (j.contains("shap")) {
      const auto& s = j.at("shap");
      c.shap_rows = s.value("rows", c.shap_rows);
      c.shap_background = s.value("background", c.shap_background);
      c.shap_permutations = s.value("permutations", c.shap_permutations);
    }
    if (!j.contains("models") || !j.at("models").is_array() || j.at("models").empty()) {
      problems.push_back("models must be a nonempty array");
    } else {
      std::set<std::string> names;
      for (const auto& m : j.at("models")) {
        ModelEntry entry;
        entry.name = m.value("name", std::string());
        if (entry.name.empty()) {
          problems.push_back("every model needs a name");
          continue;
        }
        if (!names.insert(entry.name).second) {
          problems.push_back("duplicate model name '" + entry.name + "'");
          continue;
        }
        try {
          if (m.contains("preset")) {
            entry.preset = m.at("preset").get<std::string>();
            const auto preset = pipeline::FindPreset(entry.preset);
            if (!preset) {
              problems.push_back(entry.name + ": unknown preset '" + entry.preset + "'");
              continue;
            }
            entry.spec = preset->spec;
            entry.grid = preset->grid;
          } else if (m.contains("spec")) {
            entry.spec = pipeline::PipelineSpec::FromJson(m.at("spec"));
          } else {
            problems.push_back(entry.name + ": needs a preset or a spec");
            continue;
          }
          if (m.contains("grid")) entry.grid = pipeline::ParamGrid::FromJson(m.at("grid"));
          if (m.contains("params")) entry.spec = pipeline::ApplyParams(entry.spec, m.at("params"));
          entry.spec.Validate();
          for (std::size_t i = 0; i < entry.grid.size(); ++i) {
            pipeline::ApplyParams(entry.spec, entry.grid.Candidate(i)).Validate();
          }
        } catch (const Error& e) {
          problems.push_back(entry.name + ": " + e.what());
          continue;
        } catch (const nlohmann::json::exception& e) {
          problems.push_back(entry.name + ": " + e.what());
          continue;
        }
        c.models.push_back(std::move(entry));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string message = "invalid experiment config:";
    for (const auto& p : problems) message += "\n  - " + p;
    throw Error(ErrorCode::kConfig, message);
  }
  return c;
}

ExperimentConfig ExperimentConfig::ReadFile(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json models_json = nlohmann::json::array();
  for (const auto& m : models) {
    nlohmann::json entry = {{"name", m.name}, {"spec", m.spec.ToJson()}};
    if (!m.preset.empty()) entry["preset"] = m.preset;
    if (!m.grid.axes.empty()) entry["grid"] = m.grid.ToJson();
    models_json.push_back(entry);
  }
  return {{"train", train_path.string()},
          {"test", test_path.string()},
          {"schema", schema_path.string()},
          {"target", target},
          {"exclude", exclude},
          {"seed", seed},
          {"cv", {{"enabled", cross_validate}, {"k_outer", k_outer}, {"k_inner", k_inner}}},
          {"output", output_dir.string()},
          {"allow_unknown", allow_unknown},
          {"emit", emit.ToJson()},
          {"shap",
           {{"rows", shap_rows}, {"background", shap_background}, {"permutations", shap_permutations}}},
          {"models", models_json}};
}

void ExperimentConfig::ValidatePaths() const {
  std::vector<std::string> missing;
  for (const auto& p : {train_path, test_path, schema_path}) {
    if (!p.empty() && !fs::exists(p)) missing.push_back(p.string());
  }
  if (!missing.empty()) {
    std::string message = "missing input files:";
    for (const auto& m : missing) message += "\n  - " + m;
    throw Error(ErrorCode::kIo, message);
  }
}

// ---------------------------------------------------------------------------

void RunExperiment(const ExperimentConfig& config, std::size_t jobs, std::ostream& log) {
  config.ValidatePaths();
  const fs::path out = config.output_dir;
  const fs::path staging = out / ".staging";
  fs::create_directories(out);
  fs::remove_all(staging);
  fs::create_directories(staging);
  const auto run_start = std::chrono::steady_clock::now();

  try {
    const FeatureSchema schema = config.schema_path.empty()
                                     ? InferSchema(config.train_path, config.target, config.exclude)
                                     : FeatureSchema::ReadFile(config.schema_path);
    LoadOptions load;
    load.allow_unknown = config.allow_unknown;
    load.ignore_extra_columns = true;
    const DataTable train = LoadCsv(config.train_path, schema, load);
    const DataTable test = LoadCsv(config.test_path, schema, load);
    const UnknownPolicy policy = config.allow_unknown ? UnknownPolicy::kAllow : UnknownPolicy::kError;
    const std::vector<int> train_labels = train.Labels();
    const std::vector<int> test_labels = test.Labels();
    log << "train rows " << train.n_rows() << ", test rows " << test.n_rows() << "\n";

    std::vector<eval::EvalReport> test_reports, all_reports;
    std::vector<std::string> names;
    std::vector<std::vector<double>> test_scores;
    std::vector<eval::CvResult> cv_results;
    std::vector<std::string> cv_names;
    nlohmann::json model_manifest = nlohmann::json::array();

    for (std::size_t i = 0; i < config.models.size(); ++i) {
      const ModelEntry& entry = config.models[i];
      const std::string slug = Slug(entry.name);
      log << "[" << entry.name << "] " << pipeline::PipelineKindName(entry.spec.kind) << "\n";
      pipeline::PipelineSpec spec = entry.spec;
      spec.seed = DeriveSeed(config.seed, {0x30de1, i});

      std::optional<eval::CvResult> cv;
      double cv_seconds = 0;
      if (config.cross_validate) {
        const auto cv_start = std::chrono::steady_clock::now();
        eval::NestedCvOptions options;
        options.k_outer = config.k_outer;
        options.k_inner = config.k_inner;
        options.seed = DeriveSeed(config.seed, {0xc5, i});
        options.jobs = jobs;
        cv = eval::NestedCv(spec, entry.grid, train, options);
        cv_seconds = Seconds(cv_start);
        spec = pipeline::ApplyParams(spec, cv->final_params);
        log << "  cv mean auc " << FormatDouble(cv->mean_validation_auc) << "\n";
      }

      const auto fit_start = std::chrono::steady_clock::now();
      const pipeline::FittedPipeline fitted = pipeline::FitPipeline(spec, train);
      const std::vector<double> test_probs = pipeline::PredictPipeline(fitted, test, policy);
      const double time_seconds = Seconds(fit_start);
      const std::vector<double> train_probs = pipeline::PredictPipeline(fitted, train);

      const auto test_report =
          eval::Evaluate(entry.name, eval::Split::kTest, test_labels, test_probs, time_seconds);
      log << "  test auc " << FormatDouble(test_report.roc_auc) << "\n";
      test_reports.push_back(test_report);
      all_reports.push_back(
          eval::Evaluate(entry.name, eval::Split::kTrain, train_labels, train_probs, time_seconds));
      all_reports.push_back(test_report);
      names.push_back(entry.name);
      test_scores.push_back(test_probs);
      if (cv) {
        cv->test_auc = test_report.roc_auc;
        cv->delta = test_report.roc_auc - cv->mean_validation_auc;
        cv_results.push_back(*cv);
        cv_names.push_back(entry.name);
      }

      if (config.emit.roc) {
        WriteTextFile(staging / "roc" / (slug + "_train.csv"),
                      eval::RocCurveCsv(entry.name, eval::Split::kTrain,
                                        eval::RocCurve(train_labels, train_probs)));
        WriteTextFile(staging / "roc" / (slug + "_test.csv"),
                      eval::RocCurveCsv(entry.name, eval::Split::kTest,
                                        eval::RocCurve(test_labels, test_probs)));
      }
      if (config.emit.models) {
        pipeline::WriteBundle(staging / "models" / slug, fitted, pipeline::DataFingerprint(train));
      }
      if (config.emit.shap) {
        const DataTable rows = test.SelectRows(FirstRows(test.n_rows(), config.shap_rows));
        const ExplainOutput ex =
            Explain(fitted, rows, train, policy, config.shap_background, config.shap_permutations,
                    DeriveSeed(config.seed, {0x54a9, i}), jobs);
        WriteExplainFiles(staging / "shap", slug + "_", ex, RowIdStrings(rows), false);
        WriteTextFile(staging / "shap" / (slug + "_summary_by_feature.csv"),
                      attribution::SummaryCsv(attribution::Summarize(ex.shap, &ex.columns)));
      }
      model_manifest.push_back({{"name", entry.name},
                                {"kind", pipeline::PipelineKindName(spec.kind)},
                                {"seed", spec.seed},
                                {"spec", spec.ToJson()},
                                {"fit_seconds", fitted.fit_seconds},
                                {"time_seconds", time_seconds},
                                {"cv_seconds", cv_seconds}});
    }

    WriteTextFile(staging / "metrics.csv", eval::MetricsCsv(test_reports));
    nlohmann::json soft_checks = nlohmann::json::array();
    if (config.emit.reports) {
      WriteTextFile(staging / "timings.csv", eval::TimingsCsv(all_reports));
      WriteTextFile(staging / "reports.json", eval::ReportsJson(all_reports).dump(2) + "\n");
      WriteTextFile(staging / "schema.json", schema.ToJson().dump(2) + "\n");
      const auto comparisons = eval::CompareModels(names, test_scores, test_labels);
      WriteTextFile(staging / "comparison.csv", eval::ComparisonCsv(comparisons));
      if (!cv_results.empty()) {
        WriteTextFile(staging / "cv.csv", eval::CvCsv(cv_names, cv_results));
        nlohmann::json folds = nlohmann::json::object();
        for (std::size_t k = 0; k < cv_results.size(); ++k) folds[cv_names[k]] = cv_results[k].ToJson();
        WriteTextFile(staging / "cv.json", folds.dump(2) + "\n");
      }
    }
    if (config.emit.confusion) {
      WriteTextFile(staging / "confusion.csv", eval::ConfusionCsv(test_reports));
    }

    nlohmann::json manifest = {
        {"tool", "tabhybrid"},
        {"version", kVersion},
        {"seed", config.seed},
        {"jobs", jobs},
        {"config", config.ToJson()},
        {"train_fingerprint", HexDigest(pipeline::DataFingerprint(train))},
        {"test_fingerprint", HexDigest(pipeline::DataFingerprint(test))},
        {"models", model_manifest},
        {"wall_seconds", Seconds(run_start)},
        {"status", "complete"}};
    WriteTextFile(staging / "manifest.json", manifest.dump(2) + "\n");
    Commit(staging, out);
  } catch (const std::exception& e) {
    const fs::path quarantine = out / "quarantine";
    std::error_code ec;
    fs::remove_all(quarantine, ec);
    fs::rename(staging, quarantine, ec);
    if (!ec) WriteTextFile(quarantine / "error.txt", std::string(e.what()) + "\n");
    throw;
  }
}

// ---------------------------------------------------------------------------

int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tabular attrition modelling: transformer and tree pipelines", "tabhybrid"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // schema
  auto* schema_cmd = app.add_subcommand("schema", "Infer a feature schema from a CSV file");
  std::string schema_input, schema_target = "Attrition", schema_out;
  std::vector<std::string> schema_exclude;
  schema_cmd->add_option("input", schema_input, "CSV file")->required();
  schema_cmd->add_option("--target", schema_target, "Target column name");
  schema_cmd->add_option("--exclude", schema_exclude, "Columns to leave out (repeatable)");
  schema_cmd->add_option("--out", schema_out, "Schema JSON path (default: stdout)");

  // run
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a JSON config");
  std::string run_config, run_out;
  std::optional<std::uint64_t> run_seed;
  std::size_t run_jobs = 1;
  std::vector<std::string> run_emit;
  bool run_allow_unknown = false;
  run_cmd->add_option("--config", run_config, "Experiment config JSON")->required();
  run_cmd->add_option("--seed", run_seed, "Override the config seed");
  run_cmd->add_option("--jobs", run_jobs, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", run_out, "Override the output directory");
  run_cmd->add_option("--emit", run_emit,
                      "Outputs to write: reports,roc,confusion,shap,models,all,none");
  run_cmd->add_flag("--allow-unknown", run_allow_unknown, "Accept unseen categories");

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "SHAP attributions for a saved model bundle");
  std::string explain_bundle, explain_data, explain_out = ".";
  bool explain_collapse = false, explain_allow_unknown = false;
  std::size_t explain_permutations = 64, explain_rows = 0, explain_background = 100,
              explain_jobs = 1;
  std::uint64_t explain_seed = 0;
  explain_cmd->add_option("bundle", explain_bundle, "Model bundle directory")->required();
  explain_cmd->add_option("data", explain_data, "CSV with rows to explain")->required();
  explain_cmd->add_option("--out", explain_out, "Output directory");
  explain_cmd->add_flag("--collapse-onehot", explain_collapse,
                        "Sum one-hot columns back into their source feature");
  explain_cmd->add_option("--permutations", explain_permutations,
                          "Permutations per row for sampled attributions");
  explain_cmd->add_option("--max-rows", explain_rows, "Explain at most this many rows (0 = all)");
  explain_cmd->add_option("--background", explain_background, "Background rows for sampling");
  explain_cmd->add_option("--seed", explain_seed, "Sampling seed");
  explain_cmd->add_option("--jobs", explain_jobs, "Worker threads")->check(CLI::PositiveNumber);
  explain_cmd->add_flag("--allow-unknown", explain_allow_unknown, "Accept unseen categories");

  // report
  auto* report_cmd = app.add_subcommand("report", "Render text tables from a run directory");
  std::string report_dir;
  report_cmd->add_option("--out", report_dir, "Run output directory")->required();

  std::vector<std::string> argv_storage = {"tabhybrid"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (schema_cmd->parsed()) {
      const FeatureSchema schema = InferSchema(schema_input, schema_target, schema_exclude);
      const std::string text = schema.ToJson().dump(2) + "\n";
      if (schema_out.empty()) {
        out << text;
      } else {
        WriteTextFile(schema_out, text);
        out << "wrote " << schema_out << " (" << schema.size() << " entries)\n";
      }
    } else if (run_cmd->parsed()) {
      ExperimentConfig config = ExperimentConfig::ReadFile(run_config);
      if (run_seed) config.seed = *run_seed;
      if (!run_out.empty()) config.output_dir = run_out;
      if (!run_emit.empty()) config.emit = EmitFlags::Parse(run_emit);
      if (run_allow_unknown) config.allow_unknown = true;
      RunExperiment(config, run_jobs, out);
      out << "outputs in " << config.output_dir.string() << "\n";
    } else if (explain_cmd->parsed()) {
      const pipeline::FittedPipeline fitted = pipeline::ReadBundle(explain_bundle);
      LoadOptions load;
      load.allow_unknown = explain_allow_unknown;
      load.ignore_extra_columns = true;
      DataTable data;
      try {
        data = LoadCsv(explain_data, fitted.schema, load);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kMissingColumn) throw;
        throw Error(ErrorCode::kSchemaMismatch, e.what());
      }
      const DataTable rows = data.SelectRows(FirstRows(data.n_rows(), explain_rows));
      const UnknownPolicy policy =
          explain_allow_unknown ? UnknownPolicy::kAllow : UnknownPolicy::kError;
      const ExplainOutput ex = Explain(fitted, rows, data, policy, explain_background,
                                       explain_permutations, explain_seed, explain_jobs);
      WriteExplainFiles(explain_out, "shap_", ex, RowIdStrings(rows), explain_collapse);
      out << "explained " << rows.n_rows() << " rows, " << ex.shap.values.cols()
          << " columns, base value " << FormatDouble(ex.shap.base_value) << "\n";
      if (ex.max_residual) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "local accuracy: max |sum(phi) + base - margin| = %.3e\n",
                      *ex.max_residual);
        out << buf;
      } else {
        out << "mean standard error: " << FormatDouble(MeanStandardError(ex.shap)) << "\n";
      }
    } else if (report_cmd->parsed()) {
      const fs::path dir = report_dir;
      std::string text = eval::RenderMetricsTable(
          ReadTextFile(dir / "metrics.csv"),
          fs::exists(dir / "timings.csv") ? ReadTextFile(dir / "timings.csv") : std::string());
      if (fs::exists(dir / "comparison.csv")) {
        text += "\n" + eval::RenderComparisonTable(ReadTextFile(dir / "comparison.csv"));
      }
      if (fs::exists(dir / "cv.csv")) {
        text += "\n" + eval::RenderCvTable(ReadTextFile(dir / "cv.csv"));
      }
      WriteTextFile(dir / "report.txt", text);
      out << text;
    }
  } catch (const Error& e) {
    err << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error [io]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tabhybrid::cli
