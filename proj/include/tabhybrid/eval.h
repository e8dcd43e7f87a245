#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabhybrid/pipeline.h"
#include "tabhybrid/tabular.h"

namespace tabhybrid::eval {

struct ConfusionMatrix {
  std::size_t tn = 0, fp = 0, fn = 0, tp = 0;

  std::size_t total() const { return tn + fp + fn + tp; }
  bool operator==(const ConfusionMatrix&) const = default;
};

// Predicted positive iff prob >= threshold.
ConfusionMatrix Confusion(std::span<const int> labels, std::span<const double> probs,
                          double threshold = 0.5);

struct PrecisionRecallF1 {
  double precision = 0, recall = 0, f1 = 0;
  bool degenerate = false;  // some ratio had a zero denominator
};

PrecisionRecallF1 ComputePrecisionRecallF1(const ConfusionMatrix& cm);

// Mann-Whitney AUC with mid-ranks. Throws kSingleClass.
double RocAuc(std::span<const int> labels, std::span<const double> scores);

struct RocPoint {
  double fpr = 0, tpr = 0;
  double threshold = 0;  // +inf for the (0, 0) anchor
};

// One point per distinct score, thresholds descending, from (0,0) to (1,1).
std::vector<RocPoint> RocCurve(std::span<const int> labels, std::span<const double> scores);
double TrapezoidArea(std::span<const RocPoint> curve);

struct DelongResult {
  double auc1 = 0, auc2 = 0;
  double variance = 0;  // of auc1 - auc2
  double z = 0;
  double p_value = 1;
  double log10_p = 0;
};

// Paired two-sided DeLong test via mid-rank placement values.
DelongResult DelongTest(std::span<const int> labels, std::span<const double> scores1,
                        std::span<const double> scores2);

// log10 of the two-sided standard normal tail at |z|, finite for large |z|.
double Log10TwoSidedP(double z);

// ---------------------------------------------------------------------------

// Receives (stage, row ids) for every fit performed inside CV. Called from
// worker threads when jobs > 1.
using FitAudit = pipeline::FitAudit;

struct GridSearchOptions {
  std::size_t k_inner = 3;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  FitAudit audit;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  nlohmann::json best_params;
  std::vector<double> candidate_mean_auc;  // enumeration order
};

GridSearchResult GridSearch(const pipeline::PipelineSpec& base, const pipeline::ParamGrid& grid,
                            const DataTable& train, const GridSearchOptions& options);

struct OuterFoldResult {
  std::size_t fold = 0;
  nlohmann::json best_params;
  double validation_auc = 0;
};

struct CvResult {
  std::vector<OuterFoldResult> folds;
  double mean_validation_auc = 0;
  double stddev_validation_auc = 0;  // population
  nlohmann::json final_params;       // modal inner winner
  std::optional<double> test_auc;
  std::optional<double> delta;  // test - mean validation

  nlohmann::json ToJson() const;
};

struct NestedCvOptions {
  std::size_t k_outer = 5;
  std::size_t k_inner = 3;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  FitAudit audit;
};

// The outer fold plan NestedCv uses for these labels.
FoldPlan OuterFolds(std::span<const int> labels, const NestedCvOptions& options);

// Audit stages are prefixed "outer<k>/inner/" or "outer<k>/refit/".
// Outer folds estimate generalization of the inner grid search. The final
// params are the most frequent inner winner, ties to the earliest fold.
CvResult NestedCv(const pipeline::PipelineSpec& base, const pipeline::ParamGrid& grid,
                  const DataTable& data, const NestedCvOptions& options);

// Fills test_auc and delta from a refit on `train` scored on `test`; returns
// the refit pipeline.
pipeline::FittedPipeline RefitAndScore(CvResult& cv, const pipeline::PipelineSpec& base,
                                       const DataTable& train, const DataTable& test,
                                       std::uint64_t seed, std::vector<double>* test_probs = nullptr);

// ---------------------------------------------------------------------------

enum class Split { kTrain, kValidation, kTest };
std::string_view SplitName(Split split);

struct EvalReport {
  std::string model;
  Split split = Split::kTest;
  double roc_auc = 0;
  PrecisionRecallF1 prf;
  ConfusionMatrix confusion;
  double time_seconds = 0;
};

EvalReport Evaluate(const std::string& model, Split split, std::span<const int> labels,
                    std::span<const double> probs, double time_seconds = 0);

struct Comparison {
  std::string model1, model2;
  DelongResult delong;
  bool significant = false;
};

// All unordered pairs in input order; significance at alpha.
std::vector<Comparison> CompareModels(const std::vector<std::string>& names,
                                      const std::vector<std::vector<double>>& scores,
                                      std::span<const int> labels, double alpha = 0.05);

// CSV renderings. Metrics CSV leaves out wall time so reruns are byte-stable.
std::string MetricsCsv(std::span<const EvalReport> reports);
std::string TimingsCsv(std::span<const EvalReport> reports);
std::string ComparisonCsv(std::span<const Comparison> comparisons);
std::string RocCurveCsv(const std::string& model, Split split, std::span<const RocPoint> curve);
std::string CvCsv(const std::vector<std::string>& names, std::span<const CvResult> results);
std::string ConfusionCsv(std::span<const EvalReport> reports);
nlohmann::json ReportsJson(std::span<const EvalReport> reports);

// Fixed-width text tables for metrics, comparisons and CV summaries, built
// from the CSV files above.
std::string RenderMetricsTable(std::string_view metrics_csv, std::string_view timings_csv = {});
std::string RenderComparisonTable(std::string_view comparison_csv);
std::string RenderCvTable(std::string_view cv_csv);

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
void ParallelFor(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace tabhybrid::eval
