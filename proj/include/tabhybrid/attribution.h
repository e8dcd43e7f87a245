#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tabhybrid/common.h"
#include "tabhybrid/gbdt.h"
#include "tabhybrid/tabular.h"

namespace tabhybrid::attribution {

// Attributions in margin (log-odds) units.
struct ShapMatrix {
  Matrix values;           // rows x features
  Matrix standard_errors;  // same shape for sampled estimates, empty for exact ones
  double base_value = 0.0;
  std::vector<std::string> feature_names;
};

// Fraction of a node's training cover sent to (left, right). Falls back to
// row counts when a child has zero hessian mass.
std::pair<double, double> ChildFractions(const gbdt::Tree& tree, std::size_t node);

// Cover-weighted mean leaf value of one tree.
double TreeExpectation(const gbdt::Tree& tree);

// Path-dependent TreeSHAP summed over the ensemble. Throws
// kMissingCoverCounts for models without covers and kFeatureCountMismatch
// when x has the wrong width.
ShapMatrix TreeShap(const gbdt::GbdtModel& model, const Matrix& x,
                    std::vector<std::string> feature_names = {});

// Maps a block of rows to their margins.
using MarginFn = std::function<std::vector<double>(const Matrix&)>;

struct SamplingOptions {
  std::size_t n_permutations = 64;  // rounded up to an even count
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

// Antithetic permutation sampling. Each permutation is paired with its
// reverse against the same background row; a pair is one sample.
ShapMatrix SamplingShap(const MarginFn& margin_fn, const Matrix& background, const Matrix& rows,
                        const SamplingOptions& options,
                        std::vector<std::string> feature_names = {});

enum class AggregateMode { kAbsolute, kSigned };

struct FeatureImportance {
  std::string feature;
  double mean_absolute = 0.0;
  double mean_signed = 0.0;
};

// One entry per feature (or per source feature when `collapse` is given),
// sorted by decreasing mean_absolute; ties keep column order.
std::vector<FeatureImportance> Summarize(const ShapMatrix& shap,
                                         const std::vector<ColumnMeta>* collapse = nullptr);

// Column means of |values| or values, after optional collapse.
std::vector<double> Aggregate(const ShapMatrix& shap, AggregateMode mode,
                              const std::vector<ColumnMeta>* collapse = nullptr);

// Sums columns that share a source feature; groups keep first-seen order.
ShapMatrix CollapseColumns(const ShapMatrix& shap, const std::vector<ColumnMeta>& columns);

std::string ShapMatrixCsv(const ShapMatrix& shap, const std::vector<std::string>& row_ids);
std::string SummaryCsv(const std::vector<FeatureImportance>& summary);

}  // namespace tabhybrid::attribution
