#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabhybrid/common.h"

namespace tabhybrid::gbdt {

enum class Growth { kDepthWise, kLeafWise };

struct GbdtConfig {
  Growth growth = Growth::kDepthWise;
  std::size_t n_estimators = 100;
  std::size_t max_depth = 6;    // depth-wise only
  std::size_t num_leaves = 31;  // leaf-wise only
  double learning_rate = 0.1;
  double subsample = 1.0;
  double colsample = 1.0;
  double min_child_weight = 1.0;
  double reg_lambda = 1.0;
  double reg_alpha = 0.0;
  double gamma = 0.0;
  std::size_t n_bins = 256;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static GbdtConfig FromJson(const nlohmann::json& j);
  bool operator==(const GbdtConfig&) const = default;
};

enum class DefaultDirection { kLeft, kRight };

// Rows with x < threshold go left.
struct TreeNode {
  bool is_leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  DefaultDirection default_direction = DefaultDirection::kLeft;
  double value = 0.0;   // leaf weight, before learning-rate scaling
  double cover = 0.0;   // training hessian sum reaching the node
  std::size_t count = 0;
  double gain = 0.0;    // split gain for internal nodes

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  std::size_t LeafIndex(std::span<const double> row) const;
  double LeafValue(std::span<const double> row) const { return nodes[LeafIndex(row)].value; }
  std::size_t Depth() const;
  std::size_t LeafCount() const;

  bool operator==(const Tree&) const = default;
};

struct GbdtModel {
  std::vector<Tree> trees;
  double base_score = 0.0;
  GbdtConfig config;
  std::size_t feature_count = 0;
  // False for models restored without per-node covers.
  bool has_cover = true;

  nlohmann::json ToJson() const;
  static GbdtModel FromJson(const nlohmann::json& j);
  bool operator==(const GbdtModel&) const = default;
};

// 0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma
double SplitGain(double gl, double hl, double gr, double hr, double reg_lambda, double gamma);
// As SplitGain with gradient sums soft-thresholded by reg_alpha.
double SplitGainL1(double gl, double hl, double gr, double hr, double reg_lambda,
                   double reg_alpha, double gamma);
double SoftThreshold(double g, double alpha);
// -soft(G, alpha) / (H + lambda)
double LeafWeight(double g, double h, double reg_lambda, double reg_alpha);

// Fixed per-feature cut points learned once from training data. A feature
// with at most n_bins distinct values gets one bin per value, cut at the
// midpoints; otherwise cuts sit at sample quantiles.
class BinMapper {
 public:
  BinMapper() = default;
  static BinMapper Fit(const Matrix& x, std::size_t n_bins);

  std::size_t n_features() const { return cuts_.size(); }
  std::size_t n_bins(std::size_t feature) const { return cuts_[feature].size() + 1; }
  const std::vector<double>& cuts(std::size_t feature) const { return cuts_[feature]; }
  std::uint16_t Bin(std::size_t feature, double value) const;

 private:
  std::vector<std::vector<double>> cuts_;
};

struct SplitCandidate {
  bool valid = false;
  std::size_t feature = 0;
  std::size_t bin = 0;  // left child takes bins [0, bin]
  double threshold = 0.0;
  double gain = 0.0;
  double gl = 0, hl = 0, gr = 0, hr = 0;
};

// Best split of the given rows by histogram search over `features`. Ties go
// to the lowest feature index, then the lowest threshold.
SplitCandidate BestSplitHistogram(const Matrix& x, std::span<const double> grad,
                                  std::span<const double> hess,
                                  std::span<const std::size_t> rows, const BinMapper& bins,
                                  std::span<const std::size_t> features,
                                  const GbdtConfig& config);

struct FitTrace {
  std::vector<double> train_logloss;  // after each round, over all training rows
  std::vector<double> train_margin;   // final training margins
};

GbdtModel Fit(const Matrix& x, std::span<const int> labels, const GbdtConfig& config,
              FitTrace* trace = nullptr);

std::vector<double> PredictMargin(const GbdtModel& model, const Matrix& x);
std::vector<double> PredictProba(const GbdtModel& model, const Matrix& x);

// Total split gain per feature across the ensemble.
std::vector<double> GainImportance(const GbdtModel& model);

double LogLoss(std::span<const double> margins, std::span<const int> labels);

}  // namespace tabhybrid::gbdt
