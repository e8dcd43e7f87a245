#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tabhybrid/common.h"
#include "tabhybrid/gbdt.h"

// Slow, independent reference implementations used to check the fast paths.
namespace tabhybrid::testing {

// AUC by counting every positive/negative pair; ties count one half.
double BruteForceAuc(std::span<const int> labels, std::span<const double> scores);

// Two-sided p of the AUC difference, with the standard error estimated from
// paired bootstrap resamples of rows.
double PairedBootstrapP(std::span<const int> labels, std::span<const double> s1,
                        std::span<const double> s2, std::size_t resamples, std::uint64_t seed);

// Greedy split search that tries every cut between consecutive distinct
// values and recomputes the sums for each.
struct GreedySplit {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0;
  double gain = 0;
  double left_max = 0;  // largest value sent left
};

GreedySplit ExhaustiveSplit(const Matrix& x, std::span<const double> g, std::span<const double> h,
                            std::span<const std::size_t> rows, const gbdt::GbdtConfig& c);

// Shapley values over every coalition of features, with v(S) the
// cover-weighted expectation of the ensemble given the features in S.
std::vector<double> BruteForceShapley(const gbdt::GbdtModel& model, std::span<const double> row);

// Random tree of depth <= max_depth with random covers; a feature may repeat
// along a path.
gbdt::Tree RandomTree(std::size_t n_features, std::size_t max_depth, std::mt19937_64& rng);

}  // namespace tabhybrid::testing
