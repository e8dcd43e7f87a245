#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tabhybrid/common.h"
#include "tabhybrid/tabular.h"

namespace tabhybrid::testing {

// Attrition-shaped table: an "Employee ID" column, 14 features (numerical,
// binary and categorical) and an "Attrition" target of Left/Stayed. Labels
// follow a noisy logistic model of the features.
std::string AttritionCsv(std::size_t n, std::uint64_t seed);

// The 15-entry schema of AttritionCsv, ID excluded.
FeatureSchema AttritionSchema();

DataTable AttritionTable(std::size_t n, std::uint64_t seed);

Matrix RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = -1.0,
                    double hi = 1.0);

// Temporary directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace tabhybrid::testing
