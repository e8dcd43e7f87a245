#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabhybrid/pipeline.h"

namespace tabhybrid::cli {

struct EmitFlags {
  bool reports = true;    // reports.json, cv.csv, comparison.csv
  bool roc = true;        // roc/<model>_<split>.csv
  bool confusion = true;  // confusion.csv
  bool shap = false;      // shap/<model>_*.csv
  bool models = true;     // models/<model>/ bundles

  // Comma-separated names; "all" and "none" are accepted.
  static EmitFlags Parse(const std::vector<std::string>& names);
  nlohmann::json ToJson() const;
};

struct ModelEntry {
  std::string name;
  std::string preset;  // empty when given as an explicit spec
  pipeline::PipelineSpec spec;
  pipeline::ParamGrid grid;
};

struct ExperimentConfig {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::filesystem::path schema_path;  // empty: infer from the training file
  std::string target = "Attrition";
  std::vector<std::string> exclude;
  std::uint64_t seed = 0;
  bool cross_validate = true;
  std::size_t k_outer = 5;
  std::size_t k_inner = 3;
  std::filesystem::path output_dir = "tabhybrid-out";
  EmitFlags emit;
  bool allow_unknown = false;
  std::size_t shap_rows = 100;
  std::size_t shap_background = 100;
  std::size_t shap_permutations = 64;
  std::vector<ModelEntry> models;

  // Relative paths resolve against `base_dir`. Throws kConfig listing every
  // problem found.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
  static ExperimentConfig ReadFile(const std::filesystem::path& path);
  nlohmann::json ToJson() const;
  // Checks that referenced input files exist.
  void ValidatePaths() const;
};

// Runs the experiment into config.output_dir. Outputs are staged and moved
// into place only when every stage succeeds; otherwise the staged files end
// up under <output_dir>/quarantine.
void RunExperiment(const ExperimentConfig& config, std::size_t jobs, std::ostream& log);

// Entry point behind the `tabhybrid` executable. Returns the exit status:
// 0 on success, 2 for I/O and configuration problems, 1 otherwise.
int Main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tabhybrid::cli
