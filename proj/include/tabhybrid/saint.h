#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "tabhybrid/common.h"
#include "tabhybrid/tabular.h"

namespace tabhybrid::saint {

using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class EmbeddingExport { kClsToken, kFlattenedTokens };

struct SaintConfig {
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t n_heads = 2;
  std::size_t n_layers = 2;
  double dropout = 0.1;
  double learning_rate = 1e-3;
  std::size_t batch_size = 100;
  std::size_t n_epochs = 1;
  std::uint64_t seed = 0;
  EmbeddingExport export_mode = EmbeddingExport::kClsToken;

  // Throws kInvalidArgument on a broken invariant.
  void Validate() const;
  nlohmann::json ToJson() const;
  static SaintConfig FromJson(const nlohmann::json& j);
  bool operator==(const SaintConfig&) const = default;
};

// How one input column becomes a token: a categorical column looks up a row
// of its embedding table, a numerical column is mapped affinely.
struct FeatureSlot {
  bool categorical = false;
  std::size_t cardinality = 0;  // fitted levels; the table holds one extra row for unseen codes
  std::size_t param_index = 0;  // index into embeddings or numeric projections

  bool operator==(const FeatureSlot&) const = default;
};

std::vector<FeatureSlot> SlotsFromColumns(std::span<const ColumnMeta> columns);

struct LinearParams {
  Tensor w;  // in x out
  Tensor b;  // 1 x out
};

struct LayerNormParams {
  Tensor gain;  // 1 x dim
  Tensor bias;  // 1 x dim
};

struct AttentionParams {
  LinearParams query, key, value, output;
};

// Attention, residual + norm, feedforward, residual + norm.
struct SublayerParams {
  AttentionParams attention;
  LayerNormParams norm1;
  LinearParams ff1;  // dim -> hidden
  LinearParams ff2;  // hidden -> dim
  LayerNormParams norm2;
};

struct LayerParams {
  SublayerParams self_attention;   // across a row's tokens
  SublayerParams intersample;      // across batch rows, tokens flattened
};

struct SaintParams {
  std::vector<Tensor> embeddings;  // (cardinality + 1) x d per categorical slot
  std::vector<Tensor> numeric_weight;  // 1 x d per numerical slot
  std::vector<Tensor> numeric_bias;    // 1 x d per numerical slot
  Tensor cls;                          // 1 x d
  std::vector<LayerParams> layers;
  LinearParams head;  // d x 1

  // Visits every tensor with a stable name, in a fixed order.
  void ForEach(const std::function<void(const std::string&, Tensor&)>& fn);
  void ForEach(const std::function<void(const std::string&, const Tensor&)>& fn) const;
  // Same shapes, all zeros.
  SaintParams ZerosLike() const;
  std::size_t ParameterCount() const;
  bool AllFinite() const;
};

class SaintModel {
 public:
  SaintModel() = default;
  // Builds a freshly initialized model from config.seed.
  SaintModel(const SaintConfig& config, std::vector<FeatureSlot> slots);

  const SaintConfig& config() const { return config_; }
  const std::vector<FeatureSlot>& slots() const { return slots_; }
  SaintParams& params() { return params_; }
  const SaintParams& params() const { return params_; }
  std::size_t n_features() const { return slots_.size(); }
  std::size_t n_tokens() const { return slots_.size() + 1; }

  std::uint64_t vocabulary_fingerprint = 0;

  nlohmann::json ToJson() const;
  static SaintModel FromJson(const nlohmann::json& j);

 private:
  SaintConfig config_;
  std::vector<FeatureSlot> slots_;
  SaintParams params_;
};

// (batch x tokens x dim) activations stored as a (batch * tokens) x dim
// row-major tensor; token 0 of each row is the cls token.
struct TokenBatch {
  std::size_t batch = 0;
  std::size_t tokens = 0;
  std::size_t dim = 0;
  Tensor values;

  auto Token(std::size_t row, std::size_t token) const {
    return values.row(static_cast<Eigen::Index>(row * tokens + token));
  }
};

struct BlockOptions {
  std::size_t n_heads = 1;
  double dropout = 0.0;
  bool train_mode = false;
  std::mt19937_64* rng = nullptr;  // required when train_mode and dropout > 0
  // When set, receives the post-softmax attention weights of every
  // (group, head) pair, each a square matrix.
  std::vector<Tensor>* attention_weights = nullptr;
};

TokenBatch EmbedBatch(const Matrix& rows, const SaintModel& model);

TokenBatch SelfAttentionBlock(const TokenBatch& tokens, const SublayerParams& params,
                              const BlockOptions& options);
// Throws kDegenerateBatch in train mode when the batch has a single row.
TokenBatch IntersampleAttentionBlock(const TokenBatch& tokens, const SublayerParams& params,
                                     const BlockOptions& options);

// Treats `rows` as one batch. Dropout draws from `rng` in train mode.
std::vector<double> Forward(const Matrix& rows, const SaintModel& model, bool train_mode,
                            std::mt19937_64* rng = nullptr);

// Final-layer representation of each row within one batch.
Tensor ForwardRepresentation(const Matrix& rows, const SaintModel& model,
                             EmbeddingExport mode);

struct LossAndGradients {
  double loss = 0.0;
  SaintParams gradients;
};

// Mean binary cross-entropy over the batch and its gradient with respect to
// every parameter. `dropout_seed` fixes the dropout masks in train mode.
LossAndGradients ComputeGradients(const SaintModel& model, const Matrix& rows,
                                  std::span<const int> labels, bool train_mode,
                                  std::uint64_t dropout_seed = 0);
double ComputeLoss(const SaintModel& model, const Matrix& rows, std::span<const int> labels,
                   bool train_mode, std::uint64_t dropout_seed = 0);

struct TrainHooks {
  std::function<void(std::size_t epoch, const SaintModel&)> on_epoch;
};

struct TrainResult {
  SaintModel model;
  std::vector<double> epoch_losses;  // mean mini-batch loss per epoch
  double initial_loss = 0.0;         // full-data loss before the first update
};

TrainResult Train(const EncodedMatrix& data, std::span<const int> labels,
                  const SaintConfig& config, const TrainHooks& hooks = {});

struct GradientCheckOptions {
  double step = 1e-4;
  bool train_mode = false;
  std::uint64_t dropout_seed = 0;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  double gradient_norm = 0.0;
  std::size_t n_checked = 0;
};

// Central finite differences over every parameter entry.
GradientCheckReport GradientCheck(const SaintModel& model, const Matrix& rows,
                                  std::span<const int> labels,
                                  const GradientCheckOptions& options = {});

// Inference with fixed batches of config.batch_size; a final partial batch
// is padded by repeating its last row and the padding is discarded.
std::vector<double> PredictLogits(const SaintModel& model, const Matrix& rows);
Matrix ExtractEmbeddings(const SaintModel& model, const Matrix& rows);
std::size_t EmbeddingWidth(const SaintModel& model);

}  // namespace tabhybrid::saint
