#include "tabhybrid/saint.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tabhybrid::saint {

namespace {

constexpr double kLayerNormEps = 1e-8;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double Uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// ---------------------------------------------------------------------------
// Primitive layers with explicit backward passes.

Tensor LinearForward(const Tensor& x, const LinearParams& p) {
  Tensor y = x * p.w;
  y.rowwise() += p.b.row(0);
  return y;
}

// Accumulates parameter gradients into `g` and returns dL/dx.
Tensor LinearBackward(const Tensor& x, const Tensor& dy, const LinearParams& p, LinearParams& g) {
  g.w.noalias() += x.transpose() * dy;
  g.b.row(0) += dy.colwise().sum();
  return dy * p.w.transpose();
}

struct LayerNormCache {
  Tensor xhat;
  Eigen::VectorXd rstd;
};

Tensor LayerNormForward(const Tensor& x, const LayerNormParams& p, LayerNormCache* cache) {
  const Eigen::Index n = x.rows();
  const double dim = static_cast<double>(x.cols());
  Tensor xhat(n, x.cols());
  Eigen::VectorXd rstd(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mean = x.row(r).sum() / dim;
    const auto centered = x.row(r).array() - mean;
    const double var = centered.square().sum() / dim;
    rstd(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(r) = centered * rstd(r);
  }
  Tensor y = xhat.array().rowwise() * p.gain.row(0).array();
  y.rowwise() += p.bias.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

Tensor LayerNormBackward(const Tensor& dy, const LayerNormParams& p, const LayerNormCache& cache,
                         LayerNormParams& g) {
  g.gain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  g.bias.row(0) += dy.colwise().sum();
  const Tensor dxhat = dy.array().rowwise() * p.gain.row(0).array();
  const double dim = static_cast<double>(dy.cols());
  Tensor dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double mean_d = dxhat.row(r).sum() / dim;
    const double mean_dx = dxhat.row(r).dot(cache.xhat.row(r)) / dim;
    dx.row(r) = cache.rstd(r) *
                (dxhat.row(r).array() - mean_d - cache.xhat.row(r).array() * mean_dx).matrix();
  }
  return dx;
}

// tanh approximation of GELU.
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double Gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double GeluGrad(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

// Inverted dropout mask: entries are 0 or 1/keep.
Tensor DropoutMask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  const double keep = 1.0 - rate;
  Tensor mask(rows, cols);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = Uniform01(rng) < keep ? 1.0 / keep : 0.0;
  }
  return mask;
}

bool DropoutActive(const BlockOptions& options) {
  return options.train_mode && options.dropout > 0.0;
}

// ---------------------------------------------------------------------------
// Multi-head scaled dot-product attention over `groups` independent
// sequences of length `seq`, stacked as a (groups * seq) x dim tensor.

struct AttentionCache {
  std::size_t groups = 0;
  std::size_t seq = 0;
  std::size_t heads = 0;
  Tensor x, q, k, v, context;
  std::vector<Tensor> probs;
  std::vector<Tensor> masks;
};

Tensor AttentionForward(const Tensor& x, std::size_t groups, std::size_t seq,
                        const AttentionParams& p, const BlockOptions& options,
                        AttentionCache* cache) {
  const auto dim = static_cast<std::size_t>(x.cols());
  const std::size_t heads = options.n_heads;
  const std::size_t dh = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool dropout = DropoutActive(options);

  Tensor q = LinearForward(x, p.query);
  Tensor k = LinearForward(x, p.key);
  Tensor v = LinearForward(x, p.value);
  Tensor context = Tensor::Zero(x.rows(), x.cols());
  std::vector<Tensor> probs;
  std::vector<Tensor> masks;
  const auto S = static_cast<Eigen::Index>(seq);
  const auto H = static_cast<Eigen::Index>(dh);
  for (std::size_t g = 0; g < groups; ++g) {
    const auto r0 = static_cast<Eigen::Index>(g * seq);
    for (std::size_t h = 0; h < heads; ++h) {
      const auto c0 = static_cast<Eigen::Index>(h * dh);
      Tensor scores = q.block(r0, c0, S, H) * k.block(r0, c0, S, H).transpose() * scale;
      for (Eigen::Index i = 0; i < S; ++i) {
        const double mx = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - mx).exp().matrix();
        scores.row(i) /= scores.row(i).sum();
      }
      if (options.attention_weights) options.attention_weights->push_back(scores);
      if (dropout) {
        Tensor mask = DropoutMask(S, S, options.dropout, *options.rng);
        context.block(r0, c0, S, H) =
            scores.cwiseProduct(mask) * v.block(r0, c0, S, H);
        masks.push_back(std::move(mask));
      } else {
        context.block(r0, c0, S, H) = scores * v.block(r0, c0, S, H);
      }
      probs.push_back(std::move(scores));
    }
  }
  Tensor out = LinearForward(context, p.output);
  if (cache) {
    cache->groups = groups;
    cache->seq = seq;
    cache->heads = heads;
    cache->x = x;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->context = std::move(context);
    cache->probs = std::move(probs);
    cache->masks = std::move(masks);
  }
  return out;
}

Tensor AttentionBackward(const Tensor& dout, const AttentionParams& p, const AttentionCache& c,
                         AttentionParams& g) {
  const Tensor dcontext = LinearBackward(c.context, dout, p.output, g.output);
  const auto dim = static_cast<std::size_t>(c.x.cols());
  const std::size_t dh = dim / c.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const auto S = static_cast<Eigen::Index>(c.seq);
  const auto H = static_cast<Eigen::Index>(dh);
  Tensor dq = Tensor::Zero(c.x.rows(), c.x.cols());
  Tensor dk = Tensor::Zero(c.x.rows(), c.x.cols());
  Tensor dv = Tensor::Zero(c.x.rows(), c.x.cols());
  std::size_t idx = 0;
  for (std::size_t gi = 0; gi < c.groups; ++gi) {
    const auto r0 = static_cast<Eigen::Index>(gi * c.seq);
    for (std::size_t h = 0; h < c.heads; ++h, ++idx) {
      const auto c0 = static_cast<Eigen::Index>(h * dh);
      const Tensor& probs = c.probs[idx];
      const auto dctx = dcontext.block(r0, c0, S, H);
      const auto vb = c.v.block(r0, c0, S, H);
      Tensor dprobs;
      if (c.masks.empty()) {
        dv.block(r0, c0, S, H) = probs.transpose() * dctx;
        dprobs = dctx * vb.transpose();
      } else {
        const Tensor dropped = probs.cwiseProduct(c.masks[idx]);
        dv.block(r0, c0, S, H) = dropped.transpose() * dctx;
        dprobs = (dctx * vb.transpose()).cwiseProduct(c.masks[idx]);
      }
      // Softmax backward, row by row.
      const Eigen::VectorXd inner = dprobs.cwiseProduct(probs).rowwise().sum();
      Tensor dscores = probs.cwiseProduct((dprobs.colwise() - inner));
      dscores *= scale;
      dq.block(r0, c0, S, H) = dscores * c.k.block(r0, c0, S, H);
      dk.block(r0, c0, S, H) = dscores.transpose() * c.q.block(r0, c0, S, H);
    }
  }
  Tensor dx = LinearBackward(c.x, dq, p.query, g.query);
  dx += LinearBackward(c.x, dk, p.key, g.key);
  dx += LinearBackward(c.x, dv, p.value, g.value);
  return dx;
}

// ---------------------------------------------------------------------------
// Sublayer: attention, residual + norm, feedforward, residual + norm.

enum class AttentionAxis { kTokens, kRows };

struct SublayerCache {
  AttentionAxis axis = AttentionAxis::kTokens;
  AttentionCache attention;
  LayerNormCache norm1;
  Tensor y;
  Tensor h_pre;
  Tensor h;
  Tensor ff_mask;
  LayerNormCache norm2;
};

Tensor Flatten(const Tensor& tokens, std::size_t batch) {
  const auto b = static_cast<Eigen::Index>(batch);
  return Eigen::Map<const Tensor>(tokens.data(), b, tokens.size() / b);
}

Tensor Unflatten(const Tensor& flat, std::size_t tokens, std::size_t dim) {
  return Eigen::Map<const Tensor>(flat.data(), static_cast<Eigen::Index>(flat.rows() * tokens),
                                  static_cast<Eigen::Index>(dim));
}

Tensor SublayerForward(const TokenBatch& in, const SublayerParams& p, AttentionAxis axis,
                       const BlockOptions& options, SublayerCache* cache) {
  AttentionCache* attention_cache = cache ? &cache->attention : nullptr;
  Tensor attended;
  if (axis == AttentionAxis::kTokens) {
    attended = AttentionForward(in.values, in.batch, in.tokens, p.attention, options,
                                attention_cache);
  } else {
    const Tensor flat = Flatten(in.values, in.batch);
    attended = Unflatten(AttentionForward(flat, 1, in.batch, p.attention, options,
                                          attention_cache),
                         in.tokens, in.dim);
  }
  LayerNormCache norm1;
  Tensor y = LayerNormForward(in.values + attended, p.norm1, &norm1);
  Tensor h_pre = LinearForward(y, p.ff1);
  Tensor h = h_pre.unaryExpr([](double v) { return Gelu(v); });
  Tensor f = LinearForward(h, p.ff2);
  Tensor ff_mask;
  if (DropoutActive(options)) {
    ff_mask = DropoutMask(f.rows(), f.cols(), options.dropout, *options.rng);
    f = f.cwiseProduct(ff_mask);
  }
  LayerNormCache norm2;
  Tensor z = LayerNormForward(y + f, p.norm2, &norm2);
  if (cache) {
    cache->axis = axis;
    cache->norm1 = std::move(norm1);
    cache->y = std::move(y);
    cache->h_pre = std::move(h_pre);
    cache->h = std::move(h);
    cache->ff_mask = std::move(ff_mask);
    cache->norm2 = std::move(norm2);
  }
  return z;
}

Tensor SublayerBackward(const Tensor& dz, const SublayerParams& p, const SublayerCache& c,
                        std::size_t batch, std::size_t tokens, std::size_t dim,
                        SublayerParams& g) {
  Tensor dr2 = LayerNormBackward(dz, p.norm2, c.norm2, g.norm2);
  Tensor dy = dr2;
  Tensor df = c.ff_mask.size() > 0 ? Tensor(dr2.cwiseProduct(c.ff_mask)) : dr2;
  Tensor dh = LinearBackward(c.h, df, p.ff2, g.ff2);
  Tensor dh_pre = dh.cwiseProduct(c.h_pre.unaryExpr([](double v) { return GeluGrad(v); }));
  dy += LinearBackward(c.y, dh_pre, p.ff1, g.ff1);
  Tensor dr1 = LayerNormBackward(dy, p.norm1, c.norm1, g.norm1);
  Tensor dx = dr1;
  if (c.axis == AttentionAxis::kTokens) {
    dx += AttentionBackward(dr1, p.attention, c.attention, g.attention);
  } else {
    const Tensor dflat = Flatten(dr1, batch);
    dx += Unflatten(AttentionBackward(dflat, p.attention, c.attention, g.attention), tokens, dim);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Whole-model forward with caches.

struct ForwardTrace {
  TokenBatch embedded;
  std::vector<SublayerCache> sublayers;
  Tensor final_tokens;
  std::vector<double> logits;
};

void CheckRows(const Matrix& rows, const SaintModel& model) {
  if (rows.cols() != model.n_features()) {
    throw Error(ErrorCode::kFeatureCountMismatch,
                "SAINT expects " + std::to_string(model.n_features()) + " columns, got " +
                    std::to_string(rows.cols()));
  }
}

ForwardTrace RunForward(const Matrix& rows, const SaintModel& model, bool train_mode,
                        std::mt19937_64* rng, bool keep_caches) {
  CheckRows(rows, model);
  const auto& config = model.config();
  ForwardTrace trace;
  trace.embedded = EmbedBatch(rows, model);
  BlockOptions options;
  options.n_heads = config.n_heads;
  options.dropout = config.dropout;
  options.train_mode = train_mode;
  options.rng = rng;
  if (train_mode && rows.rows() < 2) {
    throw Error(ErrorCode::kDegenerateBatch, "training batch has a single row");
  }
  if (DropoutActive(options) && rng == nullptr) {
    throw Error(ErrorCode::kInvalidArgument, "dropout in train mode needs a generator");
  }
  TokenBatch current = trace.embedded;
  if (keep_caches) trace.sublayers.resize(2 * config.n_layers);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const auto& layer = model.params().layers[l];
    current.values =
        SublayerForward(current, layer.self_attention, AttentionAxis::kTokens, options,
                        keep_caches ? &trace.sublayers[2 * l] : nullptr);
    current.values =
        SublayerForward(current, layer.intersample, AttentionAxis::kRows, options,
                        keep_caches ? &trace.sublayers[2 * l + 1] : nullptr);
  }
  const auto& head = model.params().head;
  trace.logits.resize(rows.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    trace.logits[r] = current.Token(r, 0).dot(head.w.col(0)) + head.b(0, 0);
  }
  trace.final_tokens = std::move(current.values);
  return trace;
}

double BinaryCrossEntropy(std::span<const double> logits, std::span<const int> labels) {
  double total = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double s = logits[i];
    // softplus(s) - y * s, computed stably.
    const double softplus = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    total += softplus - labels[i] * s;
  }
  return total / static_cast<double>(logits.size());
}

void InitUniform(Tensor& t, double bound, std::mt19937_64& rng) {
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    t.data()[i] = (2.0 * Uniform01(rng) - 1.0) * bound;
  }
}

void InitNormal(Tensor& t, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = normal(rng);
}

LinearParams MakeLinear(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  LinearParams p;
  p.w = Tensor(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  p.b = Tensor(1, static_cast<Eigen::Index>(out));
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  InitUniform(p.w, bound, rng);
  InitUniform(p.b, bound, rng);
  return p;
}

LayerNormParams MakeLayerNorm(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Tensor::Ones(1, d), Tensor::Zero(1, d)};
}

SublayerParams MakeSublayer(std::size_t attention_dim, std::size_t token_dim, std::size_t hidden,
                            std::mt19937_64& rng) {
  SublayerParams s;
  s.attention.query = MakeLinear(attention_dim, attention_dim, rng);
  s.attention.key = MakeLinear(attention_dim, attention_dim, rng);
  s.attention.value = MakeLinear(attention_dim, attention_dim, rng);
  s.attention.output = MakeLinear(attention_dim, attention_dim, rng);
  s.norm1 = MakeLayerNorm(token_dim);
  s.ff1 = MakeLinear(token_dim, hidden, rng);
  s.ff2 = MakeLinear(hidden, token_dim, rng);
  s.norm2 = MakeLayerNorm(token_dim);
  return s;
}

nlohmann::json TensorToJson(const Tensor& t) {
  return {{"rows", t.rows()},
          {"cols", t.cols()},
          {"data", std::vector<double>(t.data(), t.data() + t.size())}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void SaintConfig::Validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (embed_dim == 0 || n_heads == 0 || hidden_dim == 0 || n_layers == 0) {
    fail("SAINT dimensions must be positive");
  }
  if (embed_dim % n_heads != 0) fail("embed_dim must be divisible by n_heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (batch_size < 2) fail("batch_size must be at least 2");
}

nlohmann::json SaintConfig::ToJson() const {
  return {{"embed_dim", embed_dim},
          {"hidden_dim", hidden_dim},
          {"n_heads", n_heads},
          {"n_layers", n_layers},
          {"dropout", dropout},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"n_epochs", n_epochs},
          {"seed", seed},
          {"export", export_mode == EmbeddingExport::kClsToken ? "cls" : "tokens"}};
}

SaintConfig SaintConfig::FromJson(const nlohmann::json& j) {
  SaintConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.dropout = j.value("dropout", c.dropout);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.n_epochs = j.value("n_epochs", c.n_epochs);
  c.seed = j.value("seed", c.seed);
  const std::string mode = j.value("export", std::string("cls"));
  if (mode == "cls") {
    c.export_mode = EmbeddingExport::kClsToken;
  } else if (mode == "tokens") {
    c.export_mode = EmbeddingExport::kFlattenedTokens;
  } else {
    throw Error(ErrorCode::kConfig, "unknown SAINT export mode '" + mode + "'");
  }
  return c;
}

std::vector<FeatureSlot> SlotsFromColumns(std::span<const ColumnMeta> columns) {
  std::vector<FeatureSlot> slots;
  std::size_t n_categorical = 0;
  std::size_t n_numerical = 0;
  for (const auto& meta : columns) {
    FeatureSlot slot;
    if (meta.encoding == ColumnEncoding::kOrdinal) {
      slot.categorical = true;
      try {
        slot.cardinality = std::stoul(meta.detail);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kInvalidArgument,
                    "ordinal column '" + meta.source_feature + "' lacks a level count");
      }
      slot.param_index = n_categorical++;
    } else if (meta.encoding == ColumnEncoding::kPassthrough) {
      slot.param_index = n_numerical++;
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "SAINT takes ordinal-encoded input; got a " +
                      std::string(ColumnEncodingName(meta.encoding)) + " column");
    }
    slots.push_back(slot);
  }
  return slots;
}

// ---------------------------------------------------------------------------
// Parameters

void SaintParams::ForEach(const std::function<void(const std::string&, Tensor&)>& fn) {
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    fn("embedding[" + std::to_string(i) + "]", embeddings[i]);
  }
  for (std::size_t i = 0; i < numeric_weight.size(); ++i) {
    fn("numeric_weight[" + std::to_string(i) + "]", numeric_weight[i]);
    fn("numeric_bias[" + std::to_string(i) + "]", numeric_bias[i]);
  }
  fn("cls", cls);
  auto linear = [&fn](const std::string& prefix, LinearParams& p) {
    fn(prefix + ".w", p.w);
    fn(prefix + ".b", p.b);
  };
  auto norm = [&fn](const std::string& prefix, LayerNormParams& p) {
    fn(prefix + ".gain", p.gain);
    fn(prefix + ".bias", p.bias);
  };
  auto sublayer = [&](const std::string& prefix, SublayerParams& s) {
    linear(prefix + ".query", s.attention.query);
    linear(prefix + ".key", s.attention.key);
    linear(prefix + ".value", s.attention.value);
    linear(prefix + ".output", s.attention.output);
    norm(prefix + ".norm1", s.norm1);
    linear(prefix + ".ff1", s.ff1);
    linear(prefix + ".ff2", s.ff2);
    norm(prefix + ".norm2", s.norm2);
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string prefix = "layer[" + std::to_string(l) + "]";
    sublayer(prefix + ".self", layers[l].self_attention);
    sublayer(prefix + ".intersample", layers[l].intersample);
  }
  linear("head", head);
}

void SaintParams::ForEach(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<SaintParams*>(this)->ForEach(
      [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

SaintParams SaintParams::ZerosLike() const {
  SaintParams out = *this;
  out.ForEach([](const std::string&, Tensor& t) { t.setZero(); });
  return out;
}

std::size_t SaintParams::ParameterCount() const {
  std::size_t n = 0;
  ForEach([&n](const std::string&, const Tensor& t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

bool SaintParams::AllFinite() const {
  bool finite = true;
  ForEach([&finite](const std::string&, const Tensor& t) {
    if (!t.allFinite()) finite = false;
  });
  return finite;
}

SaintModel::SaintModel(const SaintConfig& config, std::vector<FeatureSlot> slots)
    : config_(config), slots_(std::move(slots)) {
  config_.Validate();
  std::mt19937_64 rng(DeriveSeed(config_.seed, {0x5a17}));
  const auto d = static_cast<Eigen::Index>(config_.embed_dim);
  for (const auto& slot : slots_) {
    if (slot.categorical) {
      Tensor table(static_cast<Eigen::Index>(slot.cardinality + 1), d);
      InitNormal(table, 0.1, rng);
      params_.embeddings.push_back(std::move(table));
    } else {
      Tensor w(1, d);
      Tensor b(1, d);
      InitUniform(w, 1.0, rng);
      InitUniform(b, 1.0, rng);
      params_.numeric_weight.push_back(std::move(w));
      params_.numeric_bias.push_back(std::move(b));
    }
  }
  params_.cls = Tensor(1, d);
  InitNormal(params_.cls, 0.1, rng);
  const std::size_t flat = n_tokens() * config_.embed_dim;
  for (std::size_t l = 0; l < config_.n_layers; ++l) {
    LayerParams layer;
    layer.self_attention = MakeSublayer(config_.embed_dim, config_.embed_dim,
                                        config_.hidden_dim, rng);
    layer.intersample = MakeSublayer(flat, config_.embed_dim, config_.hidden_dim, rng);
    params_.layers.push_back(std::move(layer));
  }
  params_.head = MakeLinear(config_.embed_dim, 1, rng);
}

nlohmann::json SaintModel::ToJson() const {
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& s : slots_) {
    slots.push_back({{"categorical", s.categorical},
                     {"cardinality", s.cardinality},
                     {"param_index", s.param_index}});
  }
  nlohmann::json tensors = nlohmann::json::object();
  params_.ForEach([&tensors](const std::string& name, const Tensor& t) {
    tensors[name] = TensorToJson(t);
  });
  return {{"format", "tabhybrid.saint.v1"},
          {"config", config_.ToJson()},
          {"slots", slots},
          {"vocabulary_fingerprint", vocabulary_fingerprint},
          {"tensors", tensors}};
}

SaintModel SaintModel::FromJson(const nlohmann::json& j) {
  std::vector<FeatureSlot> slots;
  for (const auto& s : j.at("slots")) {
    slots.push_back({s.at("categorical").get<bool>(), s.at("cardinality").get<std::size_t>(),
                     s.at("param_index").get<std::size_t>()});
  }
  SaintModel model(SaintConfig::FromJson(j.at("config")), std::move(slots));
  model.vocabulary_fingerprint = j.value("vocabulary_fingerprint", std::uint64_t{0});
  const auto& tensors = j.at("tensors");
  model.params_.ForEach([&tensors](const std::string& name, Tensor& t) {
    const auto& entry = tensors.at(name);
    const auto rows = entry.at("rows").get<Eigen::Index>();
    const auto cols = entry.at("cols").get<Eigen::Index>();
    const auto data = entry.at("data").get<std::vector<double>>();
    if (rows != t.rows() || cols != t.cols() || static_cast<Eigen::Index>(data.size()) != t.size()) {
      throw Error(ErrorCode::kSchemaMismatch, "tensor shape mismatch for " + name);
    }
    std::copy(data.begin(), data.end(), t.data());
  });
  return model;
}

// ---------------------------------------------------------------------------
// Blocks

TokenBatch EmbedBatch(const Matrix& rows, const SaintModel& model) {
  CheckRows(rows, model);
  const auto& params = model.params();
  TokenBatch out;
  out.batch = rows.rows();
  out.tokens = model.n_tokens();
  out.dim = model.config().embed_dim;
  out.values = Tensor(static_cast<Eigen::Index>(out.batch * out.tokens),
                      static_cast<Eigen::Index>(out.dim));
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const auto base = static_cast<Eigen::Index>(r * out.tokens);
    out.values.row(base) = params.cls.row(0);
    for (std::size_t f = 0; f < model.n_features(); ++f) {
      const auto& slot = model.slots()[f];
      const double x = rows(r, f);
      const auto t = base + static_cast<Eigen::Index>(f + 1);
      if (slot.categorical) {
        if (!(x >= 0.0) || x > static_cast<double>(slot.cardinality) || x != std::floor(x)) {
          throw Error(ErrorCode::kCodeOutOfRange,
                      "code " + FormatDouble(x) + " for feature " + std::to_string(f));
        }
        out.values.row(t) = params.embeddings[slot.param_index].row(static_cast<Eigen::Index>(x));
      } else {
        out.values.row(t) = x * params.numeric_weight[slot.param_index].row(0) +
                            params.numeric_bias[slot.param_index].row(0);
      }
    }
  }
  return out;
}

TokenBatch SelfAttentionBlock(const TokenBatch& tokens, const SublayerParams& params,
                              const BlockOptions& options) {
  TokenBatch out = tokens;
  out.values = SublayerForward(tokens, params, AttentionAxis::kTokens, options, nullptr);
  return out;
}

TokenBatch IntersampleAttentionBlock(const TokenBatch& tokens, const SublayerParams& params,
                                     const BlockOptions& options) {
  if (options.train_mode && tokens.batch < 2) {
    throw Error(ErrorCode::kDegenerateBatch, "intersample attention needs at least 2 rows");
  }
  TokenBatch out = tokens;
  out.values = SublayerForward(tokens, params, AttentionAxis::kRows, options, nullptr);
  return out;
}

std::vector<double> Forward(const Matrix& rows, const SaintModel& model, bool train_mode,
                            std::mt19937_64* rng) {
  return RunForward(rows, model, train_mode, rng, false).logits;
}

Tensor ForwardRepresentation(const Matrix& rows, const SaintModel& model,
                             EmbeddingExport mode) {
  const ForwardTrace trace = RunForward(rows, model, false, nullptr, false);
  const auto tokens = static_cast<Eigen::Index>(model.n_tokens());
  const auto d = static_cast<Eigen::Index>(model.config().embed_dim);
  const auto n = static_cast<Eigen::Index>(rows.rows());
  if (mode == EmbeddingExport::kFlattenedTokens) {
    return Eigen::Map<const Tensor>(trace.final_tokens.data(), n, tokens * d);
  }
  Tensor out(n, d);
  for (Eigen::Index r = 0; r < n; ++r) out.row(r) = trace.final_tokens.row(r * tokens);
  return out;
}

// ---------------------------------------------------------------------------
// Gradients

LossAndGradients ComputeGradients(const SaintModel& model, const Matrix& rows,
                                  std::span<const int> labels, bool train_mode,
                                  std::uint64_t dropout_seed) {
  if (labels.size() != rows.rows()) throw Error(ErrorCode::kLengthMismatch, "labels vs rows");
  std::mt19937_64 rng(dropout_seed);
  const ForwardTrace trace = RunForward(rows, model, train_mode, &rng, true);
  const auto& config = model.config();
  const auto& params = model.params();
  LossAndGradients result;
  result.loss = BinaryCrossEntropy(trace.logits, labels);
  result.gradients = params.ZerosLike();
  SaintParams& grads = result.gradients;

  const std::size_t batch = rows.rows();
  const std::size_t tokens = model.n_tokens();
  const std::size_t dim = config.embed_dim;
  const double inv_n = 1.0 / static_cast<double>(batch);

  // Head: only the cls token of each row feeds the logit.
  Tensor dfinal = Tensor::Zero(trace.final_tokens.rows(), trace.final_tokens.cols());
  for (std::size_t r = 0; r < batch; ++r) {
    const double dlogit = (Sigmoid(trace.logits[r]) - labels[r]) * inv_n;
    const auto cls_row = static_cast<Eigen::Index>(r * tokens);
    grads.head.w.col(0) += dlogit * trace.final_tokens.row(cls_row).transpose();
    grads.head.b(0, 0) += dlogit;
    dfinal.row(cls_row) = dlogit * params.head.w.col(0).transpose();
  }

  Tensor d = std::move(dfinal);
  for (std::size_t l = config.n_layers; l-- > 0;) {
    d = SublayerBackward(d, params.layers[l].intersample, trace.sublayers[2 * l + 1], batch,
                         tokens, dim, grads.layers[l].intersample);
    d = SublayerBackward(d, params.layers[l].self_attention, trace.sublayers[2 * l], batch,
                         tokens, dim, grads.layers[l].self_attention);
  }

  // Embedding scatter.
  for (std::size_t r = 0; r < batch; ++r) {
    const auto base = static_cast<Eigen::Index>(r * tokens);
    grads.cls.row(0) += d.row(base);
    for (std::size_t f = 0; f < model.n_features(); ++f) {
      const auto& slot = model.slots()[f];
      const auto t = base + static_cast<Eigen::Index>(f + 1);
      if (slot.categorical) {
        grads.embeddings[slot.param_index].row(static_cast<Eigen::Index>(rows(r, f))) += d.row(t);
      } else {
        grads.numeric_weight[slot.param_index].row(0) += rows(r, f) * d.row(t);
        grads.numeric_bias[slot.param_index].row(0) += d.row(t);
      }
    }
  }
  return result;
}

double ComputeLoss(const SaintModel& model, const Matrix& rows, std::span<const int> labels,
                   bool train_mode, std::uint64_t dropout_seed) {
  if (labels.size() != rows.rows()) throw Error(ErrorCode::kLengthMismatch, "labels vs rows");
  std::mt19937_64 rng(dropout_seed);
  const ForwardTrace trace = RunForward(rows, model, train_mode, &rng, false);
  return BinaryCrossEntropy(trace.logits, labels);
}

GradientCheckReport GradientCheck(const SaintModel& model, const Matrix& rows,
                                  std::span<const int> labels,
                                  const GradientCheckOptions& options) {
  const LossAndGradients analytic =
      ComputeGradients(model, rows, labels, options.train_mode, options.dropout_seed);
  std::vector<const Tensor*> grads;
  analytic.gradients.ForEach(
      [&grads](const std::string&, const Tensor& t) { grads.push_back(&t); });

  SaintModel probe = model;
  GradientCheckReport report;
  double norm_sq = 0;
  std::size_t index = 0;
  probe.params().ForEach([&](const std::string& name, Tensor& t) {
    const Tensor& g = *grads[index++];
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double original = t.data()[i];
      t.data()[i] = original + options.step;
      const double plus =
          ComputeLoss(probe, rows, labels, options.train_mode, options.dropout_seed);
      t.data()[i] = original - options.step;
      const double minus =
          ComputeLoss(probe, rows, labels, options.train_mode, options.dropout_seed);
      t.data()[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double exact = g.data()[i];
      norm_sq += exact * exact;
      // Floored at 1e-6.
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-6});
      const double rel = std::abs(exact - numeric) / denom;
      ++report.n_checked;
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_parameter = name + "[" + std::to_string(i) + "]";
      }
    }
  });
  report.gradient_norm = std::sqrt(norm_sq);
  return report;
}

// ---------------------------------------------------------------------------
// Training

TrainResult Train(const EncodedMatrix& data, std::span<const int> labels,
                  const SaintConfig& config, const TrainHooks& hooks) {
  config.Validate();
  if (labels.size() != data.rows()) throw Error(ErrorCode::kLengthMismatch, "labels vs rows");
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(labels.size())) {
    throw Error(ErrorCode::kSingleClassInput, "SAINT training needs both classes");
  }
  if (data.rows() < 2) throw Error(ErrorCode::kDegenerateBatch, "need at least 2 rows");

  TrainResult result;
  result.model = SaintModel(config, SlotsFromColumns(data.column_meta));
  SaintModel& model = result.model;
  {
    const auto logits = PredictLogits(model, data.values);
    result.initial_loss = BinaryCrossEntropy(logits, labels);
  }

  SaintParams first_moment = model.params().ZerosLike();
  SaintParams second_moment = model.params().ZerosLike();
  std::vector<Tensor*> m_ptrs;
  std::vector<Tensor*> v_ptrs;
  first_moment.ForEach([&m_ptrs](const std::string&, Tensor& t) { m_ptrs.push_back(&t); });
  second_moment.ForEach([&v_ptrs](const std::string&, Tensor& t) { v_ptrs.push_back(&t); });

  const std::size_t n = data.rows();
  std::vector<std::size_t> order(n);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.n_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(DeriveSeed(config.seed, {0x5f1e, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    // Batch boundaries; a trailing single row joins the previous batch.
    std::vector<std::size_t> bounds;
    for (std::size_t start = 0; start < n; start += config.batch_size) bounds.push_back(start);
    bounds.push_back(n);
    if (bounds.size() > 2 && n - bounds[bounds.size() - 2] == 1) {
      bounds.erase(bounds.end() - 2);
    }

    double epoch_loss = 0;
    const std::size_t n_batches = bounds.size() - 1;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::span<const std::size_t> idx(order.data() + bounds[b], bounds[b + 1] - bounds[b]);
      const Matrix rows = data.values.SelectRows(idx);
      std::vector<int> batch_labels;
      batch_labels.reserve(idx.size());
      for (std::size_t i : idx) batch_labels.push_back(labels[i]);

      LossAndGradients lg = ComputeGradients(model, rows, batch_labels, true,
                                             DeriveSeed(config.seed, {0xd209, epoch, b}));
      if (!std::isfinite(lg.loss)) {
        throw Error(ErrorCode::kNonFiniteLoss, "loss diverged at epoch " +
                                                    std::to_string(epoch) + ", batch " +
                                                    std::to_string(b));
      }
      epoch_loss += lg.loss;

      ++step;
      const double lr = config.learning_rate;
      const double correction1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
      std::vector<const Tensor*> g_ptrs;
      lg.gradients.ForEach(
          [&g_ptrs](const std::string&, const Tensor& t) { g_ptrs.push_back(&t); });
      std::size_t k = 0;
      model.params().ForEach([&](const std::string&, Tensor& p) {
        const Tensor& g = *g_ptrs[k];
        Tensor& m = *m_ptrs[k];
        Tensor& v = *v_ptrs[k];
        ++k;
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
        v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
        p.array() -= lr * (m.array() / correction1) /
                     ((v.array() / correction2).sqrt() + kAdamEps);
      });
      if (!model.params().AllFinite()) {
        throw Error(ErrorCode::kNonFiniteLoss, "non-finite parameters after update");
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n_batches));
    if (hooks.on_epoch) hooks.on_epoch(epoch, model);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Inference

namespace {

template <typename Emit>
void ForEachInferenceBatch(const SaintModel& model, const Matrix& rows, Emit&& emit) {
  const std::size_t batch = model.config().batch_size;
  for (std::size_t start = 0; start < rows.rows(); start += batch) {
    const std::size_t real = std::min(batch, rows.rows() - start);
    std::vector<std::size_t> idx(batch);
    for (std::size_t i = 0; i < batch; ++i) idx[i] = start + std::min(i, real - 1);
    emit(start, real, rows.SelectRows(idx));
  }
}

}  // namespace

std::vector<double> PredictLogits(const SaintModel& model, const Matrix& rows) {
  CheckRows(rows, model);
  std::vector<double> out(rows.rows());
  ForEachInferenceBatch(model, rows, [&](std::size_t start, std::size_t real, const Matrix& b) {
    const auto logits = Forward(b, model, false);
    std::copy(logits.begin(), logits.begin() + static_cast<std::ptrdiff_t>(real),
              out.begin() + static_cast<std::ptrdiff_t>(start));
  });
  return out;
}

std::size_t EmbeddingWidth(const SaintModel& model) {
  return model.config().export_mode == EmbeddingExport::kClsToken
             ? model.config().embed_dim
             : model.n_tokens() * model.config().embed_dim;
}

Matrix ExtractEmbeddings(const SaintModel& model, const Matrix& rows) {
  CheckRows(rows, model);
  const std::size_t width = EmbeddingWidth(model);
  Matrix out(rows.rows(), width);
  ForEachInferenceBatch(model, rows, [&](std::size_t start, std::size_t real, const Matrix& b) {
    const Tensor rep = ForwardRepresentation(b, model, model.config().export_mode);
    for (std::size_t r = 0; r < real; ++r) {
      for (std::size_t c = 0; c < width; ++c) {
        out(start + r, c) = rep(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  });
  return out;
}

}  // namespace tabhybrid::saint
