#include "tabhybrid/gbdt.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tabhybrid::gbdt {

void GbdtConfig::Validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidArgument, what); };
  if (!(learning_rate > 0)) fail("learning_rate must be positive");
  if (!(subsample > 0 && subsample <= 1)) fail("subsample must lie in (0, 1]");
  if (!(colsample > 0 && colsample <= 1)) fail("colsample must lie in (0, 1]");
  if (n_bins < 2) fail("n_bins must be at least 2");
  if (n_bins > 65535) fail("n_bins must fit in 16 bits");
  if (growth == Growth::kLeafWise && num_leaves < 1) fail("num_leaves must be positive");
  if (min_child_weight < 0 || reg_lambda < 0 || reg_alpha < 0 || gamma < 0) {
    fail("regularization parameters must be non-negative");
  }
}

nlohmann::json GbdtConfig::ToJson() const {
  return {{"growth", growth == Growth::kDepthWise ? "depth_wise" : "leaf_wise"},
          {"n_estimators", n_estimators},
          {"max_depth", max_depth},
          {"num_leaves", num_leaves},
          {"learning_rate", learning_rate},
          {"subsample", subsample},
          {"colsample", colsample},
          {"min_child_weight", min_child_weight},
          {"reg_lambda", reg_lambda},
          {"reg_alpha", reg_alpha},
          {"gamma", gamma},
          {"n_bins", n_bins},
          {"seed", seed}};
}

GbdtConfig GbdtConfig::FromJson(const nlohmann::json& j) {
  GbdtConfig c;
  const std::string growth = j.value("growth", std::string("depth_wise"));
  if (growth == "depth_wise") {
    c.growth = Growth::kDepthWise;
  } else if (growth == "leaf_wise") {
    c.growth = Growth::kLeafWise;
  } else {
    throw Error(ErrorCode::kConfig, "unknown growth '" + growth + "'");
  }
  c.n_estimators = j.value("n_estimators", c.n_estimators);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.num_leaves = j.value("num_leaves", c.num_leaves);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.subsample = j.value("subsample", c.subsample);
  c.colsample = j.value("colsample", c.colsample);
  c.min_child_weight = j.value("min_child_weight", c.min_child_weight);
  c.reg_lambda = j.value("reg_lambda", c.reg_lambda);
  c.reg_alpha = j.value("reg_alpha", c.reg_alpha);
  c.gamma = j.value("gamma", c.gamma);
  c.n_bins = j.value("n_bins", c.n_bins);
  c.seed = j.value("seed", c.seed);
  return c;
}

// ---------------------------------------------------------------------------

std::size_t Tree::LeafIndex(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[n.feature] < n.threshold ? n.left : n.right);
  }
  return i;
}

std::size_t Tree::Depth() const {
  std::vector<std::size_t> depth(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf) continue;
    depth[static_cast<std::size_t>(nodes[i].left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
    best = std::max(best, depth[i] + 1);
  }
  return best;
}

std::size_t Tree::LeafCount() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf; }));
}

nlohmann::json GbdtModel::ToJson() const {
  nlohmann::json trees_json = nlohmann::json::array();
  for (const auto& tree : trees) {
    std::vector<int> left, right, feature, is_leaf, default_left;
    std::vector<double> threshold, value, cover, gain;
    std::vector<std::size_t> count;
    for (const auto& n : tree.nodes) {
      left.push_back(n.left);
      right.push_back(n.right);
      feature.push_back(static_cast<int>(n.feature));
      is_leaf.push_back(n.is_leaf ? 1 : 0);
      default_left.push_back(n.default_direction == DefaultDirection::kLeft ? 1 : 0);
      threshold.push_back(n.threshold);
      value.push_back(n.value);
      cover.push_back(n.cover);
      gain.push_back(n.gain);
      count.push_back(n.count);
    }
    nlohmann::json t = {{"left", left},           {"right", right},   {"feature", feature},
                        {"is_leaf", is_leaf},     {"threshold", threshold},
                        {"value", value},         {"gain", gain},     {"count", count},
                        {"default_left", default_left}};
    if (has_cover) t["cover"] = cover;
    trees_json.push_back(std::move(t));
  }
  return {{"format", "tabhybrid.gbdt.v1"},
          {"base_score", base_score},
          {"feature_count", feature_count},
          {"config", config.ToJson()},
          {"trees", trees_json}};
}

GbdtModel GbdtModel::FromJson(const nlohmann::json& j) {
  GbdtModel model;
  model.base_score = j.at("base_score").get<double>();
  model.feature_count = j.at("feature_count").get<std::size_t>();
  model.config = GbdtConfig::FromJson(j.at("config"));
  for (const auto& t : j.at("trees")) {
    const auto left = t.at("left").get<std::vector<int>>();
    const auto right = t.at("right").get<std::vector<int>>();
    const auto feature = t.at("feature").get<std::vector<int>>();
    const auto is_leaf = t.at("is_leaf").get<std::vector<int>>();
    const auto threshold = t.at("threshold").get<std::vector<double>>();
    const auto value = t.at("value").get<std::vector<double>>();
    const std::size_t n = left.size();
    std::vector<double> cover(n, 0.0), gain(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    std::vector<int> default_left(n, 1);
    if (t.contains("cover")) {
      cover = t.at("cover").get<std::vector<double>>();
    } else {
      model.has_cover = false;
    }
    if (t.contains("gain")) gain = t.at("gain").get<std::vector<double>>();
    if (t.contains("count")) count = t.at("count").get<std::vector<std::size_t>>();
    if (t.contains("default_left")) default_left = t.at("default_left").get<std::vector<int>>();
    Tree tree;
    for (std::size_t i = 0; i < n; ++i) {
      TreeNode node;
      node.is_leaf = is_leaf.at(i) != 0;
      node.left = left.at(i);
      node.right = right.at(i);
      node.feature = static_cast<std::size_t>(feature.at(i));
      node.threshold = threshold.at(i);
      node.value = value.at(i);
      node.cover = cover.at(i);
      node.gain = gain.at(i);
      node.count = count.at(i);
      node.default_direction = default_left.at(i) ? DefaultDirection::kLeft : DefaultDirection::kRight;
      if (!node.is_leaf && (node.left <= 0 || node.right <= 0 ||
                            static_cast<std::size_t>(std::max(node.left, node.right)) >= n)) {
        throw Error(ErrorCode::kSchemaMismatch, "malformed tree node");
      }
      tree.nodes.push_back(node);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// ---------------------------------------------------------------------------

double SplitGain(double gl, double hl, double gr, double hr, double reg_lambda, double gamma) {
  const double g = gl + gr;
  const double h = hl + hr;
  return 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda) -
                g * g / (h + reg_lambda)) -
         gamma;
}

double SoftThreshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

double SplitGainL1(double gl, double hl, double gr, double hr, double reg_lambda,
                   double reg_alpha, double gamma) {
  if (reg_alpha == 0.0) return SplitGain(gl, hl, gr, hr, reg_lambda, gamma);
  const double tl = SoftThreshold(gl, reg_alpha);
  const double tr = SoftThreshold(gr, reg_alpha);
  const double t = SoftThreshold(gl + gr, reg_alpha);
  return 0.5 * (tl * tl / (hl + reg_lambda) + tr * tr / (hr + reg_lambda) -
                t * t / (hl + hr + reg_lambda)) -
         gamma;
}

double LeafWeight(double g, double h, double reg_lambda, double reg_alpha) {
  const double denom = h + reg_lambda;
  if (denom <= 0) return 0.0;
  return -SoftThreshold(g, reg_alpha) / denom;
}

double LogLoss(std::span<const double> margins, std::span<const int> labels) {
  double total = 0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    const double s = margins[i];
    const double softplus = s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
    total += softplus - labels[i] * s;
  }
  return margins.empty() ? 0.0 : total / static_cast<double>(margins.size());
}

// ---------------------------------------------------------------------------

BinMapper BinMapper::Fit(const Matrix& x, std::size_t n_bins) {
  BinMapper mapper;
  mapper.cuts_.resize(x.cols());
  std::vector<double> column(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t r = 0; r < x.rows(); ++r) column[r] = x(r, f);
    std::sort(column.begin(), column.end());
    std::vector<double> unique;
    for (double v : column) {
      if (unique.empty() || v != unique.back()) unique.push_back(v);
    }
    auto& cuts = mapper.cuts_[f];
    if (unique.size() <= n_bins) {
      for (std::size_t i = 1; i < unique.size(); ++i) {
        cuts.push_back(0.5 * (unique[i - 1] + unique[i]));
      }
      continue;
    }
    const std::size_t n = column.size();
    for (std::size_t q = 1; q < n_bins; ++q) {
      const double v = column[q * n / n_bins];
      const auto it = std::lower_bound(unique.begin(), unique.end(), v);
      if (it == unique.begin()) continue;
      const double cut = 0.5 * (*(it - 1) + *it);
      if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
    }
  }
  return mapper;
}

std::uint16_t BinMapper::Bin(std::size_t feature, double value) const {
  const auto& c = cuts_[feature];
  return static_cast<std::uint16_t>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
}

namespace {

struct BinStat {
  double g = 0;
  double h = 0;
  std::size_t n = 0;
};

// Per-feature histograms over one node's rows, laid out feature-major with
// per-feature offsets.
struct Histogram {
  std::vector<BinStat> bins;

  void Subtract(const Histogram& other) {
    for (std::size_t i = 0; i < bins.size(); ++i) {
      bins[i].g -= other.bins[i].g;
      bins[i].h -= other.bins[i].h;
      bins[i].n -= other.bins[i].n;
    }
  }
};

class BinnedData {
 public:
  BinnedData(const Matrix& x, const BinMapper& mapper) : n_rows_(x.rows()) {
    offsets_.push_back(0);
    for (std::size_t f = 0; f < mapper.n_features(); ++f) {
      offsets_.push_back(offsets_.back() + mapper.n_bins(f));
    }
    codes_.resize(x.rows() * x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
      for (std::size_t r = 0; r < x.rows(); ++r) codes_[f * n_rows_ + r] = mapper.Bin(f, x(r, f));
    }
  }

  std::size_t total_bins() const { return offsets_.back(); }
  std::size_t offset(std::size_t f) const { return offsets_[f]; }
  std::size_t n_bins(std::size_t f) const { return offsets_[f + 1] - offsets_[f]; }
  std::uint16_t code(std::size_t f, std::size_t r) const { return codes_[f * n_rows_ + r]; }

  Histogram Build(std::span<const std::size_t> rows, std::span<const std::size_t> features,
                  std::span<const double> grad, std::span<const double> hess) const {
    Histogram hist;
    hist.bins.assign(total_bins(), BinStat{});
    for (std::size_t f : features) {
      BinStat* base = hist.bins.data() + offsets_[f];
      const std::uint16_t* col = codes_.data() + f * n_rows_;
      for (std::size_t r : rows) {
        BinStat& s = base[col[r]];
        s.g += grad[r];
        s.h += hess[r];
        ++s.n;
      }
    }
    return hist;
  }

 private:
  std::size_t n_rows_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint16_t> codes_;
};

SplitCandidate ScanHistogram(const Histogram& hist, const BinnedData& data,
                             const BinMapper& mapper, std::span<const std::size_t> features,
                             const GbdtConfig& config) {
  SplitCandidate best;
  for (std::size_t f : features) {
    const std::size_t nb = data.n_bins(f);
    const BinStat* bins = hist.bins.data() + data.offset(f);
    double g_total = 0, h_total = 0;
    std::size_t n_total = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      g_total += bins[b].g;
      h_total += bins[b].h;
      n_total += bins[b].n;
    }
    double gl = 0, hl = 0;
    std::size_t nl = 0;
    for (std::size_t b = 0; b + 1 < nb; ++b) {
      gl += bins[b].g;
      hl += bins[b].h;
      nl += bins[b].n;
      if (nl == 0) continue;
      if (nl == n_total) break;
      const double gr = g_total - gl;
      const double hr = h_total - hl;
      if (hl < config.min_child_weight || hr < config.min_child_weight) continue;
      const double gain =
          SplitGainL1(gl, hl, gr, hr, config.reg_lambda, config.reg_alpha, config.gamma);
      if (!(gain > 0.0)) continue;
      if (!best.valid || gain > best.gain) {
        best = {true, f, b, mapper.cuts(f)[b], gain, gl, hl, gr, hr};
      }
    }
  }
  return best;
}

struct NodeWork {
  std::size_t node = 0;
  std::size_t depth = 0;
  std::vector<std::size_t> rows;
  Histogram hist;
  SplitCandidate split;
  double g = 0, h = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedData& data, const BinMapper& mapper,
              std::span<const double> grad, std::span<const double> hess,
              std::span<const std::size_t> features, const GbdtConfig& config)
      : data_(data), mapper_(mapper), grad_(grad), hess_(hess), features_(features),
        config_(config) {}

  Tree Build(std::vector<std::size_t> rows) {
    tree_.nodes.assign(1, TreeNode{});
    NodeWork root = MakeNode(0, std::move(rows), 0, nullptr, nullptr);
    if (config_.growth == Growth::kDepthWise) {
      GrowDepthWise(std::move(root));
    } else {
      GrowLeafWise(std::move(root));
    }
    return std::move(tree_);
  }

 private:
  // Fills node `id` and its split search. The histogram is built directly,
  // or derived as parent minus sibling when both are given.
  NodeWork MakeNode(std::size_t id, std::vector<std::size_t> rows, std::size_t depth,
                    const Histogram* parent, const Histogram* sibling) {
    NodeWork w;
    w.node = id;
    w.depth = depth;
    w.rows = std::move(rows);
    for (std::size_t r : w.rows) {
      w.g += grad_[r];
      w.h += hess_[r];
    }
    TreeNode& node = tree_.nodes[id];
    node.cover = w.h;
    node.count = w.rows.size();
    node.value = LeafWeight(w.g, w.h, config_.reg_lambda, config_.reg_alpha);
    if (parent != nullptr && sibling != nullptr) {
      w.hist = *parent;
      w.hist.Subtract(*sibling);
    } else {
      w.hist = data_.Build(w.rows, features_, grad_, hess_);
    }
    w.split = ScanHistogram(w.hist, data_, mapper_, features_, config_);
    return w;
  }

  std::pair<NodeWork, NodeWork> Split(NodeWork& w) {
    const auto& s = w.split;
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : w.rows) {
      (data_.code(s.feature, r) <= s.bin ? left_rows : right_rows).push_back(r);
    }
    const std::size_t left_id = tree_.nodes.size();
    const std::size_t right_id = left_id + 1;
    tree_.nodes.resize(tree_.nodes.size() + 2);
    TreeNode& parent = tree_.nodes[w.node];
    parent.is_leaf = false;
    parent.feature = s.feature;
    parent.threshold = s.threshold;
    parent.gain = s.gain;
    parent.left = static_cast<std::int32_t>(left_id);
    parent.right = static_cast<std::int32_t>(right_id);
    NodeWork left, right;
    if (left_rows.size() <= right_rows.size()) {
      left = MakeNode(left_id, std::move(left_rows), w.depth + 1, nullptr, nullptr);
      right = MakeNode(right_id, std::move(right_rows), w.depth + 1, &w.hist, &left.hist);
    } else {
      right = MakeNode(right_id, std::move(right_rows), w.depth + 1, nullptr, nullptr);
      left = MakeNode(left_id, std::move(left_rows), w.depth + 1, &w.hist, &right.hist);
    }
    w.hist.bins.clear();
    w.hist.bins.shrink_to_fit();
    return {std::move(left), std::move(right)};
  }

  void GrowDepthWise(NodeWork root) {
    std::vector<NodeWork> level;
    level.push_back(std::move(root));
    while (!level.empty()) {
      std::vector<NodeWork> next;
      for (auto& w : level) {
        if (w.depth >= config_.max_depth || !w.split.valid) continue;
        auto [left, right] = Split(w);
        next.push_back(std::move(left));
        next.push_back(std::move(right));
      }
      level = std::move(next);
    }
  }

  void GrowLeafWise(NodeWork root) {
    std::vector<NodeWork> leaves;
    leaves.push_back(std::move(root));
    std::size_t n_leaves = 1;
    while (n_leaves < config_.num_leaves) {
      std::ptrdiff_t best = -1;
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!leaves[i].split.valid) continue;
        if (best < 0 || leaves[i].split.gain > leaves[static_cast<std::size_t>(best)].split.gain ||
            (leaves[i].split.gain == leaves[static_cast<std::size_t>(best)].split.gain &&
             leaves[i].node < leaves[static_cast<std::size_t>(best)].node)) {
          best = static_cast<std::ptrdiff_t>(i);
        }
      }
      if (best < 0) break;
      NodeWork chosen = std::move(leaves[static_cast<std::size_t>(best)]);
      leaves.erase(leaves.begin() + best);
      auto [left, right] = Split(chosen);
      leaves.push_back(std::move(left));
      leaves.push_back(std::move(right));
      ++n_leaves;
    }
  }

  const BinnedData& data_;
  const BinMapper& mapper_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  std::span<const std::size_t> features_;
  const GbdtConfig& config_;
  Tree tree_;
};

}  // namespace

SplitCandidate BestSplitHistogram(const Matrix& x, std::span<const double> grad,
                                  std::span<const double> hess,
                                  std::span<const std::size_t> rows, const BinMapper& bins,
                                  std::span<const std::size_t> features,
                                  const GbdtConfig& config) {
  const BinnedData data(x, bins);
  const Histogram hist = data.Build(rows, features, grad, hess);
  return ScanHistogram(hist, data, bins, features, config);
}

GbdtModel Fit(const Matrix& x, std::span<const int> labels, const GbdtConfig& config,
              FitTrace* trace) {
  config.Validate();
  if (labels.size() != x.rows()) throw Error(ErrorCode::kLengthMismatch, "labels vs rows");
  const auto positives =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  if (positives == 0 || positives == labels.size()) {
    throw Error(ErrorCode::kSingleClassInput, "GBDT training needs both classes");
  }
  const std::size_t n = x.rows();
  const double prevalence = static_cast<double>(positives) / static_cast<double>(n);

  GbdtModel model;
  model.config = config;
  model.feature_count = x.cols();
  model.base_score = std::log(prevalence / (1.0 - prevalence));

  const BinMapper mapper = BinMapper::Fit(x, config.n_bins);
  const BinnedData data(x, mapper);

  std::vector<double> margin(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  std::vector<std::size_t> all_features(x.cols());
  std::iota(all_features.begin(), all_features.end(), 0);
  const std::size_t n_columns = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.colsample * static_cast<double>(x.cols()))));

  if (trace) trace->train_logloss.clear();
  for (std::size_t round = 0; round < config.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = Sigmoid(margin[i]);
      grad[i] = p - labels[i];
      hess[i] = p * (1.0 - p);
    }
    const std::uint64_t round_seed = DeriveSeed(config.seed, {round});
    std::vector<std::size_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (config.subsample >= 1.0 || HashUniform(round_seed, i) < config.subsample) {
        rows.push_back(i);
      }
    }
    std::vector<std::size_t> features = all_features;
    if (n_columns < features.size()) {
      std::mt19937_64 rng(DeriveSeed(config.seed, {round, 0xc01}));
      std::shuffle(features.begin(), features.end(), rng);
      features.resize(n_columns);
      std::sort(features.begin(), features.end());
    }
    if (rows.empty()) {
      model.trees.push_back(Tree{{TreeNode{}}});
      if (trace) trace->train_logloss.push_back(LogLoss(margin, labels));
      continue;
    }
    TreeBuilder builder(data, mapper, grad, hess, features, config);
    Tree tree = builder.Build(std::move(rows));
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += config.learning_rate * tree.LeafValue(x.row(i));
    }
    model.trees.push_back(std::move(tree));
    if (trace) trace->train_logloss.push_back(LogLoss(margin, labels));
  }
  if (trace) trace->train_margin = margin;
  return model;
}

std::vector<double> PredictMargin(const GbdtModel& model, const Matrix& x) {
  if (x.cols() != model.feature_count) {
    throw Error(ErrorCode::kFeatureCountMismatch,
                "model expects " + std::to_string(model.feature_count) + " columns, got " +
                    std::to_string(x.cols()));
  }
  std::vector<double> out(x.rows(), model.base_score);
  for (const auto& tree : model.trees) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      out[i] += model.config.learning_rate * tree.LeafValue(x.row(i));
    }
  }
  return out;
}

std::vector<double> PredictProba(const GbdtModel& model, const Matrix& x) {
  std::vector<double> out = PredictMargin(model, x);
  for (double& v : out) v = Sigmoid(v);
  return out;
}

std::vector<double> GainImportance(const GbdtModel& model) {
  std::vector<double> out(model.feature_count, 0.0);
  for (const auto& tree : model.trees) {
    for (const auto& node : tree.nodes) {
      if (!node.is_leaf) out[node.feature] += node.gain;
    }
  }
  return out;
}

}  // namespace tabhybrid::gbdt
