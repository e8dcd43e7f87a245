#include "tabhybrid/attribution.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "tabhybrid/csv.h"

namespace tabhybrid::attribution {

std::pair<double, double> ChildFractions(const gbdt::Tree& tree, std::size_t node) {
  const auto& n = tree.nodes[node];
  const auto& left = tree.nodes[static_cast<std::size_t>(n.left)];
  const auto& right = tree.nodes[static_cast<std::size_t>(n.right)];
  if (left.cover > 0 && right.cover > 0) {
    const double total = left.cover + right.cover;
    return {left.cover / total, right.cover / total};
  }
  const double total = static_cast<double>(left.count + right.count);
  if (total <= 0) return {0.5, 0.5};
  return {static_cast<double>(left.count) / total, static_cast<double>(right.count) / total};
}

namespace {

double ExpectationFrom(const gbdt::Tree& tree, std::size_t node) {
  const auto& n = tree.nodes[node];
  if (n.is_leaf) return n.value;
  const auto [fl, fr] = ChildFractions(tree, node);
  return fl * ExpectationFrom(tree, static_cast<std::size_t>(n.left)) +
         fr * ExpectationFrom(tree, static_cast<std::size_t>(n.right));
}

struct PathElement {
  int feature_index = -1;
  double zero_fraction = 0;
  double one_fraction = 0;
  double pweight = 0;
};

void ExtendPath(PathElement* path, std::size_t depth, double zero_fraction, double one_fraction,
                int feature_index) {
  path[depth].feature_index = feature_index;
  path[depth].zero_fraction = zero_fraction;
  path[depth].one_fraction = one_fraction;
  path[depth].pweight = depth == 0 ? 1.0 : 0.0;
  const double d1 = static_cast<double>(depth + 1);
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(depth) - 1; i >= 0; --i) {
    const auto u = static_cast<std::size_t>(i);
    path[u + 1].pweight += one_fraction * path[u].pweight * static_cast<double>(u + 1) / d1;
    path[u].pweight = zero_fraction * path[u].pweight * static_cast<double>(depth - u) / d1;
  }
}

void UnwindPath(PathElement* path, std::size_t depth, std::size_t path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  const double d1 = static_cast<double>(depth + 1);
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(depth) - 1; i >= 0; --i) {
    const auto u = static_cast<std::size_t>(i);
    if (one_fraction != 0) {
      const double tmp = path[u].pweight;
      path[u].pweight = next_one_portion * d1 / (static_cast<double>(u + 1) * one_fraction);
      next_one_portion =
          tmp - path[u].pweight * zero_fraction * static_cast<double>(depth - u) / d1;
    } else {
      path[u].pweight = path[u].pweight * d1 / (zero_fraction * static_cast<double>(depth - u));
    }
  }
  for (std::size_t i = path_index; i < depth; ++i) {
    path[i].feature_index = path[i + 1].feature_index;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double UnwoundPathSum(const PathElement* path, std::size_t depth, std::size_t path_index) {
  const double one_fraction = path[path_index].one_fraction;
  const double zero_fraction = path[path_index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0;
  const double d1 = static_cast<double>(depth + 1);
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(depth) - 1; i >= 0; --i) {
    const auto u = static_cast<std::size_t>(i);
    if (one_fraction != 0) {
      const double tmp = next_one_portion * d1 / (static_cast<double>(u + 1) * one_fraction);
      total += tmp;
      next_one_portion =
          path[u].pweight - tmp * zero_fraction * (static_cast<double>(depth - u) / d1);
    } else if (zero_fraction != 0) {
      total += (path[u].pweight / zero_fraction) / (static_cast<double>(depth - u) / d1);
    }
  }
  return total;
}

// Recursive walk for one row; `scale` multiplies every leaf value.
void Recurse(const gbdt::Tree& tree, std::span<const double> row, double scale, double* phi,
             std::size_t node_index, std::size_t depth, PathElement* parent_path,
             double parent_zero_fraction, double parent_one_fraction, int parent_feature) {
  const auto& node = tree.nodes[node_index];
  PathElement* path = parent_path + depth + 1;
  std::copy(parent_path, parent_path + depth + 1, path);
  ExtendPath(path, depth, parent_zero_fraction, parent_one_fraction, parent_feature);

  if (node.is_leaf) {
    for (std::size_t i = 1; i <= depth; ++i) {
      const double w = UnwoundPathSum(path, depth, i);
      const PathElement& el = path[i];
      phi[el.feature_index] += w * (el.one_fraction - el.zero_fraction) * node.value * scale;
    }
    return;
  }

  const auto split = static_cast<int>(node.feature);
  const bool go_left = row[node.feature] < node.threshold;
  const auto hot = static_cast<std::size_t>(go_left ? node.left : node.right);
  const auto cold = static_cast<std::size_t>(go_left ? node.right : node.left);
  const auto [fl, fr] = ChildFractions(tree, node_index);
  const double hot_zero_fraction = go_left ? fl : fr;
  const double cold_zero_fraction = go_left ? fr : fl;
  double incoming_zero_fraction = 1;
  double incoming_one_fraction = 1;

  std::size_t path_index = 0;
  for (; path_index <= depth; ++path_index) {
    if (path[path_index].feature_index == split) break;
  }
  if (path_index != depth + 1) {
    incoming_zero_fraction = path[path_index].zero_fraction;
    incoming_one_fraction = path[path_index].one_fraction;
    UnwindPath(path, depth, path_index);
    depth -= 1;
  }

  Recurse(tree, row, scale, phi, hot, depth + 1, path, hot_zero_fraction * incoming_zero_fraction,
          incoming_one_fraction, split);
  Recurse(tree, row, scale, phi, cold, depth + 1, path,
          cold_zero_fraction * incoming_zero_fraction, 0, split);
}

std::vector<std::string> DefaultNames(std::size_t n, std::vector<std::string> names) {
  if (names.size() == n) return names;
  names.clear();
  for (std::size_t i = 0; i < n; ++i) names.push_back("f" + std::to_string(i));
  return names;
}

}  // namespace

double TreeExpectation(const gbdt::Tree& tree) {
  if (tree.nodes.empty()) return 0.0;
  return ExpectationFrom(tree, 0);
}

ShapMatrix TreeShap(const gbdt::GbdtModel& model, const Matrix& x,
                    std::vector<std::string> feature_names) {
  if (!model.has_cover) {
    throw Error(ErrorCode::kMissingCoverCounts, "model was saved without node covers");
  }
  if (x.cols() != model.feature_count) {
    throw Error(ErrorCode::kFeatureCountMismatch,
                "model expects " + std::to_string(model.feature_count) + " columns, got " +
                    std::to_string(x.cols()));
  }
  ShapMatrix out;
  out.values = Matrix(x.rows(), x.cols(), 0.0);
  out.feature_names = DefaultNames(x.cols(), std::move(feature_names));
  const double lr = model.config.learning_rate;
  double expectation = 0;
  std::size_t max_depth = 0;
  for (const auto& tree : model.trees) {
    expectation += TreeExpectation(tree);
    max_depth = std::max(max_depth, tree.Depth());
  }
  out.base_value = model.base_score + lr * expectation;

  const std::size_t maxd = max_depth + 2;
  std::vector<PathElement> path((maxd * (maxd + 1)) / 2 + maxd);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double* phi = out.values.row(r).data();
    for (const auto& tree : model.trees) {
      if (tree.nodes.size() <= 1) continue;
      Recurse(tree, x.row(r), lr, phi, 0, 0, path.data(), 1, 1, -1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

ShapMatrix SamplingShap(const MarginFn& margin_fn, const Matrix& background, const Matrix& rows,
                        const SamplingOptions& options, std::vector<std::string> feature_names) {
  if (background.rows() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "sampling SHAP needs a nonempty background");
  }
  if (background.cols() != rows.cols()) {
    throw Error(ErrorCode::kFeatureCountMismatch, "background and rows differ in width");
  }
  const std::size_t p = rows.cols();
  const std::size_t n_pairs = std::max<std::size_t>(1, (options.n_permutations + 1) / 2);
  ShapMatrix out;
  out.values = Matrix(rows.rows(), p, 0.0);
  out.standard_errors = Matrix(rows.rows(), p, 0.0);
  out.feature_names = DefaultNames(p, std::move(feature_names));
  {
    const std::vector<double> bg = margin_fn(background);
    double total = 0;
    for (double v : bg) total += v;
    out.base_value = total / static_cast<double>(bg.size());
  }

  auto explain_row = [&](std::size_t r) {
    std::mt19937_64 rng(DeriveSeed(options.seed, {0x5a9, r}));
    std::uniform_int_distribution<std::size_t> pick(0, background.rows() - 1);
    std::vector<std::size_t> order(p);
    // Two walks per pair, p + 1 evaluations per walk.
    Matrix walks(n_pairs * 2 * (p + 1), p);
    std::vector<std::vector<std::size_t>> orders;
    orders.reserve(n_pairs * 2);
    for (std::size_t k = 0; k < n_pairs; ++k) {
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      const std::size_t b = pick(rng);
      for (int direction = 0; direction < 2; ++direction) {
        std::vector<std::size_t> o = order;
        if (direction == 1) std::reverse(o.begin(), o.end());
        const std::size_t base = (2 * k + static_cast<std::size_t>(direction)) * (p + 1);
        std::vector<double> z(background.row(b).begin(), background.row(b).end());
        std::copy(z.begin(), z.end(), walks.row(base).begin());
        for (std::size_t s = 0; s < p; ++s) {
          z[o[s]] = rows(r, o[s]);
          std::copy(z.begin(), z.end(), walks.row(base + s + 1).begin());
        }
        orders.push_back(std::move(o));
      }
    }
    const std::vector<double> f = margin_fn(walks);
    std::vector<double> sum(p, 0.0), sum_sq(p, 0.0);
    std::vector<double> sample(p);
    for (std::size_t k = 0; k < n_pairs; ++k) {
      std::fill(sample.begin(), sample.end(), 0.0);
      for (std::size_t d = 0; d < 2; ++d) {
        const std::size_t base = (2 * k + d) * (p + 1);
        const auto& o = orders[2 * k + d];
        for (std::size_t s = 0; s < p; ++s) {
          sample[o[s]] += 0.5 * (f[base + s + 1] - f[base + s]);
        }
      }
      for (std::size_t j = 0; j < p; ++j) {
        sum[j] += sample[j];
        sum_sq[j] += sample[j] * sample[j];
      }
    }
    const double n = static_cast<double>(n_pairs);
    for (std::size_t j = 0; j < p; ++j) {
      const double mean = sum[j] / n;
      out.values(r, j) = mean;
      if (n_pairs > 1) {
        const double var = std::max(0.0, (sum_sq[j] - n * mean * mean) / (n - 1));
        out.standard_errors(r, j) = std::sqrt(var / n);
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, rows.rows()));
  if (jobs == 1) {
    for (std::size_t r = 0; r < rows.rows(); ++r) explain_row(r);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t r = w; r < rows.rows(); r += jobs) explain_row(r);
      });
    }
    for (auto& t : workers) t.join();
  }
  return out;
}

// ---------------------------------------------------------------------------

ShapMatrix CollapseColumns(const ShapMatrix& shap, const std::vector<ColumnMeta>& columns) {
  if (columns.size() != shap.values.cols()) {
    throw Error(ErrorCode::kLengthMismatch, "column metadata does not match SHAP width");
  }
  std::vector<std::string> groups;
  std::vector<std::size_t> group_of(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const auto it = std::find(groups.begin(), groups.end(), columns[c].source_feature);
    group_of[c] = static_cast<std::size_t>(it - groups.begin());
    if (it == groups.end()) groups.push_back(columns[c].source_feature);
  }
  ShapMatrix out;
  out.base_value = shap.base_value;
  out.feature_names = groups;
  out.values = Matrix(shap.values.rows(), groups.size(), 0.0);
  for (std::size_t r = 0; r < shap.values.rows(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out.values(r, group_of[c]) += shap.values(r, c);
  }
  return out;
}

std::vector<double> Aggregate(const ShapMatrix& shap, AggregateMode mode,
                              const std::vector<ColumnMeta>* collapse) {
  if (collapse != nullptr) return Aggregate(CollapseColumns(shap, *collapse), mode, nullptr);
  const Matrix& v = shap.values;
  std::vector<double> out(v.cols(), 0.0);
  if (v.rows() == 0) return out;
  for (std::size_t r = 0; r < v.rows(); ++r) {
    for (std::size_t c = 0; c < v.cols(); ++c) {
      out[c] += mode == AggregateMode::kAbsolute ? std::abs(v(r, c)) : v(r, c);
    }
  }
  for (double& x : out) x /= static_cast<double>(v.rows());
  return out;
}

std::vector<FeatureImportance> Summarize(const ShapMatrix& shap,
                                         const std::vector<ColumnMeta>* collapse) {
  ShapMatrix collapsed;
  if (collapse != nullptr) collapsed = CollapseColumns(shap, *collapse);
  const ShapMatrix& source = collapse != nullptr ? collapsed : shap;
  const auto absolute = Aggregate(source, AggregateMode::kAbsolute);
  const auto signed_mean = Aggregate(source, AggregateMode::kSigned);
  std::vector<FeatureImportance> out;
  for (std::size_t c = 0; c < absolute.size(); ++c) {
    out.push_back({source.feature_names[c], absolute[c], signed_mean[c]});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.mean_absolute > b.mean_absolute;
  });
  return out;
}

std::string ShapMatrixCsv(const ShapMatrix& shap, const std::vector<std::string>& row_ids) {
  std::string out;
  std::vector<std::string> header = {"row_id"};
  for (const auto& name : shap.feature_names) header.push_back(name);
  header.push_back("base_value");
  out += csv::JoinRow(header) + "\n";
  for (std::size_t r = 0; r < shap.values.rows(); ++r) {
    std::vector<std::string> fields;
    fields.push_back(r < row_ids.size() ? row_ids[r] : std::to_string(r));
    for (std::size_t c = 0; c < shap.values.cols(); ++c) {
      fields.push_back(FormatDouble(shap.values(r, c)));
    }
    fields.push_back(FormatDouble(shap.base_value));
    out += csv::JoinRow(fields) + "\n";
  }
  return out;
}

std::string SummaryCsv(const std::vector<FeatureImportance>& summary) {
  std::string out = "feature,mean_abs_shap,mean_signed_shap\n";
  for (const auto& s : summary) {
    out += csv::JoinRow({s.feature, FormatDouble(s.mean_absolute), FormatDouble(s.mean_signed)}) +
           "\n";
  }
  return out;
}

}  // namespace tabhybrid::attribution
