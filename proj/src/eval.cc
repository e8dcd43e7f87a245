#include "tabhybrid/eval.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <thread>

#include "tabhybrid/csv.h"

namespace tabhybrid::eval {

namespace {

void CheckLengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch,
                "length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

void ClassCounts(std::span<const int> labels, std::size_t& pos, std::size_t& neg) {
  pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::kSingleClass, "both classes are required");
}

// 1-based mid-ranks of `values`.
std::vector<double> MidRanks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j (0-based) share rank mean((i+1)..(j+1))
    const double mid = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

struct Placements {
  std::vector<double> v10;  // per positive
  std::vector<double> v01;  // per negative
  double auc = 0;
};

Placements ComputePlacements(std::span<const int> labels, std::span<const double> scores) {
  std::vector<double> pos_scores, neg_scores;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? pos_scores : neg_scores).push_back(scores[i]);
  }
  std::vector<double> all = pos_scores;
  all.insert(all.end(), neg_scores.begin(), neg_scores.end());
  const auto r_all = MidRanks(all);
  const auto r_pos = MidRanks(pos_scores);
  const auto r_neg = MidRanks(neg_scores);
  const std::size_t m = pos_scores.size();
  const std::size_t n = neg_scores.size();
  Placements p;
  p.v10.resize(m);
  p.v01.resize(n);
  double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    p.v10[i] = (r_all[i] - r_pos[i]) / static_cast<double>(n);
    total += p.v10[i];
  }
  for (std::size_t j = 0; j < n; ++j) {
    p.v01[j] = 1.0 - (r_all[m + j] - r_neg[j]) / static_cast<double>(m);
  }
  p.auc = total / static_cast<double>(m);
  return p;
}

// Sample variance of a - b.
double DifferenceVariance(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  return ss / static_cast<double>(n - 1);
}

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string Scientific(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4e", v);
  return buf;
}

std::string PadRight(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

// Column-aligned text table; the first row is the header.
std::string RenderTable(const std::string& title, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out = title + "\n";
  std::size_t total = 0;
  for (std::size_t w : widths) total += w + 2;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::string line;
    for (std::size_t c = 0; c < rows[r].size(); ++c) line += PadRight(rows[r][c], widths[c] + 2);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
    if (r == 0) out += std::string(total > 2 ? total - 2 : total, '-') + "\n";
  }
  return out;
}

double ParseNumber(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::strtod(s.c_str(), nullptr);
}

std::map<std::string, std::size_t> HeaderIndex(const csv::Document& doc) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < doc.header.size(); ++i) index[doc.header[i]] = i;
  return index;
}

std::string Field(const std::vector<std::string>& row, const std::map<std::string, std::size_t>& idx,
                  const std::string& name) {
  const auto it = idx.find(name);
  if (it == idx.end() || it->second >= row.size()) {
    throw Error(ErrorCode::kMissingColumn, "report column '" + name + "' missing");
  }
  return row[it->second];
}

}  // namespace

ConfusionMatrix Confusion(std::span<const int> labels, std::span<const double> probs,
                          double threshold) {
  CheckLengths(labels.size(), probs.size());
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = probs[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? cm.tp : cm.fn)++;
    } else {
      (predicted ? cm.fp : cm.tn)++;
    }
  }
  return cm;
}

PrecisionRecallF1 ComputePrecisionRecallF1(const ConfusionMatrix& cm) {
  PrecisionRecallF1 out;
  const double tp = static_cast<double>(cm.tp);
  if (cm.tp + cm.fp > 0) {
    out.precision = tp / static_cast<double>(cm.tp + cm.fp);
  } else {
    out.degenerate = true;
  }
  if (cm.tp + cm.fn > 0) {
    out.recall = tp / static_cast<double>(cm.tp + cm.fn);
  } else {
    out.degenerate = true;
  }
  if (out.precision + out.recall > 0) {
    out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
  } else {
    out.degenerate = true;
  }
  return out;
}

double RocAuc(std::span<const int> labels, std::span<const double> scores) {
  CheckLengths(labels.size(), scores.size());
  std::size_t pos = 0, neg = 0;
  ClassCounts(labels, pos, neg);
  const auto ranks = MidRanks(scores);
  double rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  const double np = static_cast<double>(pos);
  return (rank_sum - np * (np + 1) / 2) / (np * static_cast<double>(neg));
}

std::vector<RocPoint> RocCurve(std::span<const int> labels, std::span<const double> scores) {
  CheckLengths(labels.size(), scores.size());
  std::size_t pos = 0, neg = 0;
  ClassCounts(labels, pos, neg);
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> curve;
  curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      (labels[order[i]] == 1 ? tp : fp)++;
      ++i;
    }
    curve.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                     static_cast<double>(tp) / static_cast<double>(pos), t});
  }
  return curve;
}

double TrapezoidArea(std::span<const RocPoint> curve) {
  double area = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2;
  }
  return area;
}

double Log10TwoSidedP(double z) {
  const double x = std::abs(z) / std::sqrt(2.0);
  const double p = std::erfc(x);
  if (p > 1e-300) return std::log10(p);
  if (!std::isfinite(x)) return -std::numeric_limits<double>::infinity();
  // erfc(x) ~ exp(-x^2) / (x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4))
  const double x2 = x * x;
  const double ln = -x2 - std::log(x * std::sqrt(M_PI)) + std::log1p(-1 / (2 * x2) + 3 / (4 * x2 * x2));
  return ln / std::log(10.0);
}

DelongResult DelongTest(std::span<const int> labels, std::span<const double> scores1,
                        std::span<const double> scores2) {
  CheckLengths(labels.size(), scores1.size());
  CheckLengths(labels.size(), scores2.size());
  std::size_t pos = 0, neg = 0;
  ClassCounts(labels, pos, neg);
  const Placements a = ComputePlacements(labels, scores1);
  const Placements b = ComputePlacements(labels, scores2);
  DelongResult r;
  r.auc1 = a.auc;
  r.auc2 = b.auc;
  r.variance = DifferenceVariance(a.v10, b.v10) / static_cast<double>(pos) +
               DifferenceVariance(a.v01, b.v01) / static_cast<double>(neg);
  const double diff = r.auc1 - r.auc2;
  if (diff == 0.0) {
    r.z = 0;
    r.p_value = 1.0;
    r.log10_p = 0.0;
    return r;
  }
  if (!(r.variance > 0)) {
    r.z = diff > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    r.log10_p = -std::numeric_limits<double>::infinity();
    return r;
  }
  r.z = diff / std::sqrt(r.variance);
  r.p_value = std::min(1.0, std::erfc(std::abs(r.z) / std::sqrt(2.0)));
  r.log10_p = Log10TwoSidedP(r.z);
  return r;
}

// ---------------------------------------------------------------------------

void ParallelFor(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
}

GridSearchResult GridSearch(const pipeline::PipelineSpec& base, const pipeline::ParamGrid& grid,
                            const DataTable& train, const GridSearchOptions& options) {
  const std::size_t n_candidates = grid.size();
  if (n_candidates == 0) throw Error(ErrorCode::kInvalidArgument, "grid is empty");
  GridSearchResult result;
  result.candidate_mean_auc.assign(n_candidates, 0.0);
  std::vector<pipeline::PipelineSpec> specs;
  for (std::size_t c = 0; c < n_candidates; ++c) {
    specs.push_back(pipeline::ApplyParams(base, grid.Candidate(c)));
    specs.back().Validate();
  }
  if (n_candidates == 1) {
    result.best_params = grid.Candidate(0);
    result.candidate_mean_auc[0] = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  const std::vector<int> labels = train.Labels();
  const FoldPlan folds = StratifiedKFold(labels, options.k_inner, options.seed);
  const std::size_t k = options.k_inner;
  std::vector<double> fold_auc(n_candidates * k, 0.0);
  ParallelFor(n_candidates * k, options.jobs, [&](std::size_t task) {
    const std::size_t c = task / k;
    const std::size_t f = task % k;
    pipeline::PipelineSpec spec = specs[c];
    spec.seed = DeriveSeed(options.seed, {f, c});
    const auto train_idx = folds.TrainIndices(f);
    const auto valid_idx = folds.ValidationIndices(f);
    const DataTable fit_rows = train.SelectRows(train_idx);
    const DataTable valid_rows = train.SelectRows(valid_idx);
    const auto fitted = pipeline::FitPipeline(spec, fit_rows, options.audit);
    const auto probs = pipeline::PredictPipeline(fitted, valid_rows, UnknownPolicy::kAllow);
    fold_auc[task] = RocAuc(valid_rows.Labels(), probs);
  });
  for (std::size_t c = 0; c < n_candidates; ++c) {
    double total = 0;
    for (std::size_t f = 0; f < k; ++f) total += fold_auc[c * k + f];
    result.candidate_mean_auc[c] = total / static_cast<double>(k);
    if (result.candidate_mean_auc[c] > result.candidate_mean_auc[result.best_index]) {
      result.best_index = c;
    }
  }
  result.best_params = grid.Candidate(result.best_index);
  return result;
}

nlohmann::json CvResult::ToJson() const {
  nlohmann::json folds_json = nlohmann::json::array();
  for (const auto& f : folds) {
    folds_json.push_back(
        {{"fold", f.fold}, {"best_params", f.best_params}, {"validation_auc", f.validation_auc}});
  }
  nlohmann::json j = {{"folds", folds_json},
                      {"mean_validation_auc", mean_validation_auc},
                      {"stddev_validation_auc", stddev_validation_auc},
                      {"final_params", final_params}};
  j["test_auc"] = test_auc ? nlohmann::json(*test_auc) : nlohmann::json(nullptr);
  j["delta"] = delta ? nlohmann::json(*delta) : nlohmann::json(nullptr);
  return j;
}

FoldPlan OuterFolds(std::span<const int> labels, const NestedCvOptions& options) {
  return StratifiedKFold(labels, options.k_outer, DeriveSeed(options.seed, {0}));
}

CvResult NestedCv(const pipeline::PipelineSpec& base, const pipeline::ParamGrid& grid,
                  const DataTable& data, const NestedCvOptions& options) {
  const std::vector<int> labels = data.Labels();
  const FoldPlan outer = OuterFolds(labels, options);
  CvResult result;
  for (std::size_t o = 0; o < options.k_outer; ++o) {
    const DataTable outer_train = data.SelectRows(outer.TrainIndices(o));
    const DataTable outer_valid = data.SelectRows(outer.ValidationIndices(o));
    GridSearchOptions inner;
    inner.k_inner = options.k_inner;
    inner.seed = DeriveSeed(options.seed, {1, o});
    inner.jobs = options.jobs;
    if (options.audit) {
      const std::string prefix = "outer" + std::to_string(o) + "/";
      inner.audit = [&, prefix](const std::string& stage, const std::vector<std::size_t>& ids) {
        options.audit(prefix + "inner/" + stage, ids);
      };
    }
    const GridSearchResult gs = GridSearch(base, grid, outer_train, inner);
    pipeline::PipelineSpec spec = pipeline::ApplyParams(base, gs.best_params);
    spec.seed = DeriveSeed(options.seed, {2, o});
    FitAudit refit_audit;
    if (options.audit) {
      const std::string prefix = "outer" + std::to_string(o) + "/refit/";
      refit_audit = [&, prefix](const std::string& stage, const std::vector<std::size_t>& ids) {
        options.audit(prefix + stage, ids);
      };
    }
    const auto fitted = pipeline::FitPipeline(spec, outer_train, refit_audit);
    const auto probs = pipeline::PredictPipeline(fitted, outer_valid, UnknownPolicy::kAllow);
    result.folds.push_back({o, gs.best_params, RocAuc(outer_valid.Labels(), probs)});
  }
  double total = 0;
  for (const auto& f : result.folds) total += f.validation_auc;
  const double k = static_cast<double>(result.folds.size());
  result.mean_validation_auc = total / k;
  double ss = 0;
  for (const auto& f : result.folds) {
    ss += (f.validation_auc - result.mean_validation_auc) *
          (f.validation_auc - result.mean_validation_auc);
  }
  result.stddev_validation_auc = std::sqrt(ss / k);

  std::size_t best_count = 0;
  for (std::size_t i = 0; i < result.folds.size(); ++i) {
    std::size_t count = 0;
    for (const auto& f : result.folds) count += f.best_params == result.folds[i].best_params;
    if (count > best_count) {
      best_count = count;
      result.final_params = result.folds[i].best_params;
    }
  }
  return result;
}

pipeline::FittedPipeline RefitAndScore(CvResult& cv, const pipeline::PipelineSpec& base,
                                       const DataTable& train, const DataTable& test,
                                       std::uint64_t seed, std::vector<double>* test_probs) {
  pipeline::PipelineSpec spec = pipeline::ApplyParams(base, cv.final_params);
  spec.seed = DeriveSeed(seed, {3});
  auto fitted = pipeline::FitPipeline(spec, train);
  const auto probs = pipeline::PredictPipeline(fitted, test);
  cv.test_auc = RocAuc(test.Labels(), probs);
  cv.delta = *cv.test_auc - cv.mean_validation_auc;
  if (test_probs) *test_probs = probs;
  return fitted;
}

// ---------------------------------------------------------------------------

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "test";
}

EvalReport Evaluate(const std::string& model, Split split, std::span<const int> labels,
                    std::span<const double> probs, double time_seconds) {
  EvalReport r;
  r.model = model;
  r.split = split;
  r.roc_auc = RocAuc(labels, probs);
  r.confusion = Confusion(labels, probs);
  r.prf = ComputePrecisionRecallF1(r.confusion);
  r.time_seconds = time_seconds;
  return r;
}

std::vector<Comparison> CompareModels(const std::vector<std::string>& names,
                                      const std::vector<std::vector<double>>& scores,
                                      std::span<const int> labels, double alpha) {
  CheckLengths(names.size(), scores.size());
  std::vector<Comparison> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      Comparison c;
      c.model1 = names[i];
      c.model2 = names[j];
      c.delong = DelongTest(labels, scores[i], scores[j]);
      c.significant = c.delong.p_value < alpha;
      out.push_back(c);
    }
  }
  return out;
}

std::string MetricsCsv(std::span<const EvalReport> reports) {
  std::string out = "model,split,roc_auc,precision,recall,f1,degenerate,tn,fp,fn,tp\n";
  for (const auto& r : reports) {
    out += csv::JoinRow({r.model, std::string(SplitName(r.split)), FormatDouble(r.roc_auc),
                         FormatDouble(r.prf.precision), FormatDouble(r.prf.recall),
                         FormatDouble(r.prf.f1), r.prf.degenerate ? "1" : "0",
                         std::to_string(r.confusion.tn), std::to_string(r.confusion.fp),
                         std::to_string(r.confusion.fn), std::to_string(r.confusion.tp)}) +
           "\n";
  }
  return out;
}

std::string TimingsCsv(std::span<const EvalReport> reports) {
  std::string out = "model,split,time_seconds\n";
  for (const auto& r : reports) {
    out += csv::JoinRow({r.model, std::string(SplitName(r.split)), FormatDouble(r.time_seconds)}) +
           "\n";
  }
  return out;
}

std::string ConfusionCsv(std::span<const EvalReport> reports) {
  std::string out = "model,split,tn,fp,fn,tp\n";
  for (const auto& r : reports) {
    out += csv::JoinRow({r.model, std::string(SplitName(r.split)), std::to_string(r.confusion.tn),
                         std::to_string(r.confusion.fp), std::to_string(r.confusion.fn),
                         std::to_string(r.confusion.tp)}) +
           "\n";
  }
  return out;
}

std::string ComparisonCsv(std::span<const Comparison> comparisons) {
  std::string out = "model1,model2,auc1,auc2,p_value,log10_p,significant\n";
  for (const auto& c : comparisons) {
    out += csv::JoinRow({c.model1, c.model2, FormatDouble(c.delong.auc1),
                         FormatDouble(c.delong.auc2), FormatDouble(c.delong.p_value),
                         FormatDouble(c.delong.log10_p), c.significant ? "1" : "0"}) +
           "\n";
  }
  return out;
}

std::string RocCurveCsv(const std::string& model, Split split, std::span<const RocPoint> curve) {
  std::string out = "model,split,fpr,tpr,threshold\n";
  for (const auto& p : curve) {
    out += csv::JoinRow({model, std::string(SplitName(split)), FormatDouble(p.fpr),
                         FormatDouble(p.tpr), FormatDouble(p.threshold)}) +
           "\n";
  }
  return out;
}

std::string CvCsv(const std::vector<std::string>& names, std::span<const CvResult> results) {
  CheckLengths(names.size(), results.size());
  std::string out = "model,k_outer,mean_validation_auc,stddev_validation_auc,test_auc,delta,final_params\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& r = results[i];
    out += csv::JoinRow({names[i], std::to_string(r.folds.size()),
                         FormatDouble(r.mean_validation_auc), FormatDouble(r.stddev_validation_auc),
                         r.test_auc ? FormatDouble(*r.test_auc) : "",
                         r.delta ? FormatDouble(*r.delta) : "", r.final_params.dump()}) +
           "\n";
  }
  return out;
}

nlohmann::json ReportsJson(std::span<const EvalReport> reports) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    out.push_back({{"model", r.model},
                   {"split", SplitName(r.split)},
                   {"roc_auc", r.roc_auc},
                   {"precision", r.prf.precision},
                   {"recall", r.prf.recall},
                   {"f1", r.prf.f1},
                   {"degenerate", r.prf.degenerate},
                   {"confusion",
                    {{"tn", r.confusion.tn},
                     {"fp", r.confusion.fp},
                     {"fn", r.confusion.fn},
                     {"tp", r.confusion.tp}}}});
  }
  return out;
}

std::string RenderMetricsTable(std::string_view metrics_csv, std::string_view timings_csv) {
  const csv::Document metrics = csv::Parse(metrics_csv);
  const auto idx = HeaderIndex(metrics);
  std::map<std::pair<std::string, std::string>, std::string> times;
  if (!timings_csv.empty()) {
    const csv::Document timings = csv::Parse(timings_csv);
    const auto tidx = HeaderIndex(timings);
    for (const auto& row : timings.rows) {
      times[{Field(row, tidx, "model"), Field(row, tidx, "split")}] =
          Fixed(ParseNumber(Field(row, tidx, "time_seconds")), 2);
    }
  }
  std::vector<std::vector<std::string>> rows = {
      {"Model", "Split", "ROC-AUC", "Precision", "Recall", "F1", "Time (s)"}};
  for (const auto& row : metrics.rows) {
    const std::string model = Field(row, idx, "model");
    const std::string split = Field(row, idx, "split");
    const auto t = times.find({model, split});
    rows.push_back({model, split, Fixed(ParseNumber(Field(row, idx, "roc_auc"))),
                    Fixed(ParseNumber(Field(row, idx, "precision"))),
                    Fixed(ParseNumber(Field(row, idx, "recall"))),
                    Fixed(ParseNumber(Field(row, idx, "f1"))), t == times.end() ? "-" : t->second});
  }
  return RenderTable("Performance metrics", rows);
}

std::string RenderComparisonTable(std::string_view comparison_csv) {
  const csv::Document doc = csv::Parse(comparison_csv);
  const auto idx = HeaderIndex(doc);
  std::vector<std::vector<std::string>> rows = {
      {"Comparison", "AUC 1", "AUC 2", "p-value", "log10(p)", "Result"}};
  for (const auto& row : doc.rows) {
    rows.push_back({Field(row, idx, "model1") + " vs. " + Field(row, idx, "model2"),
                    Fixed(ParseNumber(Field(row, idx, "auc1"))),
                    Fixed(ParseNumber(Field(row, idx, "auc2"))),
                    Scientific(ParseNumber(Field(row, idx, "p_value"))),
                    Fixed(ParseNumber(Field(row, idx, "log10_p"))),
                    Field(row, idx, "significant") == "1" ? "Significant" : "Not Significant"});
  }
  return RenderTable("DeLong comparison of ROC-AUC", rows);
}

std::string RenderCvTable(std::string_view cv_csv) {
  const csv::Document doc = csv::Parse(cv_csv);
  const auto idx = HeaderIndex(doc);
  std::vector<std::vector<std::string>> rows = {
      {"Model", "Mean", "Std Dev", "Test", "Delta (Test - Validation)"}};
  for (const auto& row : doc.rows) {
    const std::string test = Field(row, idx, "test_auc");
    const std::string delta = Field(row, idx, "delta");
    std::string delta_text = "-";
    if (!delta.empty()) {
      const double d = ParseNumber(delta);
      delta_text = (d >= 0 ? "+" : "") + Fixed(d);
    }
    rows.push_back({Field(row, idx, "model"),
                    Fixed(ParseNumber(Field(row, idx, "mean_validation_auc"))),
                    Fixed(ParseNumber(Field(row, idx, "stddev_validation_auc"))),
                    test.empty() ? "-" : Fixed(ParseNumber(test)), delta_text});
  }
  return RenderTable("Cross-validation ROC-AUC", rows);
}

}  // namespace tabhybrid::eval
