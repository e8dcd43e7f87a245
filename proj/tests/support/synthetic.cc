#include "synthetic.h"

#include <atomic>
#include <cmath>
#include <sstream>

#include <unistd.h>

namespace tabhybrid::testing {

namespace {

const std::vector<std::string> kJobRoles = {"Education", "Finance", "Healthcare", "Media",
                                            "Technology"};
const std::vector<std::string> kBalance = {"Excellent", "Fair", "Good", "Poor"};
const std::vector<std::string> kSatisfaction = {"High", "Low", "Medium", "Very High"};
const std::vector<std::string> kPerformance = {"Average", "Below Average", "High", "Low"};
const std::vector<std::string> kEducation = {"Associate Degree", "Bachelor’s Degree",
                                             "High School", "Master’s Degree", "PhD"};
const std::vector<std::string> kMarital = {"Divorced", "Married", "Single"};
const std::vector<std::string> kJobLevel = {"Entry", "Mid", "Senior"};

std::string Quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string AttritionCsv(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto pick = [&](const std::vector<std::string>& levels) {
    return levels[static_cast<std::size_t>(unit(rng) * static_cast<double>(levels.size())) %
                  levels.size()];
  };
  auto index_of = [](const std::vector<std::string>& levels, const std::string& v) {
    return static_cast<double>(std::find(levels.begin(), levels.end(), v) - levels.begin());
  };

  std::ostringstream out;
  out << "Employee ID,Age,Gender,Years at Company,Job Role,Monthly Income,Work-Life Balance,"
         "Job Satisfaction,Performance Rating,Number of Promotions,Overtime,Distance from Home,"
         "Education Level,Marital Status,Job Level,Attrition\n";
  for (std::size_t i = 0; i < n; ++i) {
    const int age = 18 + static_cast<int>(unit(rng) * 43);
    const std::string gender = unit(rng) < 0.55 ? "Male" : "Female";
    const int years = std::max(1, std::min(age - 17, static_cast<int>(unit(rng) * 40) + 1));
    const std::string role = pick(kJobRoles);
    const int income = 1200 + static_cast<int>(unit(rng) * 9000);
    const std::string balance = pick(kBalance);
    const std::string satisfaction = pick(kSatisfaction);
    const std::string performance = pick(kPerformance);
    const int promotions = static_cast<int>(unit(rng) * 5);
    const std::string overtime = unit(rng) < 0.33 ? "Yes" : "No";
    const int distance = 1 + static_cast<int>(unit(rng) * 99);
    const std::string education = pick(kEducation);
    const std::string marital = pick(kMarital);
    const std::string level = pick(kJobLevel);

    double logit = -0.1;
    logit += 0.9 * (marital == "Single") - 0.3 * (marital == "Married");
    logit -= 0.8 * index_of(kJobLevel, level) - 0.8;
    logit += 0.5 * (balance == "Poor") - 0.4 * (balance == "Excellent");
    logit += 0.35 * (overtime == "Yes");
    logit -= 0.25 * promotions + 0.5;
    logit += 0.012 * (distance - 50);
    logit -= 0.03 * (years - 15);
    logit -= 0.00005 * (income - 5000);
    logit += 0.4 * (performance == "Low") - 0.2 * (satisfaction == "Very High");
    logit += 0.6 * normal(rng);
    const bool left = unit(rng) < 1.0 / (1.0 + std::exp(-logit));

    out << (100000 + i) << ',' << age << ',' << gender << ',' << years << ',' << Quote(role)
        << ',' << income << ',' << Quote(balance) << ',' << Quote(satisfaction) << ','
        << Quote(performance) << ',' << promotions << ',' << overtime << ',' << distance << ','
        << Quote(education) << ',' << marital << ',' << level << ','
        << (left ? "Left" : "Stayed") << '\n';
  }
  return out.str();
}

FeatureSchema AttritionSchema() {
  using K = FeatureKind;
  return FeatureSchema({
      {"Age", K::kNumerical, {}, ""},
      {"Gender", K::kBinary, {"Female", "Male"}, ""},
      {"Years at Company", K::kNumerical, {}, ""},
      {"Job Role", K::kCategorical, kJobRoles, ""},
      {"Monthly Income", K::kNumerical, {}, ""},
      {"Work-Life Balance", K::kCategorical, kBalance, ""},
      {"Job Satisfaction", K::kCategorical, kSatisfaction, ""},
      {"Performance Rating", K::kCategorical, kPerformance, ""},
      {"Number of Promotions", K::kNumerical, {}, ""},
      {"Overtime", K::kBinary, {"No", "Yes"}, ""},
      {"Distance from Home", K::kNumerical, {}, ""},
      {"Education Level", K::kCategorical, kEducation, ""},
      {"Marital Status", K::kCategorical, kMarital, ""},
      {"Job Level", K::kCategorical, kJobLevel, ""},
      {"Attrition", K::kTarget, {"Left", "Stayed"}, "Left"},
  });
}

DataTable AttritionTable(std::size_t n, std::uint64_t seed) {
  LoadOptions options;
  options.ignore_extra_columns = true;
  return ParseCsvTable(AttritionCsv(n, seed), AttritionSchema(), options);
}

Matrix RandomMatrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo,
                    double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("tabhybrid-" + tag + "-" + std::to_string(::getpid()) + "-" +
           std::to_string(counter.fetch_add(1)));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace tabhybrid::testing
