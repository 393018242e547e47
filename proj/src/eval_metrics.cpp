#include "blvrun/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>

#include "blvrun/error_taxonomy.hpp"

namespace blvrun {

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c >= 0x80;
}

std::unordered_map<std::string, long> term_counts(std::string_view text) {
  std::unordered_map<std::string, long> counts;
  for (auto& token : tokenize(text)) ++counts[std::move(token)];
  return counts;
}

std::string format_fixed(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

std::string csv_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::size_t category_rank(const std::string& name) {
  const auto& supported = supported_categories();
  for (std::size_t i = 0; i < supported.size(); ++i)
    if (supported[i].name() == name) return i;
  return supported.size();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (is_token_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

RougeScore rouge1(std::string_view pred, std::string_view ref) {
  auto pred_counts = term_counts(pred);
  auto ref_counts = term_counts(ref);
  long pred_total = 0, ref_total = 0, overlap = 0;
  for (const auto& [term, n] : pred_counts) {
    pred_total += n;
    if (auto it = ref_counts.find(term); it != ref_counts.end()) overlap += std::min(n, it->second);
  }
  for (const auto& entry : ref_counts) ref_total += entry.second;

  RougeScore score;
  if (pred_total > 0) score.precision = static_cast<double>(overlap) / static_cast<double>(pred_total);
  if (ref_total > 0) score.recall = static_cast<double>(overlap) / static_cast<double>(ref_total);
  if (score.precision + score.recall > 0.0)
    score.f = 2.0 * score.precision * score.recall / (score.precision + score.recall);
  return score;
}

double cosine_tf(std::string_view pred, std::string_view ref) {
  auto a = term_counts(pred);
  auto b = term_counts(ref);
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  // Integer accumulation keeps the result symmetric in its arguments.
  long long dot = 0, norm_a = 0, norm_b = 0;
  for (const auto& [term, n] : a) {
    norm_a += static_cast<long long>(n) * n;
    if (auto it = b.find(term); it != b.end()) dot += static_cast<long long>(n) * it->second;
  }
  for (const auto& entry : b) norm_b += static_cast<long long>(entry.second) * entry.second;
  double cosine =
      static_cast<double>(dot) / std::sqrt(static_cast<double>(norm_a) * static_cast<double>(norm_b));
  return std::clamp(cosine, 0.0, 1.0);
}

const Aggregate* EvalReport::category(std::string_view name) const {
  for (const auto& row : per_category)
    if (row.category == name) return &row.scores;
  return nullptr;
}

EvalReport evaluate(std::vector<EvalPair> pairs) {
  if (pairs.empty()) throw EvalError("no summary pairs to evaluate");
  for (const auto& pair : pairs)
    if (pair.gold.empty()) throw MissingGoldError(pair.id);
  std::stable_sort(pairs.begin(), pairs.end(), [](const EvalPair& a, const EvalPair& b) { return a.id < b.id; });

  EvalReport report;
  struct Sums {
    double rouge_f = 0.0, cosine = 0.0;
    std::size_t count = 0;
  };
  std::map<std::string, Sums> sums;
  Sums total;
  for (const auto& pair : pairs) {
    PairScore score{pair.id, pair.category, rouge1(pair.pred, pair.gold), cosine_tf(pair.pred, pair.gold)};
    auto& bucket = sums[pair.category];
    bucket.rouge_f += score.rouge.f;
    bucket.cosine += score.cosine;
    ++bucket.count;
    total.rouge_f += score.rouge.f;
    total.cosine += score.cosine;
    ++total.count;
    report.per_pair.push_back(std::move(score));
  }

  auto mean = [](const Sums& s) {
    auto n = static_cast<double>(s.count);
    return Aggregate{s.rouge_f / n, s.cosine / n, s.count};
  };
  for (const auto& [name, s] : sums) report.per_category.push_back({name, mean(s)});
  std::stable_sort(report.per_category.begin(), report.per_category.end(),
                   [](const CategoryAggregate& a, const CategoryAggregate& b) {
                     return category_rank(a.category) < category_rank(b.category);
                   });
  report.overall = mean(total);
  return report;
}

ReportPaths write_report_csv(const EvalReport& report, const std::filesystem::path& prefix) {
  ReportPaths paths{prefix.string() + ".pairs.csv", prefix.string() + ".summary.csv"};

  std::ofstream pairs(paths.pairs, std::ios::binary | std::ios::trunc);
  if (!pairs) throw std::runtime_error("cannot write " + paths.pairs.string());
  pairs << "id,category,rouge_p,rouge_r,rouge_f,cosine\n";
  for (const auto& row : report.per_pair) {
    pairs << csv_field(row.id) << ',' << csv_field(row.category) << ',' << format_fixed(row.rouge.precision) << ','
          << format_fixed(row.rouge.recall) << ',' << format_fixed(row.rouge.f) << ',' << format_fixed(row.cosine)
          << '\n';
  }
  if (!pairs.flush()) throw std::runtime_error("cannot write " + paths.pairs.string());

  std::ofstream summary(paths.summary, std::ios::binary | std::ios::trunc);
  if (!summary) throw std::runtime_error("cannot write " + paths.summary.string());
  summary << "category,count,mean_rouge_f,mean_cosine\n";
  auto row = [&](const std::string& label, const Aggregate& a) {
    summary << csv_field(label) << ',' << a.count << ',' << format_fixed(a.mean_rouge_f) << ','
            << format_fixed(a.mean_cosine) << '\n';
  };
  for (const auto& c : report.per_category) row(c.category, c.scores);
  row("overall", report.overall);
  if (!summary.flush()) throw std::runtime_error("cannot write " + paths.summary.string());
  return paths;
}

}  // namespace blvrun
