#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blvrun {

// Lowercased maximal runs of letters, digits and underscore. Non-ASCII
// bytes count as letters so UTF-8 words stay whole.
std::vector<std::string> tokenize(std::string_view text);

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

// ROUGE-1 with clipped unigram counts.
RougeScore rouge1(std::string_view pred, std::string_view ref);

// Cosine of raw term-frequency vectors. Both empty -> 1, one empty -> 0.
double cosine_tf(std::string_view pred, std::string_view ref);

struct EvalPair {
  std::string id;
  std::string category;
  std::string pred;
  std::string gold;
};

struct PairScore {
  std::string id;
  std::string category;
  RougeScore rouge;
  double cosine = 0.0;
};

struct Aggregate {
  double mean_rouge_f = 0.0;
  double mean_cosine = 0.0;
  std::size_t count = 0;
};

struct CategoryAggregate {
  std::string category;
  Aggregate scores;
};

struct EvalReport {
  std::vector<PairScore> per_pair;  // sorted by id
  // Supported categories in canonical order, then other names alphabetically.
  std::vector<CategoryAggregate> per_category;
  Aggregate overall;

  const Aggregate* category(std::string_view name) const;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingGoldError : public EvalError {
 public:
  explicit MissingGoldError(std::string id)
      : EvalError("no gold summary for record '" + id + "'"), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

EvalReport evaluate(std::vector<EvalPair> pairs);

struct ReportPaths {
  std::filesystem::path pairs;
  std::filesystem::path summary;
};

// Writes <prefix>.pairs.csv and <prefix>.summary.csv. Throws std::runtime_error
// when either file cannot be written.
ReportPaths write_report_csv(const EvalReport& report, const std::filesystem::path& prefix);

}  // namespace blvrun
