#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blvrun/error_taxonomy.hpp"

namespace blvrun {

enum class Split { Train, Test };

struct ErrorRecord {
  std::string id;
  std::string traceback_text;
  std::string error_type;
  std::optional<std::string> gold_summary;
  Split split = Split::Train;
};

class CorpusError : public std::runtime_error {
 public:
  enum class Kind { Io, EmptyCorpus, DuplicateId, EmptyInput };

  CorpusError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct LoadedCorpus {
  std::vector<ErrorRecord> records;  // file order
  std::size_t malformed_lines = 0;
};

// JSON-Lines with fields id, traceback_text, error_type, gold_summary
// (optional or null) and split ("train" | "test"). Malformed lines are
// skipped and counted; each is reported on `warnings` (std::cerr when null).
LoadedCorpus load_records(const std::filesystem::path& path, std::ostream* warnings = nullptr);

std::vector<ErrorRecord> filter_keyword(std::span<const ErrorRecord> records);
std::vector<ErrorRecord> filter_types(std::span<const ErrorRecord> records,
                                      std::span<const ErrorCategory> categories);

struct CorpusStats {
  std::size_t record_count = 0;
  double median_sentences = 0.0;
  double median_words = 0.0;
  std::map<std::string, std::size_t> type_histogram;
};

// Sentences per split_sentences(), with every newline also ending a sentence.
std::size_t count_sentences(std::string_view text);

CorpusStats corpus_stats(std::span<const ErrorRecord> records);

double median(std::vector<double> values);

// "record_count: N" / "median_sentences: X" / "median_words: Y", a blank
// line, then the histogram as CSV (error_type,count).
std::string format_stats_report(const CorpusStats& stats);

}  // namespace blvrun

namespace blvrun {

struct Prediction {
  std::string id;
  std::string summary;
};

// JSON-Lines of {"id", "summary"}. Throws CorpusError (Io, EmptyCorpus,
// DuplicateId); malformed lines are skipped and reported like load_records.
std::vector<Prediction> load_predictions(const std::filesystem::path& path, std::ostream* warnings = nullptr);

}  // namespace blvrun
