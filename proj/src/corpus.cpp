#include "blvrun/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "blvrun/eval_metrics.hpp"
#include "blvrun/history_store.hpp"

namespace blvrun {

namespace {

std::optional<ErrorRecord> decode_record(const std::string& line, std::string& why) {
  auto doc = nlohmann::json::parse(line, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    why = "not a JSON object";
    return std::nullopt;
  }
  auto text_field = [&](const char* name) -> const nlohmann::json* {
    auto it = doc.find(name);
    if (it == doc.end() || !it->is_string()) {
      why = std::string("missing or non-string field \"") + name + "\"";
      return nullptr;
    }
    return &*it;
  };
  ErrorRecord record;
  const auto* id = text_field("id");
  const auto* text = id ? text_field("traceback_text") : nullptr;
  const auto* type = text ? text_field("error_type") : nullptr;
  const auto* split = type ? text_field("split") : nullptr;
  if (split == nullptr) return std::nullopt;
  record.id = id->get<std::string>();
  record.traceback_text = text->get<std::string>();
  record.error_type = type->get<std::string>();
  if (record.traceback_text.empty()) {
    why = "empty traceback_text";
    return std::nullopt;
  }
  auto split_name = split->get<std::string>();
  if (split_name == "train") {
    record.split = Split::Train;
  } else if (split_name == "test") {
    record.split = Split::Test;
  } else {
    why = "split must be \"train\" or \"test\"";
    return std::nullopt;
  }
  if (auto gold = doc.find("gold_summary"); gold != doc.end() && !gold->is_null()) {
    if (!gold->is_string()) {
      why = "gold_summary must be a string or null";
      return std::nullopt;
    }
    record.gold_summary = gold->get<std::string>();
  }
  return record;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

}  // namespace

LoadedCorpus load_records(const std::filesystem::path& path, std::ostream* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusError::Kind::Io, "cannot read corpus file " + path.string());
  std::ostream& warn = warnings != nullptr ? *warnings : std::cerr;

  LoadedCorpus corpus;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::string why;
    auto record = decode_record(line, why);
    if (!record) {
      ++corpus.malformed_lines;
      warn << "blvrun: " << path.string() << ":" << line_number << ": skipping malformed record (" << why << ")\n";
      continue;
    }
    if (!ids.insert(record->id).second)
      throw CorpusError(CorpusError::Kind::DuplicateId, "duplicate record id '" + record->id + "'");
    corpus.records.push_back(std::move(*record));
  }
  if (in.bad()) throw CorpusError(CorpusError::Kind::Io, "error while reading " + path.string());
  if (corpus.records.empty())
    throw CorpusError(CorpusError::Kind::EmptyCorpus, "no well-formed records in " + path.string());
  return corpus;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path, std::ostream* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError(CorpusError::Kind::Io, "cannot read prediction file " + path.string());
  std::ostream& warn = warnings != nullptr ? *warnings : std::cerr;

  std::vector<Prediction> predictions;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto doc = nlohmann::json::parse(line, nullptr, false);
    auto id = doc.is_object() ? doc.find("id") : doc.end();
    auto summary = doc.is_object() ? doc.find("summary") : doc.end();
    if (id == doc.end() || summary == doc.end() || !id->is_string() || !summary->is_string()) {
      warn << "blvrun: " << path.string() << ":" << line_number << ": skipping malformed prediction\n";
      continue;
    }
    Prediction p{id->get<std::string>(), summary->get<std::string>()};
    if (!ids.insert(p.id).second)
      throw CorpusError(CorpusError::Kind::DuplicateId, "duplicate prediction id '" + p.id + "'");
    predictions.push_back(std::move(p));
  }
  if (in.bad()) throw CorpusError(CorpusError::Kind::Io, "error while reading " + path.string());
  if (predictions.empty())
    throw CorpusError(CorpusError::Kind::EmptyCorpus, "no well-formed predictions in " + path.string());
  return predictions;
}

std::vector<ErrorRecord> filter_keyword(std::span<const ErrorRecord> records) {
  std::vector<ErrorRecord> kept;
  std::copy_if(records.begin(), records.end(), std::back_inserter(kept), [](const ErrorRecord& r) {
    return r.traceback_text.find("Traceback") != std::string::npos;
  });
  return kept;
}

std::vector<ErrorRecord> filter_types(std::span<const ErrorRecord> records,
                                      std::span<const ErrorCategory> categories) {
  std::vector<ErrorRecord> kept;
  std::copy_if(records.begin(), records.end(), std::back_inserter(kept), [&](const ErrorRecord& r) {
    return std::find(categories.begin(), categories.end(), classify(r.error_type)) != categories.end();
  });
  return kept;
}

std::size_t count_sentences(std::string_view text) {
  std::size_t count = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    count += split_sentences(line).size();
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return count;
}

double median(std::vector<double> values) {
  if (values.empty()) throw CorpusError(CorpusError::Kind::EmptyInput, "median of an empty list");
  auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

CorpusStats corpus_stats(std::span<const ErrorRecord> records) {
  if (records.empty()) throw CorpusError(CorpusError::Kind::EmptyCorpus, "corpus statistics need records");
  CorpusStats stats;
  stats.record_count = records.size();
  std::vector<double> sentences, words;
  sentences.reserve(records.size());
  words.reserve(records.size());
  for (const auto& record : records) {
    sentences.push_back(static_cast<double>(count_sentences(record.traceback_text)));
    words.push_back(static_cast<double>(tokenize(record.traceback_text).size()));
    ++stats.type_histogram[record.error_type];
  }
  stats.median_sentences = median(std::move(sentences));
  stats.median_words = median(std::move(words));
  return stats;
}

std::string format_stats_report(const CorpusStats& stats) {
  std::ostringstream out;
  out << "record_count: " << stats.record_count << '\n'
      << "median_sentences: " << format_number(stats.median_sentences) << '\n'
      << "median_words: " << format_number(stats.median_words) << '\n'
      << '\n'
      << "error_type,count\n";
  for (const auto& [type, count] : stats.type_histogram) {
    bool quote = type.find_first_of(",\"\n") != std::string::npos;
    if (quote) {
      out << '"';
      for (char c : type) out << (c == '"' ? "\"\"" : std::string(1, c));
      out << '"';
    } else {
      out << type;
    }
    out << ',' << count << '\n';
  }
  return out.str();
}

}  // namespace blvrun
