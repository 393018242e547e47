#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blvrun {

struct HistoryRecord {
  std::chrono::sys_seconds timestamp;
  std::string script;
  std::string summary_text;
  std::string backend;
  std::string category;

  bool operator==(const HistoryRecord&) const = default;
};

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Splits after '.', '!' or '?' when followed by whitespace or end of text.
// Delimiters stay on their sentence; blank segments are dropped.
std::vector<std::string> split_sentences(std::string_view text);

std::string format_iso8601(std::chrono::sys_seconds t);
std::optional<std::chrono::sys_seconds> parse_iso8601(std::string_view text);

// $BLVRUN_STATE_DIR, else $XDG_STATE_HOME/blvrun, else ~/.local/state/blvrun.
std::filesystem::path default_state_dir();

// Single-record store: last.json inside the state directory.
class HistoryStore {
 public:
  explicit HistoryStore(std::filesystem::path state_dir);

  const std::filesystem::path& file() const { return file_; }

  // Replaces the stored record via write-to-temp and rename. Throws StorageError.
  void save_last(const HistoryRecord& record) const;

  // Absent when nothing is stored. An unreadable file is reported on
  // `warnings` (std::cerr when null) and treated as absent.
  std::optional<HistoryRecord> load_last(std::ostream* warnings = nullptr) const;

  // First min(n, k) sentences of the stored summary; empty when none stored.
  std::vector<std::string> prev(std::size_t n, std::ostream* warnings = nullptr) const;

 private:
  std::filesystem::path dir_;
  std::filesystem::path file_;
};

}  // namespace blvrun
