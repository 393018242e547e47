#include "blvrun/history_store.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include <json.hpp>

namespace blvrun {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string trimmed(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || is_space(text[i + 1]))) {
      if (auto s = trimmed(text.substr(start, i + 1 - start)); !s.empty()) sentences.push_back(std::move(s));
      start = i + 1;
    }
  }
  if (auto s = trimmed(text.substr(start)); !s.empty()) sentences.push_back(std::move(s));
  return sentences;
}

std::string format_iso8601(std::chrono::sys_seconds t) {
  std::time_t raw = t.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&raw, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::optional<std::chrono::sys_seconds> parse_iso8601(std::string_view text) {
  std::tm tm{};
  char zone = 0;
  int consumed = 0;
  std::string s(text);
  if (std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%c%n", &tm.tm_year, &tm.tm_mon, &tm.tm_mday, &tm.tm_hour,
                  &tm.tm_min, &tm.tm_sec, &zone, &consumed) != 7 ||
      zone != 'Z' || static_cast<std::size_t>(consumed) != s.size())
    return std::nullopt;
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return std::chrono::sys_seconds(std::chrono::seconds(timegm(&tm)));
}

std::filesystem::path default_state_dir() {
  if (const char* dir = std::getenv("BLVRUN_STATE_DIR"); dir != nullptr && *dir != '\0') return dir;
  if (const char* xdg = std::getenv("XDG_STATE_HOME"); xdg != nullptr && *xdg != '\0')
    return std::filesystem::path(xdg) / "blvrun";
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0')
    return std::filesystem::path(home) / ".local" / "state" / "blvrun";
  return std::filesystem::temp_directory_path() / "blvrun";
}

HistoryStore::HistoryStore(std::filesystem::path state_dir)
    : dir_(std::move(state_dir)), file_(dir_ / "last.json") {}

void HistoryStore::save_last(const HistoryRecord& record) const {
  nlohmann::json doc = {
      {"timestamp", format_iso8601(record.timestamp)},
      {"script", record.script},
      {"summary_text", record.summary_text},
      {"backend", record.backend},
      {"category", record.category},
  };
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw StorageError("cannot create state directory " + dir_.string() + ": " + ec.message());

  auto temp = dir_ / ("last.json.tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + temp.string());
    out << doc.dump() << '\n';
    if (!out.flush()) {
      out.close();
      std::filesystem::remove(temp, ec);
      throw StorageError("cannot write " + temp.string());
    }
  }
  std::filesystem::rename(temp, file_, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(temp, ignored);
    throw StorageError("cannot replace " + file_.string() + ": " + ec.message());
  }
}

std::optional<HistoryRecord> HistoryStore::load_last(std::ostream* warnings) const {
  std::ifstream in(file_, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buffer;
  buffer << in.rdbuf();

  auto warn = [&](const std::string& why) {
    (warnings != nullptr ? *warnings : std::cerr)
        << "blvrun: ignoring unreadable history file " << file_.string() << " (" << why << ")\n";
    return std::nullopt;
  };
  auto doc = nlohmann::json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return warn("not a JSON object");
  try {
    HistoryRecord record;
    auto stamp = parse_iso8601(doc.at("timestamp").get<std::string>());
    if (!stamp) return warn("bad timestamp");
    record.timestamp = *stamp;
    record.script = doc.at("script").get<std::string>();
    record.summary_text = doc.at("summary_text").get<std::string>();
    record.backend = doc.at("backend").get<std::string>();
    record.category = doc.at("category").get<std::string>();
    return record;
  } catch (const nlohmann::json::exception& e) {
    return warn(e.what());
  }
}

std::vector<std::string> HistoryStore::prev(std::size_t n, std::ostream* warnings) const {
  auto record = load_last(warnings);
  if (!record) return {};
  auto sentences = split_sentences(record->summary_text);
  if (sentences.size() > n) sentences.resize(n);
  return sentences;
}

}  // namespace blvrun
