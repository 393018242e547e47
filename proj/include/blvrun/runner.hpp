#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "blvrun/model_client.hpp"
#include "blvrun/summarizer.hpp"
#include "blvrun/traceback_parser.hpp"

namespace blvrun {

inline constexpr std::size_t kCaptureLimitBytes = std::size_t{1} << 20;

inline constexpr std::string_view kSummaryOpenLine = "── error summary ──";
inline constexpr std::string_view kSummaryCloseLine = "────────────────────";

// Keeps the last `limit` bytes of a stream; older bytes are dropped and the
// buffer is flagged as truncated.
class CaptureBuffer {
 public:
  explicit CaptureBuffer(std::size_t limit = kCaptureLimitBytes) : limit_(limit) {}

  void append(std::string_view bytes);

  const std::string& raw() const { return data_; }
  bool truncated() const { return truncated_; }
  std::size_t total_bytes() const { return total_; }
  // ANSI-stripped, UTF-8-sanitized view of raw(); cached until the next append.
  const std::string& text() const;

 private:
  std::size_t limit_;
  std::string data_;
  std::size_t total_ = 0;
  bool truncated_ = false;
  mutable std::optional<std::string> text_;
};

struct RunOptions {
  bool raw = false;
  std::string interpreter = "python3";
  bool offline = false;  // never contact the model backend
  std::vector<std::string> library_markers = default_library_markers();
  std::optional<std::filesystem::path> state_dir;  // default_state_dir() when unset
  bool color = false;
};

// Where forwarded child output and tool messages go.
struct RunStreams {
  std::ostream* out = nullptr;  // std::cout when null
  std::ostream* err = nullptr;  // std::cerr when null
};

struct RunOutcome {
  int exit_code = 0;
  bool had_traceback = false;
  std::optional<Summary> summary;
  std::string stderr_tail;
  std::chrono::milliseconds wall_time{0};
  std::size_t stdout_bytes = 0;
  std::size_t stderr_bytes = 0;
  bool stderr_truncated = false;
  bool history_saved = false;
};

class SpawnError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kSpawnFailureExitCode = 127;

// Runs `interpreter script args...`, forwarding stdout live and capturing
// stderr. When the capture ends in a traceback, prints a framed summary to
// the output stream and records it in the history store. The exit code is
// the child's (128 + signal when it was killed). Throws SpawnError when the
// script or interpreter cannot be started.
RunOutcome run_script(const std::string& interpreter, const std::filesystem::path& script,
                      const std::vector<std::string>& args, const BackendConfig& config, const RunOptions& options,
                      const RunStreams& streams = {});

// The framed block printed after a failing run, one sentence per line.
std::string format_summary_block(const Summary& summary, bool color);

}  // namespace blvrun
