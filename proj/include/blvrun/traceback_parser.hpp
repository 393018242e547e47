#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace blvrun {

// Byte offsets [begin, end) into a captured text.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const TextSpan&) const = default;
};

struct SourceFrame {
  std::string file_path;
  int line_number = 1;
  std::string function_name;
  std::optional<std::string> source_line;
  // Multiplier from a "[Previous line repeated N more times]" marker.
  int repeat_count = 1;

  bool operator==(const SourceFrame&) const = default;
};

enum class CauseKind { ExplicitCause, ImplicitContext };

const char* to_string(CauseKind kind);

// One link of a (possibly chained) traceback. The outermost object is the
// exception that terminated the program; `cause` points at the block printed
// before it.
struct ParsedTraceback {
  std::vector<SourceFrame> frames;  // outermost call first, error site last
  std::string exception_type;
  std::string exception_message;
  std::shared_ptr<const ParsedTraceback> cause;
  std::optional<CauseKind> cause_kind;
  TextSpan raw_span;

  // Number of links in the chain, this one included.
  std::size_t chain_depth() const;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kTracebackHeader =
    "Traceback (most recent call last):";
inline constexpr std::string_view kExplicitCauseSeparator =
    "The above exception was the direct cause of the following exception:";
inline constexpr std::string_view kImplicitContextSeparator =
    "During handling of the above exception, another exception occurred:";

// Path substrings that identify interpreter or third-party frames.
std::vector<std::string> default_library_markers();

// Removes CSI (ESC [ ... final) and OSC (ESC ] ... BEL | ESC \) sequences as
// well as two-byte ESC escapes. Everything else is kept in order.
std::string strip_ansi(std::string_view raw);

// Replaces invalid UTF-8 sequences with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

// Locates the last complete traceback block. The span starts at the header
// of the first block of its chain and ends after the final exception line.
std::optional<TextSpan> detect_traceback(std::string_view text);

// Parses the traceback inside `span` (as returned by detect_traceback).
// Caret/tilde decoration lines and extra source lines are ignored.
ParsedTraceback parse_traceback(std::string_view text, TextSpan span);

// Last frame of `tb` whose path contains none of the markers.
std::optional<SourceFrame> deepest_user_frame(
    const ParsedTraceback& tb, const std::vector<std::string>& library_markers);

// True when `token` is an identifier, optionally dotted ("socket.gaierror").
bool is_exception_name(std::string_view token);

}  // namespace blvrun
