#include "blvrun/traceback_parser.hpp"

#include <algorithm>
#include <charconv>

namespace blvrun {

namespace {

struct Line {
  std::size_t begin;     // offset of the first byte
  std::size_t end;       // offset past the last content byte (no newline)
  std::size_t next;      // offset of the following line
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view text, std::size_t from, std::size_t to) {
  std::vector<Line> lines;
  std::size_t pos = from;
  while (pos < to) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos || nl >= to) nl = to;
    std::size_t content_end = nl;
    if (content_end > pos && text[content_end - 1] == '\r') --content_end;
    lines.push_back({pos, content_end, std::min(nl + 1, to), text.substr(pos, content_end - pos)});
    pos = nl + 1;
  }
  return lines;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool is_indented(std::string_view line) { return !line.empty() && (line[0] == ' ' || line[0] == '\t'); }

bool is_header(std::string_view line) { return trim(line) == kTracebackHeader; }

std::optional<CauseKind> separator_kind(std::string_view line) {
  auto t = trim(line);
  if (t == kExplicitCauseSeparator) return CauseKind::ExplicitCause;
  if (t == kImplicitContextSeparator) return CauseKind::ImplicitContext;
  return std::nullopt;
}

bool is_ident_start(unsigned char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_' || c >= 0x80;
}
bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

// `  File "path", line N, in func`
std::optional<SourceFrame> parse_frame_header(std::string_view line) {
  if (!is_indented(line)) return std::nullopt;
  auto t = trim(line);
  constexpr std::string_view kPrefix = "File \"";
  constexpr std::string_view kLine = "\", line ";
  if (!t.starts_with(kPrefix)) return std::nullopt;
  t.remove_prefix(kPrefix.size());
  auto at = t.rfind(kLine);
  if (at == std::string_view::npos) return std::nullopt;
  SourceFrame frame;
  frame.file_path = std::string(t.substr(0, at));
  auto rest = t.substr(at + kLine.size());
  int number = 0;
  auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), number);
  if (ec != std::errc{} || number < 1) return std::nullopt;
  rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
  constexpr std::string_view kIn = ", in ";
  if (rest.starts_with(kIn)) {
    frame.function_name = std::string(rest.substr(kIn.size()));
  } else if (!rest.empty()) {
    return std::nullopt;
  }
  frame.line_number = number;
  return frame;
}

// `[Previous line repeated N more times]`
std::optional<int> parse_repeat_marker(std::string_view line) {
  auto t = trim(line);
  constexpr std::string_view kPrefix = "[Previous line repeated ";
  constexpr std::string_view kSuffix = " more time";
  if (!t.starts_with(kPrefix) || !t.ends_with("]")) return std::nullopt;
  t.remove_prefix(kPrefix.size());
  int n = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), n);
  if (ec != std::errc{} || n < 0) return std::nullopt;
  std::string_view after(ptr, static_cast<std::size_t>(t.data() + t.size() - ptr));
  if (!after.starts_with(kSuffix)) return std::nullopt;
  return n;
}

// Lines made only of caret/tilde underlining.
bool is_decoration(std::string_view line) {
  auto t = trim(line);
  return !t.empty() && std::all_of(t.begin(), t.end(), [](char c) { return c == '^' || c == '~' || c == ' '; });
}

struct ExceptionLine {
  std::string type;
  std::string message;
};

std::optional<ExceptionLine> parse_exception_line(std::string_view line) {
  if (line.empty() || is_indented(line)) return std::nullopt;
  auto colon = line.find(": ");
  std::string_view type = colon == std::string_view::npos ? trim(line) : line.substr(0, colon);
  if (!is_exception_name(type)) return std::nullopt;
  ExceptionLine out;
  out.type = std::string(type);
  if (colon != std::string_view::npos) out.message = std::string(trim(line.substr(colon + 2)));
  return out;
}

struct Block {
  ParsedTraceback tb;
  bool has_exception = false;
  std::optional<CauseKind> link_to_previous;
};

}  // namespace

const char* to_string(CauseKind kind) {
  return kind == CauseKind::ExplicitCause ? "explicit_cause" : "implicit_context";
}

std::size_t ParsedTraceback::chain_depth() const {
  std::size_t depth = 1;
  for (auto link = cause.get(); link != nullptr; link = link->cause.get()) ++depth;
  return depth;
}

std::vector<std::string> default_library_markers() {
  return {"site-packages", "dist-packages", "/lib/python", "<frozen "};
}

bool is_exception_name(std::string_view token) {
  if (token.empty()) return false;
  std::size_t pos = 0;
  while (true) {
    auto dot = token.find('.', pos);
    auto part = token.substr(pos, dot == std::string_view::npos ? std::string_view::npos : dot - pos);
    bool ok = part == "<locals>" ||
              (!part.empty() && is_ident_start(static_cast<unsigned char>(part[0])) &&
               std::all_of(part.begin(), part.end(),
                           [](char c) { return is_ident_char(static_cast<unsigned char>(c)); }));
    if (!ok) return false;
    if (dot == std::string_view::npos) return true;
    pos = dot + 1;
  }
}

std::string strip_ansi(std::string_view raw) {
  constexpr char kEsc = '\x1b';
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    if (raw[i] != kEsc) {
      out.push_back(raw[i++]);
      continue;
    }
    if (i + 1 >= raw.size()) break;
    char kind = raw[i + 1];
    if (kind == '[') {
      std::size_t j = i + 2;
      while (j < raw.size() && static_cast<unsigned char>(raw[j]) >= 0x20 &&
             static_cast<unsigned char>(raw[j]) <= 0x3F)
        ++j;
      while (j < raw.size() && static_cast<unsigned char>(raw[j]) >= 0x20 &&
             static_cast<unsigned char>(raw[j]) <= 0x2F)
        ++j;
      i = j < raw.size() ? j + 1 : j;  // final byte 0x40-0x7E
    } else if (kind == ']') {
      std::size_t j = i + 2;
      while (j < raw.size()) {
        if (raw[j] == '\x07') {
          ++j;
          break;
        }
        if (raw[j] == kEsc && j + 1 < raw.size() && raw[j + 1] == '\\') {
          j += 2;
          break;
        }
        ++j;
      }
      i = j;
    } else {
      i += 2;
    }
  }
  return out;
}

std::string sanitize_utf8(std::string_view bytes) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  auto cont = [&](std::size_t k) {
    return k < bytes.size() && (static_cast<unsigned char>(bytes[k]) & 0xC0) == 0x80;
  };
  while (i < bytes.size()) {
    auto c = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    if (c < 0x80) {
      len = 1;
    } else if (c >= 0xC2 && c <= 0xDF) {
      len = cont(i + 1) ? 2 : 0;
    } else if (c >= 0xE0 && c <= 0xEF) {
      if (cont(i + 1) && cont(i + 2)) {
        auto c1 = static_cast<unsigned char>(bytes[i + 1]);
        bool overlong = c == 0xE0 && c1 < 0xA0;
        bool surrogate = c == 0xED && c1 >= 0xA0;
        len = (overlong || surrogate) ? 0 : 3;
      }
    } else if (c >= 0xF0 && c <= 0xF4) {
      if (cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        auto c1 = static_cast<unsigned char>(bytes[i + 1]);
        bool overlong = c == 0xF0 && c1 < 0x90;
        bool too_big = c == 0xF4 && c1 >= 0x90;
        len = (overlong || too_big) ? 0 : 4;
      }
    }
    if (len == 0) {
      out.append(kReplacement);
      ++i;
    } else {
      out.append(bytes.substr(i, len));
      i += len;
    }
  }
  return out;
}

std::optional<TextSpan> detect_traceback(std::string_view text) {
  auto lines = split_lines(text, 0, text.size());
  std::optional<std::size_t> last_header;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (is_header(lines[i].text)) last_header = i;
  if (!last_header) return std::nullopt;

  // Walk back over "separator" links to the first block of the chain.
  std::size_t first_header = *last_header;
  while (true) {
    std::size_t k = first_header;
    while (k > 0 && trim(lines[k - 1].text).empty()) --k;
    if (k == 0 || !separator_kind(lines[k - 1].text)) break;
    std::size_t sep = k - 1;
    std::optional<std::size_t> prev;
    for (std::size_t j = sep; j-- > 0;) {
      if (is_header(lines[j].text)) {
        prev = j;
        break;
      }
    }
    if (!prev) break;
    first_header = *prev;
  }

  TextSpan span{lines[first_header].begin, text.size()};
  for (std::size_t i = *last_header + 1; i < lines.size(); ++i) {
    const auto& line = lines[i].text;
    if (line.empty() || is_indented(line)) continue;
    if (parse_exception_line(line)) span.end = lines[i].next;
    break;
  }
  return span;
}

ParsedTraceback parse_traceback(std::string_view text, TextSpan span) {
  if (span.begin > span.end || span.end > text.size())
    throw ParseError("traceback span lies outside the captured text");

  std::vector<Block> blocks;
  std::optional<CauseKind> pending_link;
  Block* open = nullptr;  // block still collecting frames

  auto start_block = [&](std::size_t offset) {
    Block block;
    block.tb.raw_span = {offset, offset};
    block.link_to_previous = pending_link;
    if (!pending_link) blocks.clear();
    pending_link.reset();
    blocks.push_back(std::move(block));
    open = &blocks.back();
  };

  for (const auto& line : split_lines(text, span.begin, span.end)) {
    if (is_header(line.text)) {
      start_block(line.begin);
      open->tb.raw_span.end = line.next;
      continue;
    }
    if (auto kind = separator_kind(line.text)) {
      pending_link = kind;
      open = nullptr;
      continue;
    }
    if (auto frame = parse_frame_header(line.text)) {
      if (open == nullptr) start_block(line.begin);
      open->tb.frames.push_back(std::move(*frame));
      open->tb.raw_span.end = line.next;
      continue;
    }
    if (auto repeats = parse_repeat_marker(line.text)) {
      if (open != nullptr && !open->tb.frames.empty()) {
        open->tb.frames.back().repeat_count = *repeats + 1;
        open->tb.raw_span.end = line.next;
      }
      continue;
    }
    if (trim(line.text).empty()) continue;
    if (is_indented(line.text)) {
      if (open != nullptr && !open->tb.frames.empty()) {
        auto& frame = open->tb.frames.back();
        if (!frame.source_line && !is_decoration(line.text)) frame.source_line = std::string(trim(line.text));
        open->tb.raw_span.end = line.next;
      }
      continue;
    }
    if (auto exc = parse_exception_line(line.text)) {
      if (open == nullptr) start_block(line.begin);
      open->tb.exception_type = std::move(exc->type);
      open->tb.exception_message = std::move(exc->message);
      open->tb.raw_span.end = line.next;
      open->has_exception = true;
      open = nullptr;
    }
  }

  std::erase_if(blocks, [](const Block& b) { return b.tb.frames.empty() && !b.has_exception; });
  if (blocks.empty()) throw ParseError("no frame header or exception line found in traceback text");

  std::shared_ptr<ParsedTraceback> chain;
  for (auto& block : blocks) {
    if (!block.has_exception) block.tb.exception_type = "TruncatedTraceback";
    auto link = std::make_shared<ParsedTraceback>(std::move(block.tb));
    if (chain) {
      link->cause = std::move(chain);
      link->cause_kind = block.link_to_previous.value_or(CauseKind::ImplicitContext);
    }
    chain = std::move(link);
  }
  return std::move(*chain);
}

std::optional<SourceFrame> deepest_user_frame(const ParsedTraceback& tb,
                                              const std::vector<std::string>& library_markers) {
  for (auto it = tb.frames.rbegin(); it != tb.frames.rend(); ++it) {
    bool library = std::any_of(library_markers.begin(), library_markers.end(), [&](const std::string& marker) {
      return !marker.empty() && it->file_path.find(marker) != std::string::npos;
    });
    if (!library) return *it;
  }
  return std::nullopt;
}

}  // namespace blvrun
