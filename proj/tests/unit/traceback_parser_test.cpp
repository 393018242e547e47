#include <doctest.h>

#include "blvrun/traceback_parser.hpp"
#include "test_support.hpp"

using namespace blvrun;
using blvrun::testing::fixture;
using blvrun::testing::load_manifest;

namespace {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

ParsedTraceback parse_all(const std::string& text) {
  auto span = detect_traceback(text);
  REQUIRE(span.has_value());
  return parse_traceback(text, *span);
}

}  // namespace

TEST_CASE("strip_ansi removes CSI and OSC sequences") {
  CHECK(strip_ansi("\x1b[31mError\x1b[0m") == "Error");
  CHECK(strip_ansi("plain text") == "plain text");
  CHECK(strip_ansi("a\x1b]0;title\x07" "b") == "ab");
  CHECK(strip_ansi("a\x1b]8;;http://x\x1b\\link\x1b]8;;\x1b\\") == "alink");
  CHECK(strip_ansi("\x1b[1;35mTraceback\x1b[m (most") == "Traceback (most");
  CHECK(strip_ansi("tail\x1b") == "tail");
}

TEST_CASE("sanitize_utf8 replaces invalid sequences") {
  CHECK(sanitize_utf8("caf\xc3\xa9") == "caf\xc3\xa9");
  CHECK(sanitize_utf8("a\xff" "b") == "a\xEF\xBF\xBD" "b");
  CHECK(sanitize_utf8("\xc3") == "\xEF\xBF\xBD");
  CHECK(sanitize_utf8("\xed\xa0\x80") == "\xEF\xBF\xBD\xEF\xBF\xBD\xEF\xBF\xBD");
}

TEST_CASE("detect_traceback") {
  SUBCASE("absent without the keyword") { CHECK_FALSE(detect_traceback("hello\nworld\n").has_value()); }

  SUBCASE("whole input") {
    auto text = fixture("sample").stderr_text();
    auto span = detect_traceback(text);
    REQUIRE(span);
    CHECK(*span == TextSpan{0, text.size()});
  }

  SUBCASE("last of two tracebacks") {
    auto text = fixture("two_tracebacks").stderr_text();
    auto span = detect_traceback(text);
    REQUIRE(span);
    CHECK(span->begin == text.rfind(std::string(kTracebackHeader)));
    CHECK(span->end == text.size());
    CHECK(text.substr(span->begin).find("continuing after") == std::string::npos);
  }

  SUBCASE("bare keyword in program output is not a traceback") {
    auto text = fixture("keyword_in_output").stderr_text();
    REQUIRE(text.find("Traceback") != std::string::npos);
    CHECK_FALSE(detect_traceback(text).has_value());
  }

  SUBCASE("header-less SyntaxError output is not detected") {
    CHECK_FALSE(detect_traceback(fixture("syntax_error").stderr_text()).has_value());
  }

  SUBCASE("chain starts at the first block") {
    auto text = "noise\n" + fixture("chained_explicit").stderr_text();
    auto span = detect_traceback(text);
    REQUIRE(span);
    CHECK(span->begin == 6);
  }

  SUBCASE("malformed tail runs to end of text") {
    std::string text = "out\nTraceback (most recent call last):\n  File \"a.py\", line 3, in <module>\n    f(";
    auto span = detect_traceback(text);
    REQUIRE(span);
    CHECK(span->begin == 4);
    CHECK(span->end == text.size());
  }

  SUBCASE("trailing program output is excluded") {
    auto tb = fixture("key_error").stderr_text();
    auto text = tb + "Exception ignored in atexit callback\n";
    auto span = detect_traceback(text);
    REQUIRE(span);
    CHECK(span->end == tb.size());
  }
}

TEST_CASE("parse_traceback on the canonical two-frame fixture") {
  auto tb = parse_all(fixture("sample").stderr_text());
  REQUIRE(tb.frames.size() == 2);
  CHECK(tb.frames[0].file_path == "FIXTURE_ROOT/sample.py");
  CHECK(tb.frames[0].line_number == 3);
  CHECK(tb.frames[0].function_name == "<module>");
  CHECK(tb.frames[0].source_line == std::optional<std::string>("foo()"));
  CHECK(tb.frames[1].line_number == 2);
  CHECK(tb.frames[1].function_name == "foo");
  CHECK(tb.frames[1].source_line == std::optional<std::string>("return 1 / 0"));
  CHECK(tb.exception_type == "ZeroDivisionError");
  CHECK(tb.exception_message == "division by zero");
  CHECK(tb.cause == nullptr);
  CHECK_FALSE(tb.cause_kind.has_value());
}

TEST_CASE("parse_traceback links chained exceptions") {
  SUBCASE("implicit context") {
    auto tb = parse_all(fixture("chained_implicit").stderr_text());
    CHECK(tb.exception_type == "KeyError");
    REQUIRE(tb.cause != nullptr);
    CHECK(tb.cause_kind == CauseKind::ImplicitContext);
    CHECK(tb.cause->exception_type == "TypeError");
    CHECK(tb.cause->exception_message == "object of type 'int' has no len()");
    CHECK(tb.chain_depth() == 2);
  }
  SUBCASE("explicit cause") {
    auto tb = parse_all(fixture("chained_explicit").stderr_text());
    CHECK(tb.exception_type == "RuntimeError");
    REQUIRE(tb.cause != nullptr);
    CHECK(tb.cause_kind == CauseKind::ExplicitCause);
    CHECK(tb.cause->exception_type == "ValueError");
    CHECK(tb.cause->cause == nullptr);
  }
  SUBCASE("three links") {
    std::string text =
        "Traceback (most recent call last):\n  File \"a.py\", line 1, in <module>\nKeyError: 'a'\n\n"
        "During handling of the above exception, another exception occurred:\n\n"
        "Traceback (most recent call last):\n  File \"a.py\", line 2, in <module>\nValueError: b\n\n"
        "The above exception was the direct cause of the following exception:\n\n"
        "Traceback (most recent call last):\n  File \"a.py\", line 3, in <module>\nRuntimeError: c\n";
    auto tb = parse_all(text);
    CHECK(tb.chain_depth() == 3);
    CHECK(tb.cause_kind == CauseKind::ExplicitCause);
    CHECK(tb.cause->cause_kind == CauseKind::ImplicitContext);
    CHECK(tb.cause->cause->exception_type == "KeyError");
  }
}

TEST_CASE("parse_traceback folds elided recursion") {
  auto tb = parse_all(fixture("deep_recursion").stderr_text());
  CHECK(tb.exception_type == "RecursionError");
  REQUIRE(tb.frames.size() == 4);
  CHECK(tb.frames.back().repeat_count == 997);
  CHECK(std::count_if(tb.frames.begin(), tb.frames.end(), [](const SourceFrame& f) { return f.repeat_count > 1; }) ==
        1);
}

TEST_CASE("parse_traceback tolerates caret decoration lines") {
  std::string text =
      "Traceback (most recent call last):\n"
      "  File \"/app/main.py\", line 7, in <module>\n"
      "    total = add(1, \"2\")\n"
      "            ^^^^^^^^^^^\n"
      "  File \"/app/main.py\", line 2, in add\n"
      "    return a + b\n"
      "           ~~^~~\n"
      "TypeError: unsupported operand type(s) for +: 'int' and 'str'\n";
  auto tb = parse_all(text);
  REQUIRE(tb.frames.size() == 2);
  CHECK(tb.frames[0].source_line == std::optional<std::string>("total = add(1, \"2\")"));
  CHECK(tb.frames[1].source_line == std::optional<std::string>("return a + b"));
  CHECK(tb.exception_type == "TypeError");
}

TEST_CASE("exception line splitting") {
  auto parse_line = [](const std::string& last) {
    return parse_all("Traceback (most recent call last):\n  File \"x.py\", line 1, in <module>\n" + last + "\n");
  };
  CHECK(parse_line("KeyboardInterrupt").exception_type == "KeyboardInterrupt");
  CHECK(parse_line("KeyboardInterrupt").exception_message.empty());
  auto dotted = parse_line("socket.gaierror: [Errno -2] Name or service not known");
  CHECK(dotted.exception_type == "socket.gaierror");
  CHECK(dotted.exception_message == "[Errno -2] Name or service not known");
  CHECK(parse_line("ValueError: a: b").exception_message == "a: b");
  CHECK(parse_line("__main__.f.<locals>.Boom: x").exception_type == "__main__.f.<locals>.Boom");
}

TEST_CASE("parse_traceback error and best-effort paths") {
  std::string junk = "Traceback (most recent call last):\n    nothing useful here\n";
  CHECK_THROWS_AS(parse_traceback(junk, {0, junk.size()}), ParseError);
  CHECK_THROWS_AS(parse_traceback("abc", {0, 10}), ParseError);

  std::string cut = "Traceback (most recent call last):\n  File \"a.py\", line 3, in <module>\n    f(";
  auto tb = parse_traceback(cut, *detect_traceback(cut));
  CHECK(tb.frames.size() == 1);
  CHECK(tb.exception_type == "TruncatedTraceback");
}

TEST_CASE("frame header variants") {
  std::string text =
      "Traceback (most recent call last):\n"
      "  File \"<frozen importlib._bootstrap>\", line 1050, in _gcd_import\n"
      "  File \"C:\\\\Users\\\\me\\\\a \"quoted\".py\", line 12, in run\n"
      "    go()\n"
      "ImportError: nope\n";
  auto tb = parse_all(text);
  REQUIRE(tb.frames.size() == 2);
  CHECK(tb.frames[0].file_path == "<frozen importlib._bootstrap>");
  CHECK_FALSE(tb.frames[0].source_line.has_value());
  CHECK(tb.frames[1].file_path == "C:\\\\Users\\\\me\\\\a \"quoted\".py");
  CHECK(tb.frames[1].line_number == 12);
}

TEST_CASE("deepest_user_frame") {
  auto markers = default_library_markers();
  ParsedTraceback tb;
  SUBCASE("all library frames") {
    tb.frames = {{"/usr/lib/python3/site-packages/a.py", 1, "f", {}, 1},
                 {"/venv/lib/python3.11/dist-packages/b.py", 2, "g", {}, 1}};
    CHECK_FALSE(deepest_user_frame(tb, markers).has_value());
  }
  SUBCASE("user frame then library frame") {
    tb.frames = {{"user.py", 4, "main", {}, 1}, {"lib/site-packages/x.py", 9, "call", {}, 1}};
    auto frame = deepest_user_frame(tb, markers);
    REQUIRE(frame);
    CHECK(frame->file_path == "user.py");
  }
  SUBCASE("alternating frames match a linear scan") {
    tb.frames = {{"app/main.py", 1, "<module>", {}, 1},
                 {"/env/lib/python3.10/site-packages/pkg/core.py", 10, "run", {}, 1},
                 {"app/handlers.py", 20, "on_item", {}, 1},
                 {"/env/lib/python3.10/site-packages/pkg/util.py", 30, "check", {}, 1},
                 {"<frozen runpy>", 40, "_run_code", {}, 1}};
    std::optional<SourceFrame> scan;
    for (const auto& f : tb.frames) {
      bool lib = false;
      for (const auto& m : markers) lib = lib || f.file_path.find(m) != std::string::npos;
      if (!lib) scan = f;
    }
    auto frame = deepest_user_frame(tb, markers);
    REQUIRE(frame);
    REQUIRE(scan);
    CHECK(*frame == *scan);
    CHECK(frame->file_path == "app/handlers.py");
  }
  SUBCASE("custom markers") {
    tb.frames = {{"vendor/x.py", 1, "f", {}, 1}, {"mine.py", 2, "g", {}, 1}};
    CHECK(deepest_user_frame(tb, {"mine"})->file_path == "vendor/x.py");
  }
}

TEST_CASE("parser invariants over every committed fixture") {
  for (const auto& c : load_manifest()) {
    CAPTURE(c.name);
    auto text = c.stderr_text();
    auto span = detect_traceback(text);
    CHECK(span.has_value() == c.has_traceback);
    if (!span) continue;

    auto tb = parse_traceback(text, *span);
    std::size_t separators = count_occurrences(text.substr(span->begin, span->size()), kExplicitCauseSeparator) +
                             count_occurrences(text.substr(span->begin, span->size()), kImplicitContextSeparator);
    CHECK(tb.chain_depth() == separators + 1);

    for (const ParsedTraceback* link = &tb; link != nullptr; link = link->cause.get()) {
      CHECK(link->raw_span.begin < link->raw_span.end);
      auto link_text = std::string_view(text).substr(link->raw_span.begin, link->raw_span.size());
      CHECK(link_text.find(kTracebackHeader) != std::string_view::npos);
      CHECK(count_occurrences(link_text, "File \"") == link->frames.size());
      CHECK(is_exception_name(link->exception_type));
      for (const auto& f : link->frames) {
        CHECK(f.line_number >= 1);
        CHECK(f.repeat_count >= 1);
      }
    }
  }
}
