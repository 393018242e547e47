#include "blvrun/summarizer.hpp"

#include <iostream>

#include "blvrun/eval_metrics.hpp"

namespace blvrun {

namespace {

using Clock = std::chrono::steady_clock;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool gap = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      gap = true;
      continue;
    }
    if (gap) out.push_back(' ');
    gap = false;
    out.push_back(c);
  }
  return out;
}

bool is_continuation_byte(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

// Moves `pos` forward to the start of a UTF-8 code point.
std::size_t align_forward(std::string_view s, std::size_t pos) {
  while (pos < s.size() && is_continuation_byte(s[pos])) ++pos;
  return pos;
}

std::size_t align_backward(std::string_view s, std::size_t pos) {
  while (pos > 0 && pos < s.size() && is_continuation_byte(s[pos])) --pos;
  return pos;
}

bool ends_sentence(std::string_view s) {
  return !s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?');
}

std::string display_path(const std::string& path, std::string_view prefix) {
  if (!prefix.empty() && std::string_view(path).starts_with(prefix) && path.size() > prefix.size())
    return path.substr(prefix.size());
  return path;
}

std::string location(const SourceFrame& frame, std::string_view prefix) {
  std::string out = display_path(frame.file_path, prefix) + ":" + std::to_string(frame.line_number);
  if (!frame.function_name.empty()) out += " in " + frame.function_name;
  return out;
}

}  // namespace

const char* to_string(SummaryBackend backend) {
  return backend == SummaryBackend::Model ? "model" : "extractive";
}

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  slot_ = text_.find(kPlaceholder);
  if (slot_ == std::string::npos || text_.find(kPlaceholder, slot_ + 1) != std::string::npos)
    throw std::invalid_argument("prompt template needs exactly one {traceback} placeholder");
}

const PromptTemplate& PromptTemplate::default_template() {
  static const PromptTemplate prompt(
      "Summarize the following traceback in at most 3 sentences. State the error type, the error message, "
      "and the most likely location in the user's code.\n\n{traceback}");
  return prompt;
}

std::string PromptTemplate::render(std::string_view body) const {
  std::string out;
  out.reserve(text_.size() + body.size());
  out.append(text_, 0, slot_);
  out.append(body);
  out.append(text_, slot_ + kPlaceholder.size());
  return out;
}

std::string build_prompt(std::string_view tb_text) { return PromptTemplate::default_template().render(tb_text); }

std::string fit_prompt_budget(std::string_view tb_text) {
  if (tb_text.size() <= kPromptBudgetChars) return std::string(tb_text);

  // Header line, first frame line and its source echo.
  std::size_t head_end = 0;
  for (int line = 0; line < 3 && head_end < tb_text.size(); ++line) {
    auto nl = tb_text.find('\n', head_end);
    head_end = nl == std::string_view::npos ? tb_text.size() : nl + 1;
  }
  if (head_end > kPromptBudgetChars - kPromptTailChars) {
    auto nl = tb_text.find('\n');
    head_end = nl == std::string_view::npos || nl + 1 > kPromptBudgetChars - kPromptTailChars ? 0 : nl + 1;
  }
  std::size_t tail_begin = align_forward(tb_text, tb_text.size() - kPromptTailChars);

  std::string out(tb_text.substr(0, head_end));
  out += "  ... [" + std::to_string(tail_begin - head_end) + " characters omitted] ...\n";
  out.append(tb_text.substr(tail_begin));
  return out;
}

std::string clamp_model_output(std::string_view text) {
  auto trimmed = trim(text);
  if (trimmed.size() <= kModelOutputLimitChars) return std::string(trimmed);
  std::size_t cut = 0;
  for (std::size_t i = 0; i < kModelOutputLimitChars; ++i) {
    char c = trimmed[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == trimmed.size() || is_space(trimmed[i + 1]))) cut = i + 1;
  }
  if (cut == 0) cut = align_backward(trimmed, kModelOutputLimitChars);
  return std::string(trim(trimmed.substr(0, cut)));
}

std::size_t word_count(std::string_view text) { return tokenize(text).size(); }

Summary extractive_summary(const ParsedTraceback& tb, const std::vector<std::string>& library_markers,
                           std::string_view display_prefix) {
  std::string text = tb.exception_type;
  auto message = collapse_whitespace(tb.exception_message);
  if (!message.empty()) text += ": " + message;
  if (!ends_sentence(text)) text += '.';

  if (auto user = deepest_user_frame(tb, library_markers)) {
    text += " Raised at " + location(*user, display_prefix) + ".";
  } else if (!tb.frames.empty()) {
    text += " Raised inside a dependency, at " + location(tb.frames.back(), display_prefix) + ".";
  }
  if (tb.cause) text += " This occurred while handling a prior " + tb.cause->exception_type + ".";

  Summary summary;
  summary.text = std::move(text);
  summary.backend = SummaryBackend::Extractive;
  summary.category = classify(tb.exception_type);
  return summary;
}

Summary summarize(const ParsedTraceback& tb, std::string_view raw_span_text, const BackendConfig& config,
                  const SummarizeOptions& options) {
  std::ostream& diag = options.diagnostics != nullptr ? *options.diagnostics : std::cerr;
  auto started = Clock::now();
  auto finish = [&](Summary summary) {
    summary.latency = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
    summary.category = classify(tb.exception_type);
    summary.truncated_input = options.truncated_input;
    return summary;
  };

  if (config.enabled) {
    try {
      auto response = generate(config, build_prompt(fit_prompt_budget(raw_span_text)));
      auto text = clamp_model_output(response);
      if (!text.empty()) {
        Summary summary;
        summary.text = std::move(text);
        summary.backend = SummaryBackend::Model;
        return finish(std::move(summary));
      }
      diag << "blvrun: model returned an empty summary; using the extractive summary\n";
    } catch (const ModelError& e) {
      diag << "blvrun: model backend " << to_string(e.kind()) << ": " << e.what()
           << "; using the extractive summary\n";
    } catch (const std::invalid_argument& e) {
      diag << "blvrun: invalid backend configuration: " << e.what() << "; using the extractive summary\n";
    }
  }
  return finish(extractive_summary(tb, options.library_markers, options.display_prefix));
}

}  // namespace blvrun
