#pragma once

#include <chrono>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "blvrun/error_taxonomy.hpp"
#include "blvrun/model_client.hpp"
#include "blvrun/traceback_parser.hpp"

namespace blvrun {

enum class SummaryBackend { Model, Extractive };

const char* to_string(SummaryBackend backend);

struct Summary {
  std::string text;
  SummaryBackend backend = SummaryBackend::Extractive;
  std::chrono::milliseconds latency{0};
  ErrorCategory category;
  bool truncated_input = false;
};

// A prompt with exactly one "{traceback}" placeholder.
class PromptTemplate {
 public:
  static constexpr std::string_view kPlaceholder = "{traceback}";

  // Throws std::invalid_argument unless the placeholder occurs exactly once.
  explicit PromptTemplate(std::string text);
  static const PromptTemplate& default_template();

  std::string render(std::string_view body) const;
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  std::size_t slot_;
};

inline constexpr std::size_t kPromptBudgetChars = 4000;
inline constexpr std::size_t kPromptTailChars = 3500;
inline constexpr std::size_t kModelOutputLimitChars = 1200;

std::string build_prompt(std::string_view tb_text);

// Bodies above kPromptBudgetChars keep the header and first frame, an
// elision marker line, and the final kPromptTailChars characters.
std::string fit_prompt_budget(std::string_view tb_text);

// Trims and cuts model output above kModelOutputLimitChars at the last
// sentence boundary before the limit.
std::string clamp_model_output(std::string_view text);

// Word count used by the compression property (tokenize() tokens).
std::size_t word_count(std::string_view text);

// `display_prefix` is removed from the start of frame paths when present, so
// a script under the working directory is reported by its relative path.
Summary extractive_summary(const ParsedTraceback& tb, const std::vector<std::string>& library_markers,
                           std::string_view display_prefix = {});

struct SummarizeOptions {
  std::vector<std::string> library_markers = default_library_markers();
  std::string display_prefix;
  bool truncated_input = false;
  std::ostream* diagnostics = nullptr;  // std::cerr when null
};

// Model summary when the backend is enabled and answers in time, otherwise
// the extractive fallback. Never throws on backend failure.
Summary summarize(const ParsedTraceback& tb, std::string_view raw_span_text, const BackendConfig& config,
                  const SummarizeOptions& options = {});

}  // namespace blvrun
