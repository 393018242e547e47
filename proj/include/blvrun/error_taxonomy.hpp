#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace blvrun {

// The seven exception categories the summarizer is tuned for, plus a
// catch-all that keeps the verbatim exception name.
class ErrorCategory {
 public:
  enum class Kind { TypeError, ValueError, AttributeError, IndexError, NameError, RuntimeError, KeyError, Other };

  ErrorCategory() = default;
  static ErrorCategory supported(Kind kind);
  static ErrorCategory other(std::string exception_type);

  Kind kind() const { return kind_; }
  bool is_supported() const { return kind_ != Kind::Other; }
  // Category token ("KeyError") or, for Other, the verbatim exception type.
  const std::string& name() const { return name_; }

  bool operator==(const ErrorCategory&) const = default;

 private:
  ErrorCategory(Kind kind, std::string name) : kind_(kind), name_(std::move(name)) {}

  Kind kind_ = Kind::Other;
  std::string name_;
};

// Case-sensitive match on the last dotted component ("builtins.KeyError").
ErrorCategory classify(std::string_view exception_type);

// TypeError, ValueError, AttributeError, IndexError, NameError, RuntimeError, KeyError.
const std::vector<ErrorCategory>& supported_categories();

}  // namespace blvrun
