#include "blvrun/error_taxonomy.hpp"

#include <array>
#include <utility>

namespace blvrun {

namespace {

constexpr std::array<std::pair<ErrorCategory::Kind, std::string_view>, 7> kSupported{{
    {ErrorCategory::Kind::TypeError, "TypeError"},
    {ErrorCategory::Kind::ValueError, "ValueError"},
    {ErrorCategory::Kind::AttributeError, "AttributeError"},
    {ErrorCategory::Kind::IndexError, "IndexError"},
    {ErrorCategory::Kind::NameError, "NameError"},
    {ErrorCategory::Kind::RuntimeError, "RuntimeError"},
    {ErrorCategory::Kind::KeyError, "KeyError"},
}};

}  // namespace

ErrorCategory ErrorCategory::supported(Kind kind) {
  for (const auto& [k, name] : kSupported)
    if (k == kind) return ErrorCategory(kind, std::string(name));
  return ErrorCategory(Kind::Other, "Other");
}

ErrorCategory ErrorCategory::other(std::string exception_type) {
  return ErrorCategory(Kind::Other, std::move(exception_type));
}

ErrorCategory classify(std::string_view exception_type) {
  auto last = exception_type;
  if (auto dot = last.rfind('.'); dot != std::string_view::npos) last = last.substr(dot + 1);
  for (const auto& [kind, name] : kSupported)
    if (last == name) return ErrorCategory::supported(kind);
  return ErrorCategory::other(std::string(exception_type));
}

const std::vector<ErrorCategory>& supported_categories() {
  static const std::vector<ErrorCategory> categories = [] {
    std::vector<ErrorCategory> out;
    for (const auto& entry : kSupported) out.push_back(ErrorCategory::supported(entry.first));
    return out;
  }();
  return categories;
}

}  // namespace blvrun
