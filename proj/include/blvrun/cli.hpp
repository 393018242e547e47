#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace blvrun::cli {

inline constexpr int kUsageExitCode = 2;

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

// Reads the process environment.
std::optional<std::string> process_env(std::string_view name);

struct Context {
  std::ostream* out = nullptr;  // std::cout when null
  std::ostream* err = nullptr;  // std::cerr when null
  EnvLookup env = process_env;
};

// Entry point behind `blvrun`. `args` excludes the program name.
//
//   blvrun [flags] <script> [script args...]
//   blvrun prev [-n N]
//   blvrun corpus stats <file> [--keyword] [--types T1,T2]
//   blvrun eval --pairs <corpus.jsonl> --pred <pred.jsonl> --out <prefix>
//
// Flags beat BLVRUN_* environment variables, which beat defaults.
int dispatch(const std::vector<std::string>& args, const Context& context = {});

std::string usage_text();

}  // namespace blvrun::cli
