#include "blvrun/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "blvrun/corpus.hpp"
#include "blvrun/error_taxonomy.hpp"
#include "blvrun/eval_metrics.hpp"
#include "blvrun/history_store.hpp"
#include "blvrun/model_client.hpp"
#include "blvrun/runner.hpp"

#ifndef BLVRUN_VERSION
#define BLVRUN_VERSION "0.0.0"
#endif

namespace blvrun::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Io {
  std::ostream& out;
  std::ostream& err;
  const EnvLookup& env;
};

int usage_error(const Io& io, const std::string& message) {
  io.err << "blvrun: " << message << " (see 'blvrun --help')\n";
  return kUsageExitCode;
}

bool parse_bool_env(const std::string& name, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value.empty() || value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw UsageError(name + " must be a boolean (1/0, true/false), got '" + value + "'");
}

long parse_positive(const std::string& name, const std::string& value) {
  long parsed = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), parsed);
  if (ec != std::errc{} || ptr != value.data() + value.size() || parsed <= 0)
    throw UsageError(name + " must be a positive integer, got '" + value + "'");
  return parsed;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) items.push_back(item);
  return items;
}

// CLI11 consumes its argument vector from the back.
std::vector<std::string> reversed_args(std::vector<std::string> args) {
  std::reverse(args.begin(), args.end());
  return args;
}

// Runs `parse`, mapping CLI11 outcomes to exit codes. Returns nullopt when
// parsing succeeded and the command should proceed.
std::optional<int> parse_app(CLI::App& app, std::vector<std::string> args, const Io& io,
                             const std::string* help = nullptr) {
  try {
    app.parse(reversed_args(std::move(args)));
  } catch (const CLI::CallForHelp&) {
    io.out << (help != nullptr ? *help : app.help());
    return 0;
  } catch (const CLI::ParseError& e) {
    return usage_error(io, e.what());
  }
  return std::nullopt;
}

std::string resolve(const std::string& flag, const char* env_name, const std::string& fallback, const Io& io) {
  if (!flag.empty()) return flag;
  if (auto value = io.env(env_name); value && !value->empty()) return *value;
  return fallback;
}

int run_prev(std::vector<std::string> args, const Io& io) {
  CLI::App app{"Print the leading sentences of the last error summary.", "blvrun prev"};
  long count = 3;
  std::string state_dir;
  app.add_option("-n,--count", count, "Number of sentences to print")->capture_default_str();
  app.add_option("--state-dir", state_dir, "Directory holding last.json");
  if (auto code = parse_app(app, std::move(args), io)) return *code;
  if (count < 1) return usage_error(io, "-n must be at least 1");

  auto dir = resolve(state_dir, "BLVRUN_STATE_DIR", "", io);
  HistoryStore store(dir.empty() ? default_state_dir() : std::filesystem::path(dir));
  auto sentences = store.prev(static_cast<std::size_t>(count), &io.err);
  if (sentences.empty()) {
    io.out << "No previous summary.\n";
    return 0;
  }
  for (const auto& sentence : sentences) io.out << sentence << '\n';
  return 0;
}

std::vector<ErrorCategory> parse_categories(const std::string& list) {
  std::vector<ErrorCategory> categories;
  for (const auto& name : split_list(list)) {
    if (name == "supported") {
      const auto& all = supported_categories();
      categories.insert(categories.end(), all.begin(), all.end());
      continue;
    }
    if (!is_exception_name(name)) throw UsageError("'" + name + "' is not an exception type name");
    categories.push_back(classify(name));
  }
  if (categories.empty()) throw UsageError("--types needs at least one category");
  return categories;
}

int run_corpus(std::vector<std::string> args, const Io& io) {
  if (args.empty() || args.front() == "--help" || args.front() == "-h") {
    io.out << "Usage: blvrun corpus stats <file> [--keyword] [--types T1,T2]\n";
    return args.empty() ? kUsageExitCode : 0;
  }
  if (args.front() != "stats") return usage_error(io, "unknown corpus command '" + args.front() + "'");
  args.erase(args.begin());

  CLI::App app{"Characterize a JSON-Lines error corpus.", "blvrun corpus stats"};
  std::string file;
  std::string types;
  bool keyword = false;
  app.add_option("file", file, "Corpus file (JSON-Lines)")->required();
  app.add_flag("--keyword", keyword, "Keep only records containing \"Traceback\"");
  app.add_option("--types", types, "Comma-separated categories to keep (or 'supported')");
  if (auto code = parse_app(app, std::move(args), io)) return *code;

  std::vector<ErrorCategory> categories;
  if (app.count("--types") > 0) categories = parse_categories(types);

  auto loaded = load_records(file, &io.err);
  std::vector<ErrorRecord> records = std::move(loaded.records);
  if (keyword) records = filter_keyword(records);
  if (!categories.empty()) records = filter_types(records, categories);
  if (records.empty()) {
    io.err << "blvrun: no records left after filtering\n";
    return 1;
  }
  io.out << format_stats_report(corpus_stats(records));
  return 0;
}

int run_eval(std::vector<std::string> args, const Io& io) {
  CLI::App app{"Score predicted summaries against gold summaries.", "blvrun eval"};
  std::string pairs_file, pred_file, out_prefix;
  app.add_option("--pairs", pairs_file, "Corpus file with gold_summary fields")->required();
  app.add_option("--pred", pred_file, "Predictions (JSON-Lines of {id, summary})")->required();
  app.add_option("--out", out_prefix, "Output prefix for the CSV reports")->required();
  if (auto code = parse_app(app, std::move(args), io)) return *code;

  auto corpus = load_records(pairs_file, &io.err);
  std::map<std::string, const ErrorRecord*> by_id;
  for (const auto& record : corpus.records) by_id[record.id] = &record;

  std::vector<EvalPair> pairs;
  for (auto& prediction : load_predictions(pred_file, &io.err)) {
    auto it = by_id.find(prediction.id);
    if (it == by_id.end()) {
      io.err << "blvrun: prediction '" << prediction.id << "' has no matching corpus record\n";
      return 1;
    }
    const ErrorRecord& record = *it->second;
    pairs.push_back({record.id, classify(record.error_type).name(), std::move(prediction.summary),
                     record.gold_summary.value_or("")});
  }
  auto report = evaluate(std::move(pairs));
  auto paths = write_report_csv(report, out_prefix);

  char line[128];
  std::snprintf(line, sizeof line, "pairs: %zu\nmean_rouge_f: %.6f\nmean_cosine: %.6f\n", report.overall.count,
                report.overall.mean_rouge_f, report.overall.mean_cosine);
  io.out << line << "wrote: " << paths.pairs.string() << '\n' << "wrote: " << paths.summary.string() << '\n';
  return 0;
}

int run_default(std::vector<std::string> args, const Io& io) {
  CLI::App app{"Run a script and summarize its traceback.", "blvrun"};
  bool raw = false, color = false, offline_flag = false;
  std::string interpreter, endpoint, model, state_dir;
  long timeout_ms = 0;
  std::vector<std::string> markers;
  app.add_flag("--raw", raw);
  app.add_flag("--color", color);
  app.add_flag("--offline", offline_flag);
  app.add_option("--interpreter", interpreter);
  app.add_option("--endpoint", endpoint);
  app.add_option("--model", model);
  app.add_option("--timeout-ms", timeout_ms);
  app.add_option("--library-marker", markers);
  app.add_option("--state-dir", state_dir);
  app.prefix_command();
  const std::string help = usage_text();
  if (auto code = parse_app(app, std::move(args), io, &help)) return *code;

  auto rest = app.remaining();
  if (!rest.empty() && rest.front() == "--") rest.erase(rest.begin());
  else if (!rest.empty() && rest.front().starts_with("-") && rest.front() != "-")
    return usage_error(io, "unknown option '" + rest.front() + "'");
  if (rest.empty()) return usage_error(io, "missing script to run");
  if (app.count("--timeout-ms") > 0 && timeout_ms <= 0) return usage_error(io, "--timeout-ms must be positive");

  BackendConfig config;
  config.endpoint = resolve(endpoint, "BLVRUN_ENDPOINT", config.endpoint, io);
  config.model_name = resolve(model, "BLVRUN_MODEL", config.model_name, io);
  if (timeout_ms > 0) {
    config.timeout = std::chrono::milliseconds(timeout_ms);
  } else if (auto env = io.env("BLVRUN_TIMEOUT_MS"); env && !env->empty()) {
    config.timeout = std::chrono::milliseconds(parse_positive("BLVRUN_TIMEOUT_MS", *env));
  }

  RunOptions options;
  options.raw = raw;
  options.color = color;
  options.interpreter = resolve(interpreter, "BLVRUN_INTERPRETER", options.interpreter, io);
  options.offline = offline_flag;
  if (!offline_flag) {
    if (auto env = io.env("BLVRUN_OFFLINE")) options.offline = parse_bool_env("BLVRUN_OFFLINE", *env);
  }
  if (!markers.empty()) options.library_markers = markers;
  if (auto dir = resolve(state_dir, "BLVRUN_STATE_DIR", "", io); !dir.empty()) options.state_dir = dir;
  config.enabled = !options.offline;
  if (config.enabled) {
    try {
      validate(config);
    } catch (const std::invalid_argument& e) {
      return usage_error(io, e.what());
    }
  }

  std::filesystem::path script = rest.front();
  std::vector<std::string> script_args(rest.begin() + 1, rest.end());
  try {
    auto outcome = run_script(options.interpreter, script, script_args, config, options, {&io.out, &io.err});
    return outcome.exit_code;
  } catch (const SpawnError& e) {
    io.err << "blvrun: " << e.what() << '\n';
    return kSpawnFailureExitCode;
  }
}

}  // namespace

std::optional<std::string> process_env(std::string_view name) {
  const char* value = std::getenv(std::string(name).c_str());
  if (value == nullptr) return std::nullopt;
  return std::string(value);
}

std::string usage_text() {
  return "Usage:\n"
         "  blvrun [options] <script> [script args...]\n"
         "  blvrun prev [-n N]\n"
         "  blvrun corpus stats <file> [--keyword] [--types T1,T2]\n"
         "  blvrun eval --pairs <corpus.jsonl> --pred <pred.jsonl> --out <prefix>\n"
         "\n"
         "Runs the script, and when it ends with a traceback prints a short summary\n"
         "instead of the raw traceback.\n"
         "\n"
         "Options:\n"
         "  --raw                 Also show the raw error output (summary last)\n"
         "  --offline             Never contact the model server; use the extractive summary\n"
         "  --interpreter PATH    Interpreter to run the script with (default python3)\n"
         "  --endpoint URL        Generation server (default http://127.0.0.1:11434)\n"
         "  --model NAME          Model name sent to the server (default blvrun)\n"
         "  --timeout-ms N        Model request timeout in milliseconds (default 15000)\n"
         "  --library-marker S    Path substring marking dependency frames (repeatable)\n"
         "  --state-dir DIR       Where the last summary is stored\n"
         "  --color               Highlight the summary heading\n"
         "  --help                Show this text\n"
         "  --version             Show the version\n"
         "\n"
         "Environment:\n"
         "  BLVRUN_ENDPOINT, BLVRUN_MODEL, BLVRUN_TIMEOUT_MS, BLVRUN_INTERPRETER,\n"
         "  BLVRUN_STATE_DIR, BLVRUN_OFFLINE\n";
}

int dispatch(const std::vector<std::string>& args, const Context& context) {
  Io io{context.out != nullptr ? *context.out : std::cout, context.err != nullptr ? *context.err : std::cerr,
        context.env};
  if (args.empty()) return usage_error(io, "missing script to run");

  const std::string& first = args.front();
  std::vector<std::string> rest(args.begin() + 1, args.end());
  try {
    if (first == "--help" || first == "-h") {
      io.out << usage_text();
      return 0;
    }
    if (first == "--version") {
      io.out << "blvrun " << BLVRUN_VERSION << '\n';
      return 0;
    }
    if (first == "prev") return run_prev(std::move(rest), io);
    if (first == "corpus") return run_corpus(std::move(rest), io);
    if (first == "eval") return run_eval(std::move(rest), io);
    return run_default(args, io);
  } catch (const UsageError& e) {
    return usage_error(io, e.what());
  } catch (const CorpusError& e) {
    io.err << "blvrun: " << e.what() << '\n';
    return 1;
  } catch (const EvalError& e) {
    io.err << "blvrun: " << e.what() << '\n';
    return 1;
  } catch (const std::runtime_error& e) {
    io.err << "blvrun: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace blvrun::cli
