#include <doctest.h>

#include <map>
#include <sstream>

#include "blvrun/cli.hpp"
#include "blvrun/history_store.hpp"
#include "blvrun/runner.hpp"
#include "test_support.hpp"

using namespace blvrun;
using blvrun::testing::MockGenerationServer;
using blvrun::testing::TempDir;
using blvrun::testing::write_file;

namespace {

struct Harness {
  std::ostringstream out;
  std::ostringstream err;
  std::map<std::string, std::string> env;

  int run(std::vector<std::string> args) {
    out.str("");
    err.str("");
    cli::Context context;
    context.out = &out;
    context.err = &err;
    context.env = [this](std::string_view name) -> std::optional<std::string> {
      auto it = env.find(std::string(name));
      if (it == env.end()) return std::nullopt;
      return it->second;
    };
    return cli::dispatch(args, context);
  }
};

void store_summary(const std::filesystem::path& dir, const std::string& text) {
  HistoryStore(dir).save_last({std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()), "a.py",
                               text, "extractive", "KeyError"});
}

std::filesystem::path replay_sample(const TempDir& dir) {
  auto script = dir.path() / "sample.sh";
  write_file(script, "cat '" + blvrun::testing::fixture("sample").stderr_file.string() + "' >&2\nexit 1\n");
  return script;
}

}  // namespace

TEST_CASE("help and version") {
  Harness h;
  CHECK(h.run({"--help"}) == 0);
  CHECK(h.out.str() == cli::usage_text());
  CHECK(h.run({"--version"}) == 0);
  CHECK(h.out.str() == "blvrun 0.1.0\n");
  CHECK(h.run({}) == cli::kUsageExitCode);
  CHECK(h.err.str().find("(see 'blvrun --help')") != std::string::npos);
}

TEST_CASE("unknown flags are usage errors") {
  Harness h;
  CHECK(h.run({"--bogus", "x.py"}) == cli::kUsageExitCode);
  CHECK(h.err.str().find("--bogus") != std::string::npos);
  CHECK(h.run({"--timeout-ms", "0", "x.py"}) == cli::kUsageExitCode);
  CHECK(h.run({"--endpoint", "https://x", "x.py"}) == cli::kUsageExitCode);
  CHECK(h.run({"prev", "-n", "0"}) == cli::kUsageExitCode);
  CHECK(h.run({"prev", "--bogus"}) == cli::kUsageExitCode);
}

TEST_CASE("prev") {
  TempDir dir;
  Harness h;
  h.env["BLVRUN_STATE_DIR"] = dir.path().string();
  CHECK(h.run({"prev"}) == 0);
  CHECK(h.out.str() == "No previous summary.\n");

  store_summary(dir.path(), "First one. Second one. Third one. Fourth one.");
  CHECK(h.run({"prev", "-n", "2"}) == 0);
  CHECK(h.out.str() == "First one.\nSecond one.\n");
  CHECK(h.run({"prev"}) == 0);
  CHECK(h.out.str() == "First one.\nSecond one.\nThird one.\n");
  CHECK(h.run({"prev", "-n3"}) == 0);
  CHECK(h.out.str() == "First one.\nSecond one.\nThird one.\n");
  CHECK(h.run({"prev", "--count=9"}) == 0);
  CHECK(h.out.str() == "First one.\nSecond one.\nThird one.\nFourth one.\n");

  TempDir other;
  CHECK(h.run({"prev", "--state-dir", other.path().string()}) == 0);
  CHECK(h.out.str() == "No previous summary.\n");
}

TEST_CASE("run with offline flag and environment") {
  TempDir dir;
  Harness h;
  h.env["BLVRUN_STATE_DIR"] = (dir.path() / "state").string();
  h.env["BLVRUN_INTERPRETER"] = "sh";
  h.env["BLVRUN_OFFLINE"] = "1";
  CHECK(h.run({replay_sample(dir).string()}) == 1);
  CHECK(h.out.str().find("ZeroDivisionError: division by zero.") != std::string::npos);
  CHECK(h.run({"prev", "-n", "1"}) == 0);
  CHECK(h.out.str() == "ZeroDivisionError: division by zero.\n");

  h.env["BLVRUN_OFFLINE"] = "maybe";
  CHECK(h.run({replay_sample(dir).string()}) == cli::kUsageExitCode);
}

TEST_CASE("flags beat environment, which beats defaults") {
  TempDir dir;
  MockGenerationServer server;
  server.respond_text("From the model.");
  Harness h;
  h.env["BLVRUN_STATE_DIR"] = dir.path().string();
  h.env["BLVRUN_INTERPRETER"] = "sh";
  auto script = replay_sample(dir).string();

  h.env["BLVRUN_ENDPOINT"] = server.endpoint();
  h.env["BLVRUN_MODEL"] = "env-model";
  CHECK(h.run({script}) == 1);
  CHECK(h.out.str().find("From the model.") != std::string::npos);
  CHECK(nlohmann::json::parse(server.last_body()).at("model") == "env-model");

  CHECK(h.run({"--model", "flag-model", script}) == 1);
  CHECK(nlohmann::json::parse(server.last_body()).at("model") == "flag-model");

  auto closed = "http://127.0.0.1:" + std::to_string(blvrun::testing::closed_port());
  CHECK(h.run({"--endpoint", closed, script}) == 1);
  CHECK(h.out.str().find("ZeroDivisionError: division by zero.") != std::string::npos);
  CHECK(h.err.str().find("unreachable") != std::string::npos);

  int before = server.requests();
  CHECK(h.run({"--offline", script}) == 1);
  CHECK(server.requests() == before);

  h.env["BLVRUN_INTERPRETER"] = "no-such-interpreter-xyz";
  CHECK(h.run({"--interpreter", "sh", script}) == 1);
  CHECK(h.run({script}) == kSpawnFailureExitCode);
}

TEST_CASE("corpus stats") {
  TempDir dir;
  auto path = dir.path() / "c.jsonl";
  auto tb = blvrun::testing::fixture("key_error").stderr_text();
  std::string lines;
  lines += nlohmann::json{{"id", "1"}, {"traceback_text", tb}, {"error_type", "KeyError"}, {"split", "train"}}.dump() + "\n";
  lines += nlohmann::json{{"id", "2"}, {"traceback_text", "no header here"}, {"error_type", "ZeroDivisionError"},
                          {"split", "test"}}.dump() + "\n";
  write_file(path, lines);
  Harness h;
  CHECK(h.run({"corpus", "stats", path.string()}) == 0);
  CHECK(h.out.str().starts_with("record_count: 2\n"));
  CHECK(h.out.str().find("ZeroDivisionError,1") != std::string::npos);

  CHECK(h.run({"corpus", "stats", path.string(), "--keyword"}) == 0);
  CHECK(h.out.str().starts_with("record_count: 1\n"));
  CHECK(h.run({"corpus", "stats", path.string(), "--types", "supported"}) == 0);
  CHECK(h.out.str().find("KeyError,1") != std::string::npos);
  CHECK(h.out.str().find("ZeroDivisionError") == std::string::npos);
  CHECK(h.run({"corpus", "stats", path.string(), "--types", "ZeroDivisionError"}) == 0);
  CHECK(h.out.str().starts_with("record_count: 1\n"));

  CHECK(h.run({"corpus", "stats", path.string(), "--types", "IndexError"}) == 1);
  CHECK(h.run({"corpus", "stats", (dir.path() / "missing").string()}) == 1);
  CHECK(h.run({"corpus", "frobnicate"}) == cli::kUsageExitCode);
}

TEST_CASE("eval") {
  TempDir dir;
  auto pairs = dir.path() / "pairs.jsonl";
  auto pred = dir.path() / "pred.jsonl";
  write_file(pairs, nlohmann::json{{"id", "a"}, {"traceback_text", "t"}, {"error_type", "KeyError"},
                                   {"gold_summary", "the cat sat"}, {"split", "test"}}.dump() + "\n");
  write_file(pred, nlohmann::json{{"id", "a"}, {"summary", "the cat sat"}}.dump() + "\n");
  Harness h;
  auto prefix = (dir.path() / "report").string();
  CHECK(h.run({"eval", "--pairs", pairs.string(), "--pred", pred.string(), "--out", prefix}) == 0);
  CHECK(h.out.str().starts_with("pairs: 1\nmean_rouge_f: 1.000000\nmean_cosine: 1.000000\n"));
  CHECK(std::filesystem::exists(prefix + ".pairs.csv"));
  CHECK(std::filesystem::exists(prefix + ".summary.csv"));

  write_file(pred, nlohmann::json{{"id", "zzz"}, {"summary", "x"}}.dump() + "\n");
  CHECK(h.run({"eval", "--pairs", pairs.string(), "--pred", pred.string(), "--out", prefix}) == 1);
  CHECK(h.run({"eval", "--pairs", pairs.string()}) == cli::kUsageExitCode);
}
