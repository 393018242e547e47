#include "blvrun/runner.hpp"

#include <array>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <iostream>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "blvrun/history_store.hpp"

extern char** environ;

namespace blvrun {

namespace {

using Clock = std::chrono::steady_clock;

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Fd& operator=(Fd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw SpawnError(std::string("cannot create pipe: ") + std::strerror(errno));
  return {Fd(fds[0]), Fd(fds[1])};
}

// Ignores terminal interrupts in the supervisor while the child runs, so a
// Ctrl-C still lets us summarize the child's KeyboardInterrupt traceback.
class SignalGuard {
 public:
  SignalGuard() {
    struct sigaction ignore {};
    ignore.sa_handler = SIG_IGN;
    sigemptyset(&ignore.sa_mask);
    ::sigaction(SIGINT, &ignore, &old_int_);
    ::sigaction(SIGQUIT, &ignore, &old_quit_);
  }
  ~SignalGuard() {
    ::sigaction(SIGINT, &old_int_, nullptr);
    ::sigaction(SIGQUIT, &old_quit_, nullptr);
  }
  SignalGuard(const SignalGuard&) = delete;
  SignalGuard& operator=(const SignalGuard&) = delete;

 private:
  struct sigaction old_int_ {};
  struct sigaction old_quit_ {};
};

pid_t spawn_child(const std::string& interpreter, const std::filesystem::path& script,
                  const std::vector<std::string>& args, int stdout_fd, int stderr_fd) {
  std::vector<std::string> argv_storage{interpreter, script.string()};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& arg : argv_storage) argv.push_back(arg.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, stdout_fd, STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, stderr_fd, STDERR_FILENO);

  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGINT);
  sigaddset(&defaults, SIGQUIT);
  sigaddset(&defaults, SIGPIPE);
  posix_spawnattr_setsigdefault(&attr, &defaults);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETSIGDEF);

  pid_t pid = -1;
  int rc = ::posix_spawnp(&pid, interpreter.c_str(), &actions, &attr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);
  if (rc != 0) throw SpawnError("cannot run " + interpreter + ": " + std::strerror(rc));
  return pid;
}

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return 1;
}

std::string working_directory_prefix() {
  std::error_code ec;
  auto cwd = std::filesystem::current_path(ec);
  if (ec) return {};
  auto prefix = cwd.string();
  if (prefix.empty() || prefix.back() != '/') prefix += '/';
  return prefix;
}

}  // namespace

void CaptureBuffer::append(std::string_view bytes) {
  total_ += bytes.size();
  text_.reset();
  if (bytes.size() >= limit_) {
    data_.assign(bytes.substr(bytes.size() - limit_));
  } else {
    data_.append(bytes);
    if (data_.size() > limit_) data_.erase(0, data_.size() - limit_);
  }
  truncated_ = total_ > limit_;
}

const std::string& CaptureBuffer::text() const {
  if (!text_) text_ = strip_ansi(sanitize_utf8(data_));
  return *text_;
}

std::string format_summary_block(const Summary& summary, bool color) {
  std::string block;
  if (color) block += "\x1b[1;31m";
  block += kSummaryOpenLine;
  if (color) block += "\x1b[0m";
  block += '\n';
  for (const auto& sentence : split_sentences(summary.text)) block += sentence + '\n';
  if (summary.truncated_input)
    block += "Note: error output exceeded 1 MiB; only the last 1 MiB was examined.\n";
  block += kSummaryCloseLine;
  block += '\n';
  return block;
}

RunOutcome run_script(const std::string& interpreter, const std::filesystem::path& script,
                      const std::vector<std::string>& args, const BackendConfig& config, const RunOptions& options,
                      const RunStreams& streams) {
  std::ostream& out = streams.out != nullptr ? *streams.out : std::cout;
  std::ostream& err = streams.err != nullptr ? *streams.err : std::cerr;

  std::error_code ec;
  if (!std::filesystem::is_regular_file(script, ec))
    throw SpawnError("cannot run " + script.string() + ": no such file");
  if (::access(script.c_str(), R_OK) != 0)
    throw SpawnError("cannot run " + script.string() + ": " + std::strerror(errno));

  auto started = Clock::now();
  RunOutcome outcome;
  CaptureBuffer capture;

  {
    SignalGuard guard;
    Pipe child_out = make_pipe();
    Pipe child_err = make_pipe();
    pid_t pid = spawn_child(interpreter, script, args, child_out.write.get(), child_err.write.get());
    child_out.write.reset();
    child_err.write.reset();

    std::array<char, 64 * 1024> chunk{};
    std::array<Fd*, 2> sources{&child_out.read, &child_err.read};
    auto consume = [&](std::size_t index, std::string_view bytes) {
      if (index == 0) {
        outcome.stdout_bytes += bytes.size();
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
      } else {
        outcome.stderr_bytes += bytes.size();
        capture.append(bytes);
        if (options.raw) {
          err.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
          err.flush();
        }
      }
    };
    auto read_from = [&](std::size_t index) {
      ssize_t n = ::read(sources[index]->get(), chunk.data(), chunk.size());
      if (n > 0) {
        consume(index, std::string_view(chunk.data(), static_cast<std::size_t>(n)));
      } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
        sources[index]->reset();
      }
    };

    std::optional<int> status;
    while (*sources[0] || *sources[1]) {
      std::array<pollfd, 2> fds{};
      nfds_t count = 0;
      std::array<std::size_t, 2> owner{};
      for (std::size_t i = 0; i < sources.size(); ++i) {
        if (!*sources[i]) continue;
        fds[count] = {sources[i]->get(), POLLIN, 0};
        owner[count++] = i;
      }
      int ready = ::poll(fds.data(), count, 50);
      if (ready < 0 && errno != EINTR) break;
      for (nfds_t k = 0; ready > 0 && k < count; ++k)
        if (fds[k].revents != 0) read_from(owner[k]);

      if (!status) {
        int raw_status = 0;
        if (::waitpid(pid, &raw_status, WNOHANG) == pid) status = raw_status;
      }
      if (status && (*sources[0] || *sources[1])) {
        // The child is gone; a leftover writer (a grandchild) must not keep
        // us here. Take whatever is buffered and stop.
        for (std::size_t i = 0; i < sources.size(); ++i) {
          if (!*sources[i]) continue;
          ::fcntl(sources[i]->get(), F_SETFL, ::fcntl(sources[i]->get(), F_GETFL) | O_NONBLOCK);
          while (*sources[i]) {
            ssize_t n = ::read(sources[i]->get(), chunk.data(), chunk.size());
            if (n > 0) {
              consume(i, std::string_view(chunk.data(), static_cast<std::size_t>(n)));
            } else if (n < 0 && errno == EINTR) {
              continue;
            } else {
              sources[i]->reset();
            }
          }
        }
      }
    }
    if (!status) {
      int raw_status = 0;
      while (::waitpid(pid, &raw_status, 0) < 0 && errno == EINTR) {
      }
      status = raw_status;
    }
    outcome.exit_code = decode_status(*status);
  }

  const std::string& text = capture.text();
  outcome.stderr_truncated = capture.truncated();
  outcome.stderr_tail = text;

  std::optional<ParsedTraceback> parsed;
  std::optional<TextSpan> span = detect_traceback(text);
  if (span) {
    try {
      parsed = parse_traceback(text, *span);
    } catch (const ParseError& e) {
      err << "blvrun: could not parse the traceback: " << e.what() << '\n';
      span.reset();
    }
  }

  if (!options.raw) {
    if (span) {
      err << std::string_view(text).substr(0, span->begin) << std::string_view(text).substr(span->end);
    } else {
      err << capture.raw();
    }
    err.flush();
  }
  if (outcome.stderr_truncated)
    err << "blvrun: standard error exceeded 1 MiB; only the last 1 MiB was kept\n";

  if (parsed) {
    BackendConfig effective = config;
    effective.enabled = config.enabled && !options.offline;
    SummarizeOptions summarize_options;
    summarize_options.library_markers = options.library_markers;
    summarize_options.display_prefix = working_directory_prefix();
    summarize_options.truncated_input = outcome.stderr_truncated;
    summarize_options.diagnostics = &err;
    auto summary =
        summarize(*parsed, std::string_view(text).substr(span->begin, span->size()), effective, summarize_options);

    out << format_summary_block(summary, options.color);
    out.flush();

    HistoryStore store(options.state_dir.value_or(default_state_dir()));
    try {
      store.save_last({std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()),
                       script.string(), summary.text, to_string(summary.backend), summary.category.name()});
      outcome.history_saved = true;
    } catch (const StorageError& e) {
      err << "blvrun: could not save the summary: " << e.what() << '\n';
    }
    outcome.had_traceback = true;
    outcome.summary = std::move(summary);
  }

  outcome.wall_time = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
  return outcome;
}

}  // namespace blvrun
