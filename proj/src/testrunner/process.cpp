#include "appforge/testrunner/process.hpp"

#include "appforge/util/text.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include <cerrno>
#include <cstring>

extern char** environ;

namespace appforge::testrunner {

ProcessSpec shell_spec(const std::string& command, const std::filesystem::path& cwd) {
  ProcessSpec spec;
  spec.argv = {"/bin/sh", "-c", command};
  spec.cwd = cwd;
  return spec;
}

namespace {

int decode_status(int status) {
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

}  // namespace

Process::Process(const ProcessSpec& spec) : log_limit_(spec.log_limit) {
  if (spec.argv.empty()) throw Error("process spec has no program");
  int out_pipe[2];
  int err_pipe[2];
  int exec_pipe[2];
  if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0 || ::pipe2(exec_pipe, O_CLOEXEC) != 0)
    throw Error(fmt::format("pipe: {}", std::strerror(errno)));

  // Everything the child needs is prepared before fork.
  std::vector<std::string> env_store;
  for (char** e = environ; *e; ++e) {
    std::string entry(*e);
    const auto name = entry.substr(0, entry.find('='));
    bool overridden = false;
    for (const auto& [k, v] : spec.env) overridden = overridden || k == name;
    if (!overridden) env_store.push_back(std::move(entry));
  }
  for (const auto& [k, v] : spec.env) env_store.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& e : env_store) envp.push_back(e.data());
  envp.push_back(nullptr);
  std::vector<std::string> argv_store = spec.argv;
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);
  const std::string cwd = spec.cwd.string();

  pid_ = ::fork();
  if (pid_ < 0) throw Error(fmt::format("fork: {}", std::strerror(errno)));
  if (pid_ == 0) {
    ::setpgid(0, 0);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::signal(SIGPIPE, SIG_DFL);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) {
      int e = errno;
      [[maybe_unused]] auto n = ::write(exec_pipe[1], &e, sizeof e);
      ::_exit(127);
    }
    ::execve(argv[0], argv.data(), envp.data());
    int e = errno;
    [[maybe_unused]] auto n = ::write(exec_pipe[1], &e, sizeof e);
    ::_exit(127);
  }
  // Also set from the parent so the group exists before any kill.
  ::setpgid(pid_, pid_);
  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::close(exec_pipe[1]);
  int child_errno = 0;
  ssize_t n;
  do {
    n = ::read(exec_pipe[0], &child_errno, sizeof child_errno);
  } while (n < 0 && errno == EINTR);
  ::close(exec_pipe[0]);
  if (n == static_cast<ssize_t>(sizeof child_errno)) {
    ::waitpid(pid_, nullptr, 0);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    pid_ = -1;
    throw Error(fmt::format("cannot start '{}': {}", spec.argv[0], std::strerror(child_errno)));
  }
  readers_.emplace_back(&Process::reader, this, out_pipe[0], &out_);
  readers_.emplace_back(&Process::reader, this, err_pipe[0], &err_);
}

Process::~Process() { stop(); }

void Process::reader(int fd, std::string* sink) {
  char buf[4096];
  for (;;) {
    pollfd p{fd, POLLIN, 0};
    const int r = ::poll(&p, 1, 100);
    if (r < 0 && errno == EINTR) continue;
    if (r == 0) {
      // Descendants that left the group may hold the pipe open forever.
      if (stop_readers_.load()) break;
      continue;
    }
    const ssize_t n = ::read(fd, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    std::lock_guard lock(mu_);
    sink->append(buf, static_cast<std::size_t>(n));
    if (sink->size() > log_limit_) sink->erase(0, sink->size() - log_limit_);
  }
  ::close(fd);
}

void Process::reap(bool block) {
  if (pid_ < 0 || status_) return;
  int status = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &status, block ? 0 : WNOHANG);
  } while (r < 0 && errno == EINTR);
  if (r == pid_) status_ = decode_status(status);
  else if (r < 0) status_ = -1;
}

std::optional<int> Process::exit_status() {
  std::lock_guard lock(mu_);
  reap(false);
  return status_;
}

std::optional<int> Process::wait_for(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto s = exit_status()) return s;
    if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void Process::stop(std::chrono::milliseconds grace) {
  if (stopped_ || pid_ < 0) return;
  stopped_ = true;
  // The leader may be gone while the rest of its group lives on.
  ::kill(-pid_, SIGTERM);
  if (!wait_for(grace)) {
    ::kill(-pid_, SIGKILL);
  } else {
    // Leader exited; make sure no group member outlives it.
    ::kill(-pid_, SIGKILL);
  }
  {
    std::lock_guard lock(mu_);
    reap(true);
  }
  // Readers exit on EOF; the flag only releases them from pipes still held
  // by descendants that escaped the group.
  stop_readers_ = true;
  for (auto& t : readers_)
    if (t.joinable()) t.join();
}

std::string Process::stdout_text() const {
  std::lock_guard lock(mu_);
  return out_;
}

std::string Process::stderr_text() const {
  std::lock_guard lock(mu_);
  return err_;
}

std::string Process::logs(std::size_t tail_bytes) const {
  auto tail = [&](const std::string& s) {
    return s.size() <= tail_bytes ? s : "..." + s.substr(s.size() - tail_bytes);
  };
  std::lock_guard lock(mu_);
  return fmt::format("--- stdout ---\n{}\n--- stderr ---\n{}", tail(out_), tail(err_));
}

}  // namespace appforge::testrunner
