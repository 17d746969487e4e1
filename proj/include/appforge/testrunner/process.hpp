#pragma once

#include "appforge/util/errors.hpp"

#include <sys/types.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace appforge::testrunner {

struct ProcessSpec {
  std::vector<std::string> argv;
  std::filesystem::path cwd;
  // Added to (or overriding) the inherited environment.
  std::vector<std::pair<std::string, std::string>> env;
  // Per stream; older output is discarded beyond this.
  std::size_t log_limit = 256 * 1024;
};

// Runs `command` through /bin/sh -c.
ProcessSpec shell_spec(const std::string& command, const std::filesystem::path& cwd);

// A supervised child in its own process group, with stdout/stderr captured
// by reader threads. The destructor stops the whole group.
class Process {
 public:
  // Throws appforge::Error when the program cannot be started.
  explicit Process(const ProcessSpec& spec);
  ~Process();
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  pid_t pid() const { return pid_; }
  // Exit status once the child has been reaped (128+signal for signals).
  std::optional<int> exit_status();
  bool running() { return !exit_status().has_value(); }
  std::optional<int> wait_for(std::chrono::milliseconds timeout);

  // SIGTERM to the group, SIGKILL after `grace`, then reap. Idempotent.
  void stop(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));

  std::string stdout_text() const;
  std::string stderr_text() const;
  // Both streams, labelled, for diagnostics.
  std::string logs(std::size_t tail_bytes = 8000) const;

 private:
  void reader(int fd, std::string* sink);
  void reap(bool block);

  pid_t pid_ = -1;
  std::size_t log_limit_;
  mutable std::mutex mu_;
  std::string out_;
  std::string err_;
  std::optional<int> status_;
  std::atomic<bool> stop_readers_{false};
  std::vector<std::thread> readers_;
  bool stopped_ = false;
};

}  // namespace appforge::testrunner
