#pragma once

// Child processes for CLI-level tests.

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <sys/types.h>

namespace watz::testkit {

struct ProcessResult {
  int exit_code = -1;  // -1 when killed by a signal or timed out
  std::string out;
  std::string err;
};

/// Runs to completion, capturing stdout and stderr. Killed after `timeout`.
ProcessResult run_process(const std::vector<std::string>& argv,
                          std::chrono::milliseconds timeout = std::chrono::seconds(60));

/// A long-running child whose stdout is read line by line.
class BackgroundProcess {
 public:
  explicit BackgroundProcess(const std::vector<std::string>& argv);
  ~BackgroundProcess();
  BackgroundProcess(const BackgroundProcess&) = delete;
  BackgroundProcess& operator=(const BackgroundProcess&) = delete;

  std::optional<std::string> read_line(std::chrono::milliseconds timeout);
  void send_signal(int sig);
  /// Exit status, or -1 if it did not exit normally within `timeout`.
  int wait(std::chrono::milliseconds timeout);
  /// Everything read from stdout so far, including unread partial data.
  const std::string& transcript() const noexcept { return transcript_; }

 private:
  pid_t pid_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
  std::string transcript_;
  bool reaped_ = false;
};

/// Path of the built `watz` command line tool.
std::string cli_path();

}  // namespace watz::testkit
