#pragma once

// TCP front end of the verifier: one protocol run per connection, each
// connection on its own thread.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <stop_token>
#include <string>

#include "watz/crypto.hpp"
#include "watz/net.hpp"
#include "watz/verifier.hpp"

namespace watz::verifier {

/// Receives one JSON object per line. Must be thread-safe.
using LogSink = std::function<void(const std::string& line)>;

/// LogSink that writes to a stream under a mutex.
LogSink stream_log_sink(std::ostream& out);

struct ConnectionOutcome {
  std::optional<AppraisalVerdict> verdict;
  bool msg3_sent = false;
  std::string error;  // empty on a complete run
};

class Server {
 public:
  Server(std::shared_ptr<const VerifierConfig> config, net::Listener listener, LogSink log,
         crypto::EntropySource& entropy = crypto::system_entropy());

  std::uint16_t port() const noexcept { return listener_.port(); }
  std::string address() const { return listener_.address(); }

  /// Accepts until `stop` is requested, then joins all connection threads.
  void serve(std::stop_token stop);

  /// One full protocol run on an accepted socket. Never throws.
  ConnectionOutcome handle_connection(net::Socket socket);

  std::uint64_t connections_handled() const noexcept { return handled_.load(); }

  std::chrono::milliseconds io_timeout{net::kDefaultTimeout};

 private:
  void log(const std::string& line) const;

  std::shared_ptr<const VerifierConfig> config_;
  net::Listener listener_;
  LogSink log_;
  crypto::EntropySource* entropy_;
  std::atomic<std::uint64_t> handled_{0};
};

}  // namespace watz::verifier
