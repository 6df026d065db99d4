#include "watz/server.hpp"

#include <json.hpp>

#include <list>
#include <ostream>
#include <thread>

namespace watz::verifier {

LogSink stream_log_sink(std::ostream& out) {
  auto mutex = std::make_shared<std::mutex>();
  return [&out, mutex](const std::string& line) {
    std::lock_guard lock(*mutex);
    out << line << '\n' << std::flush;
  };
}

Server::Server(std::shared_ptr<const VerifierConfig> config, net::Listener listener, LogSink log,
               crypto::EntropySource& entropy)
    : config_(std::move(config)), listener_(std::move(listener)), log_(std::move(log)), entropy_(&entropy) {
  config_->validate();
}

void Server::log(const std::string& line) const {
  if (log_) log_(line);
}

ConnectionOutcome Server::handle_connection(net::Socket socket) {
  ConnectionOutcome outcome;
  std::string peer = "unknown";
  try {
    peer = socket.peer_address();
    socket.set_timeout(io_timeout);
    VerifierSession session(config_, *entropy_);

    const wire::Frame first = net::read_frame(socket);
    if (first.type != wire::MsgType::msg0) throw std::runtime_error("expected msg0");
    const wire::Msg1Payload msg1 = session.handle_msg0(wire::decode_msg0(first.payload));
    net::write_frame(socket, wire::MsgType::msg1, wire::encode_msg1(msg1));

    const wire::Frame second = net::read_frame(socket);
    if (second.type != wire::MsgType::msg2) {
      throw std::runtime_error(std::string("expected msg2, got type ") +
                               std::to_string(static_cast<int>(second.type)));
    }
    const AppraisalVerdict verdict = session.appraise_msg2(wire::decode_msg2(second.payload));
    outcome.verdict = verdict;

    nlohmann::json entry{{"event", "appraisal"},
                         {"outcome", verdict.accepted ? "accepted" : "rejected"},
                         {"claim", to_hex(verdict.claim)},
                         {"peer", peer}};
    entry["reason"] = verdict.reason ? nlohmann::json(to_string(*verdict.reason)) : nlohmann::json(nullptr);
    log(entry.dump());

    if (verdict.accepted) {
      const wire::Msg3Payload msg3 = session.build_msg3();
      net::write_frame(socket, wire::MsgType::msg3, wire::encode_msg3(msg3));
      outcome.msg3_sent = true;
    }
  } catch (const std::exception& e) {
    outcome.error = e.what();
    log(nlohmann::json{{"event", "connection-closed"}, {"reason", e.what()}, {"peer", peer}}.dump());
  }
  socket.shutdown_write();
  handled_.fetch_add(1);
  return outcome;
}

void Server::serve(std::stop_token stop) {
  log(nlohmann::json{{"event", "listening"}, {"address", listener_.address()}, {"port", listener_.port()}}.dump());

  struct Worker {
    std::jthread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };
  std::list<Worker> workers;

  while (!stop.stop_requested()) {
    workers.remove_if([](const Worker& w) { return w.done->load(); });
    std::optional<net::Socket> socket = listener_.accept(std::chrono::milliseconds(100));
    if (!socket) continue;
    auto done = std::make_shared<std::atomic<bool>>(false);
    try {
      workers.push_back(Worker{std::jthread([this, done, s = std::move(*socket)]() mutable {
                                 handle_connection(std::move(s));
                                 done->store(true);
                               }),
                               done});
    } catch (const std::system_error& e) {
      log(nlohmann::json{{"event", "accept-failed"}, {"reason", e.what()}}.dump());
    }
  }
  workers.clear();
  log(nlohmann::json{{"event", "stopped"}, {"connections", handled_.load()}}.dump());
}

}  // namespace watz::verifier
