#pragma once

// Blocking TCP transport for protocol frames.

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "watz/bytes.hpp"
#include "watz/wire.hpp"

namespace watz::net {

enum class NetErrc { bad_address, resolve, connect, io, closed, timeout };

const char* to_string(NetErrc code) noexcept;

class NetError : public std::runtime_error {
 public:
  NetError(NetErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  NetErrc code() const noexcept { return code_; }

 private:
  NetErrc code_;
};

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  /// "host:port"; IPv6 literals go in brackets.
  static Endpoint parse(std::string_view text);
  std::string str() const;
};

inline constexpr std::chrono::milliseconds kDefaultTimeout{10'000};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  bool valid() const noexcept { return fd_ >= 0; }
  int fd() const noexcept { return fd_; }

  /// Receive and send timeouts; zero disables.
  void set_timeout(std::chrono::milliseconds timeout);
  void send_all(ByteView bytes);
  /// Throws NetError(closed) on EOF before `n` bytes arrived.
  Bytes recv_exact(std::size_t n);
  void shutdown_write() noexcept;
  void close() noexcept;
  std::string peer_address() const;

 private:
  int fd_ = -1;
};

Socket connect(const Endpoint& endpoint, std::chrono::milliseconds timeout = kDefaultTimeout);

class Listener {
 public:
  static Listener bind(const Endpoint& endpoint, int backlog = 64);

  std::uint16_t port() const noexcept { return port_; }
  std::string address() const;
  /// Waits up to `wait` for a connection.
  std::optional<Socket> accept(std::chrono::milliseconds wait);

 private:
  Listener(Socket socket, std::string host, std::uint16_t port)
      : socket_(std::move(socket)), host_(std::move(host)), port_(port) {}

  Socket socket_;
  std::string host_;
  std::uint16_t port_;
};

void write_frame(Socket& socket, wire::MsgType type, ByteView payload);
/// NetError on transport failure, WireError on a bad header.
wire::Frame read_frame(Socket& socket);

}  // namespace watz::net
