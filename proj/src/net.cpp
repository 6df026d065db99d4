#include "watz/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <memory>

namespace watz::net {

namespace {

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

struct AddrInfoFree {
  void operator()(addrinfo* p) const { freeaddrinfo(p); }
};

std::unique_ptr<addrinfo, AddrInfoFree> resolve(const Endpoint& endpoint, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = passive ? AI_PASSIVE : 0;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(endpoint.port);
  const int rc = getaddrinfo(endpoint.host.empty() ? nullptr : endpoint.host.c_str(), port.c_str(), &hints, &result);
  if (rc != 0) throw NetError(NetErrc::resolve, "cannot resolve " + endpoint.str() + ": " + gai_strerror(rc));
  return std::unique_ptr<addrinfo, AddrInfoFree>(result);
}

std::string format_sockaddr(const sockaddr_storage& addr) {
  char host[INET6_ADDRSTRLEN] = {};
  std::uint16_t port = 0;
  if (addr.ss_family == AF_INET) {
    const auto* in = reinterpret_cast<const sockaddr_in*>(&addr);
    inet_ntop(AF_INET, &in->sin_addr, host, sizeof host);
    port = ntohs(in->sin_port);
    return std::string(host) + ":" + std::to_string(port);
  }
  if (addr.ss_family == AF_INET6) {
    const auto* in6 = reinterpret_cast<const sockaddr_in6*>(&addr);
    inet_ntop(AF_INET6, &in6->sin6_addr, host, sizeof host);
    port = ntohs(in6->sin6_port);
    return "[" + std::string(host) + "]:" + std::to_string(port);
  }
  return "unknown";
}

}  // namespace

const char* to_string(NetErrc code) noexcept {
  switch (code) {
    case NetErrc::bad_address:
      return "bad-address";
    case NetErrc::resolve:
      return "resolve";
    case NetErrc::connect:
      return "connect";
    case NetErrc::io:
      return "io";
    case NetErrc::closed:
      return "closed";
    case NetErrc::timeout:
      return "timeout";
  }
  return "?";
}

Endpoint Endpoint::parse(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw NetError(NetErrc::bad_address, "expected host:port, got '" + std::string(text) + "'");
  }
  std::string_view host = text.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') {
    host = host.substr(1, host.size() - 2);
  } else if (host.find_first_of("[]:") != std::string_view::npos) {
    throw NetError(NetErrc::bad_address, "IPv6 hosts go in brackets: '" + std::string(text) + "'");
  }
  if (host.empty()) throw NetError(NetErrc::bad_address, "empty host in '" + std::string(text) + "'");
  unsigned long port = 0;
  for (const char c : text.substr(colon + 1)) {
    if (c < '0' || c > '9') throw NetError(NetErrc::bad_address, "port is not a number in '" + std::string(text) + "'");
    port = port * 10 + static_cast<unsigned long>(c - '0');
    if (port > 65535) throw NetError(NetErrc::bad_address, "port out of range in '" + std::string(text) + "'");
  }
  return Endpoint{std::string(host), static_cast<std::uint16_t>(port)};
}

std::string Endpoint::str() const {
  if (host.find(':') != std::string::npos) return "[" + host + "]:" + std::to_string(port);
  return host + ":" + std::to_string(port);
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::set_timeout(std::chrono::milliseconds timeout) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  if (setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv) != 0 ||
      setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv) != 0) {
    throw NetError(NetErrc::io, errno_text("setsockopt"));
  }
}

void Socket::send_all(ByteView bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetError(NetErrc::timeout, "send timed out");
      throw NetError(NetErrc::io, errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

Bytes Socket::recv_exact(std::size_t n) {
  Bytes out(n);
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd_, out.data() + got, n - got, 0);
    if (r == 0) throw NetError(NetErrc::closed, "connection closed by peer");
    if (r < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw NetError(NetErrc::timeout, "receive timed out");
      if (errno == ECONNRESET) throw NetError(NetErrc::closed, "connection reset by peer");
      throw NetError(NetErrc::io, errno_text("recv"));
    }
    got += static_cast<std::size_t>(r);
  }
  return out;
}

void Socket::shutdown_write() noexcept {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void Socket::close() noexcept {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::string Socket::peer_address() const {
  sockaddr_storage addr{};
  socklen_t len = sizeof addr;
  if (getpeername(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) return "unknown";
  return format_sockaddr(addr);
}

Socket connect(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  const auto info = resolve(endpoint, false);
  std::string last_error = "no address";
  for (addrinfo* ai = info.get(); ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) {
      last_error = errno_text("socket");
      continue;
    }
    s.set_timeout(timeout);
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      const int one = 1;
      setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return s;
    }
    last_error = errno_text("connect");
  }
  throw NetError(NetErrc::connect, "cannot connect to " + endpoint.str() + ": " + last_error);
}

Listener Listener::bind(const Endpoint& endpoint, int backlog) {
  const auto info = resolve(endpoint, true);
  std::string last_error = "no address";
  for (addrinfo* ai = info.get(); ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!s.valid()) {
      last_error = errno_text("socket");
      continue;
    }
    const int one = 1;
    setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(s.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(s.fd(), backlog) != 0) {
      last_error = errno_text("bind");
      continue;
    }
    sockaddr_storage bound{};
    socklen_t len = sizeof bound;
    getsockname(s.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
    const std::uint16_t port = bound.ss_family == AF_INET6
                                   ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                                   : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
    return Listener(std::move(s), endpoint.host, port);
  }
  throw NetError(NetErrc::connect, "cannot listen on " + endpoint.str() + ": " + last_error);
}

std::string Listener::address() const { return Endpoint{host_, port_}.str(); }

std::optional<Socket> Listener::accept(std::chrono::milliseconds wait) {
  pollfd pfd{socket_.fd(), POLLIN, 0};
  const int rc = ::poll(&pfd, 1, static_cast<int>(wait.count()));
  if (rc <= 0) return std::nullopt;
  Socket s(::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC));
  if (!s.valid()) return std::nullopt;
  const int one = 1;
  setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

void write_frame(Socket& socket, wire::MsgType type, ByteView payload) {
  socket.send_all(wire::encode_frame(type, payload));
}

wire::Frame read_frame(Socket& socket) {
  const Bytes header_bytes = socket.recv_exact(wire::kFrameHeaderSize);
  const wire::FrameHeader header = wire::decode_frame_header(header_bytes);
  return wire::Frame{header.type, socket.recv_exact(header.payload_len)};
}

}  // namespace watz::net
