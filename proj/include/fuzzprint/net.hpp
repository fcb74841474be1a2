#pragma once

// POSIX socket plumbing shared by the FTP client channel and the live
// simulated server.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "fuzzprint/backend.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/packet.hpp"

namespace fuzzprint {

class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) noexcept : fd_(fd) {}
  UniqueFd(UniqueFd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;
  ~UniqueFd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

/// IPv4 address of `host` (dotted quad or resolvable name), host byte order.
inline std::uint32_t resolve_ipv4(const std::string& host) {
  if (auto a = parse_ipv4(host)) return *a;
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &res);
  if (rc != 0 || !res) throw TransportError("cannot resolve " + host + ": " + ::gai_strerror(rc));
  const auto* sin = reinterpret_cast<const sockaddr_in*>(res->ai_addr);
  const std::uint32_t addr = ntohl(sin->sin_addr.s_addr);
  ::freeaddrinfo(res);
  return addr;
}

inline sockaddr_in make_sockaddr(std::uint32_t addr, std::uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  sa.sin_addr.s_addr = htonl(addr);
  return sa;
}

/// Waits until `fd` is readable; false on timeout.
inline bool wait_readable(int fd, std::chrono::milliseconds timeout) {
  pollfd pfd{fd, POLLIN, 0};
  for (;;) {
    const int rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc > 0) return true;
    if (rc == 0) return false;
    if (errno != EINTR) throw TransportError(std::string("poll: ") + std::strerror(errno));
  }
}

/// Line reader/writer over a connected stream socket. Lines end with CRLF
/// on output; on input a bare LF is accepted too.
class SocketLineChannel final : public LineChannel {
 public:
  explicit SocketLineChannel(UniqueFd fd) : fd_(std::move(fd)) {}

  static std::unique_ptr<SocketLineChannel> connect(const std::string& host, std::uint16_t port,
                                                    std::chrono::milliseconds timeout) {
    const auto addr = resolve_ipv4(host);
    UniqueFd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd) throw TransportError(std::string("socket: ") + std::strerror(errno));
    const auto sa = make_sockaddr(addr, port);
    timeval tv{};
    tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
    tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
    ::setsockopt(fd.get(), SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
    if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0)
      throw TransportError("connect to " + host + ":" + std::to_string(port) + " failed: " + std::strerror(errno));
    return std::make_unique<SocketLineChannel>(std::move(fd));
  }

  void send_line(std::string_view line) override {
    std::string data(line);
    data += "\r\n";
    std::size_t sent = 0;
    while (sent < data.size()) {
      const auto n = ::send(fd_.get(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EPIPE || errno == ECONNRESET || errno == ENOTCONN) throw ConnectionClosedError("peer closed the connection");
        throw TransportError(std::string("send: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      if (eof_) throw ConnectionClosedError("peer closed the connection");
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0 || !wait_readable(fd_.get(), left)) return std::nullopt;
      char chunk[4096];
      const auto n = ::recv(fd_.get(), chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == ECONNRESET) {
          eof_ = true;
          continue;
        }
        throw TransportError(std::string("recv: ") + std::strerror(errno));
      }
      if (n == 0) eof_ = true;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  UniqueFd fd_;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace fuzzprint
