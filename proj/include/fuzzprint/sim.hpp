#pragma once

// Simulated targets: an in-process TCP stack behind the PacketBackend
// interface, and an FTP server reachable either in-process or on a
// localhost socket.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "fuzzprint/backend.hpp"
#include "fuzzprint/net.hpp"
#include "fuzzprint/packet.hpp"
#include "fuzzprint/personality.hpp"

namespace fuzzprint {

/// In-process network containing one simulated host. Deterministic: no
/// clocks, no randomness; receive() returns immediately when nothing is
/// queued. One instance per thread.
class SimulatedPacketBackend final : public PacketBackend {
 public:
  enum class Direction { outbound, inbound };

  struct LogEntry {
    Direction direction;
    PacketDescription packet;
  };

  /// Source of background traffic injected ahead of every reply.
  static constexpr std::uint32_t kNoiseAddress = 0xC6336407;  // 198.51.100.7
  static constexpr std::uint16_t kNoisePort = 443;

  SimulatedPacketBackend(StackPersonality personality, std::uint32_t target, std::uint32_t local,
                         std::size_t extraneous_per_reply = 0)
      : personality_(std::move(personality)), target_(target), local_(local), noise_(extraneous_per_reply) {
    validate(personality_);
  }

  void send(const PacketDescription& pkt) override {
    log_.push_back({Direction::outbound, pkt});
    if (pkt.value_or(IpField::daddr, 0) != target_) return;
    auto reply = respond_tcp(personality_, pkt);
    if (reply.is_blank) return;
    for (std::size_t i = 0; i < noise_; ++i) {
      PacketDescription n;
      n.set(IpField::saddr, kNoiseAddress).set(IpField::daddr, local_);
      n.set(TcpField::sport, kNoisePort).set(TcpField::dport, pkt.value_or(TcpField::sport, 0));
      n.set(TcpField::flags, tcp_flags::kAck).set(TcpField::window, 501);
      inbox_.push_back(std::move(n));
    }
    log_.push_back({Direction::inbound, reply});
    inbox_.push_back(std::move(reply));
  }

  std::optional<PacketDescription> receive(std::chrono::milliseconds) override {
    if (inbox_.empty()) return std::nullopt;
    auto p = std::move(inbox_.front());
    inbox_.pop_front();
    return p;
  }

  std::uint32_t local_address() const override { return local_; }

  /// Every packet sent to or by the simulated host, in order.
  const std::vector<LogEntry>& log() const noexcept { return log_; }
  void clear_log() { log_.clear(); }
  const StackPersonality& personality() const noexcept { return personality_; }

 private:
  StackPersonality personality_;
  std::uint32_t target_;
  std::uint32_t local_;
  std::size_t noise_;
  std::deque<PacketDescription> inbox_;
  std::vector<LogEntry> log_;
};

inline std::string reply_text(int code) {
  switch (code) {
    case 200: return "Command okay.";
    case 202: return "Command not implemented, superfluous at this site.";
    case 211: return "System status.";
    case 214: return "Help message.";
    case 215: return "UNIX Type: L8";
    case 220: return "Service ready.";
    case 221: return "Goodbye.";
    case 230: return "Login successful.";
    case 331: return "Please specify the password.";
    case 350: return "Requested file action pending further information.";
    case 421: return "Too many errors, closing control connection.";
    case 500: return "Syntax error, command unrecognized.";
    case 501: return "Syntax error in parameters or arguments.";
    case 502: return "Command not implemented.";
    case 503: return "Bad sequence of commands.";
    case 504: return "Command not implemented for that parameter.";
    case 530: return "Not logged in.";
    default: return "Reply.";
  }
}

/// Server side of one FTP control connection driven by a personality.
/// Login handling and the error-count disconnect are session state; the
/// status code for a probe after login is respond_ftp().
class FtpServerSession {
 public:
  explicit FtpServerSession(const FtpPersonality& p) : p_(p) {}

  std::vector<std::string> greeting() const { return {"220 " + (p_.greeting ? *p_.greeting : std::string())}; }

  /// Reply lines for one received command line (possibly none).
  std::vector<std::string> handle(std::string_view line) {
    if (closed_) return {};
    const auto probe = split_probe(line, false);
    if (probe.command == "QUIT") {
      closed_ = true;
      return single(221);
    }
    if (!logged_in_) {
      if (probe.command == "USER") {
        anonymous_user_ = probe.argument == "anonymous" || probe.argument == "ftp";
        return single(331);
      }
      if (probe.command == "PASS") {
        if (anonymous_user_ && p_.allow_anonymous) {
          logged_in_ = true;
          return single(230);
        }
        return single(530);
      }
      return single(530);
    }

    const auto code = respond_ftp(p_, line);
    if (!code) return {};
    if (*code >= 500 && p_.close_after_errors > 0 && ++errors_ >= p_.close_after_errors) {
      closed_ = true;
      return single(421);
    }
    const auto cmd = split_probe(line, p_.case_sensitive).command;
    if (p_.multiline.count(cmd)) {
      const auto c = std::to_string(*code);
      return {c + "-" + reply_text(*code), " " + p_.name, c + " End"};
    }
    return single(*code);
  }

  bool closed() const noexcept { return closed_; }
  bool logged_in() const noexcept { return logged_in_; }

 private:
  static std::vector<std::string> single(int code) { return {std::to_string(code) + " " + reply_text(code)}; }

  const FtpPersonality& p_;
  bool logged_in_ = false;
  bool anonymous_user_ = false;
  bool closed_ = false;
  std::size_t errors_ = 0;
};

/// Control connection straight into an FtpServerSession, no sockets. A
/// silent reply shows up as a read timeout.
class InProcessFtpChannel final : public LineChannel {
 public:
  explicit InProcessFtpChannel(std::shared_ptr<const FtpPersonality> p) : p_(std::move(p)), session_(*p_) {
    for (auto& l : session_.greeting()) pending_.push_back(std::move(l));
  }

  void send_line(std::string_view line) override {
    if (session_.closed()) throw ConnectionClosedError("simulated server closed the connection");
    for (auto& l : session_.handle(line)) pending_.push_back(std::move(l));
  }

  std::optional<std::string> read_line(std::chrono::milliseconds) override {
    if (!pending_.empty()) {
      auto l = std::move(pending_.front());
      pending_.pop_front();
      return l;
    }
    if (session_.closed()) throw ConnectionClosedError("simulated server closed the connection");
    return std::nullopt;
  }

 private:
  std::shared_ptr<const FtpPersonality> p_;
  FtpServerSession session_;
  std::deque<std::string> pending_;
};

/// Connection factory for an in-process FTP personality.
inline ChannelFactory serve_in_process(FtpPersonality p) {
  auto shared = std::make_shared<const FtpPersonality>(std::move(p));
  return [shared]() -> std::unique_ptr<LineChannel> { return std::make_unique<InProcessFtpChannel>(shared); };
}

/// FTP personality served on 127.0.0.1, one session at a time, from a
/// background thread. Stops and joins on destruction.
class LiveFtpServer {
 public:
  explicit LiveFtpServer(FtpPersonality p, std::uint16_t port = 0) : p_(std::move(p)) {
    validate(p_);
    listen_ = UniqueFd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listen_) throw TransportError(std::string("socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(listen_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    auto sa = make_sockaddr(0x7F000001, port);
    if (::bind(listen_.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0)
      throw TransportError("bind 127.0.0.1:" + std::to_string(port) + " failed: " + std::strerror(errno));
    if (::listen(listen_.get(), 8) != 0) throw TransportError(std::string("listen: ") + std::strerror(errno));
    socklen_t len = sizeof sa;
    ::getsockname(listen_.get(), reinterpret_cast<sockaddr*>(&sa), &len);
    port_ = ntohs(sa.sin_port);
    thread_ = std::thread([this] { run(); });
  }

  LiveFtpServer(const LiveFtpServer&) = delete;
  LiveFtpServer& operator=(const LiveFtpServer&) = delete;

  ~LiveFtpServer() { stop(); }

  std::uint16_t port() const noexcept { return port_; }
  std::size_t sessions_served() const noexcept { return sessions_.load(); }

  void stop() {
    stop_.store(true);
    if (thread_.joinable()) thread_.join();
  }

 private:
  static constexpr std::chrono::milliseconds kPoll{50};

  void run() {
    while (!stop_.load()) {
      bool ready = false;
      try {
        ready = wait_readable(listen_.get(), kPoll);
      } catch (const TransportError&) {
        return;
      }
      if (!ready) continue;
      UniqueFd conn(::accept(listen_.get(), nullptr, nullptr));
      if (!conn) continue;
      serve_session(conn.get());
      sessions_.fetch_add(1);
    }
  }

  static bool write_lines(int fd, const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + "\r\n";
    std::size_t sent = 0;
    while (sent < out.size()) {
      const auto n = ::send(fd, out.data() + sent, out.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  void serve_session(int fd) {
    FtpServerSession session(p_);
    if (!write_lines(fd, session.greeting())) return;
    std::string buffer;
    while (!stop_.load() && !session.closed()) {
      bool ready = false;
      try {
        ready = wait_readable(fd, kPoll);
      } catch (const TransportError&) {
        return;
      }
      if (!ready) continue;
      char chunk[4096];
      const auto n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) return;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      while (!session.closed() && (nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!write_lines(fd, session.handle(line))) return;
      }
    }
  }

  FtpPersonality p_;
  UniqueFd listen_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<std::size_t> sessions_{0};
  std::thread thread_;
};

}  // namespace fuzzprint
