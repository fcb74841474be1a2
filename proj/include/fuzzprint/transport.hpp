#pragma once

// Probe delivery: half-open port scan, the OS probe loop, and the FTP
// control-connection session. Every loop is strictly send-then-receive so
// that response n can be attributed to probe n.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fuzzprint/backend.hpp"
#include "fuzzprint/corpus.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/fingerprint.hpp"
#include "fuzzprint/matcher.hpp"
#include "fuzzprint/net.hpp"
#include "fuzzprint/packet.hpp"

namespace fuzzprint {

inline constexpr std::uint16_t kDefaultFtpPort = 21;

struct TargetAddress {
  std::string host;
  std::optional<std::uint16_t> port;

  std::uint16_t ftp_port() const noexcept { return port.value_or(kDefaultFtpPort); }
};

struct TransportConfig {
  std::chrono::milliseconds timeout{500};
  std::size_t max_extraneous = 64;  // unrelated packets tolerated while waiting for one reply
  std::size_t max_reconnects = 8;   // FTP: reconnects per session before giving up

  void validate() const {
    if (timeout.count() <= 0) throw DomainError("timeout must be positive");
  }
};

/// Source port and sequence number of scanner SYNs.
inline constexpr std::uint16_t kScanSourcePort = 40000;
inline constexpr std::uint32_t kScanSeq = 0x5CA40000;
/// Source port of OS probes whose corpus line leaves tcp.sport unset.
inline constexpr std::uint16_t kProbeSourcePort = 40001;

/// Anonymous FTP password.
inline constexpr std::string_view kAnonymousPassword = "fuzzprint@example.invalid";

namespace detail {

/// Waits for a packet from (addr, port) to our `local_port`; nullopt on
/// timeout or when more than cfg.max_extraneous other packets went by.
inline std::optional<PacketDescription> await_reply(PacketBackend& backend, const TransportConfig& cfg,
                                                    std::uint32_t addr, std::uint16_t port,
                                                    std::optional<std::uint16_t> local_port) {
  const auto deadline = std::chrono::steady_clock::now() + cfg.timeout;
  std::size_t extraneous = 0;
  for (;;) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    auto pkt = backend.receive(std::max(left, std::chrono::milliseconds(0)));
    if (!pkt) return std::nullopt;
    const bool from_target = pkt->value_or(IpField::saddr, 0) == addr && pkt->value_or(TcpField::sport, 0) == port;
    const bool to_us = !local_port || pkt->value_or(TcpField::dport, 0) == *local_port;
    if (from_target && to_us) return pkt;
    if (++extraneous > cfg.max_extraneous) return std::nullopt;
    if (left.count() <= 0) return std::nullopt;
  }
}

}  // namespace detail

/// Half-open scan of ports 0..n_ports-1 in order: SYN, and on SYN+ACK a RST
/// and return. A RST reply or silence moves on to the next port. nullopt
/// means no open port was found.
inline std::optional<std::uint16_t> find_open_tcp_port(std::uint32_t target, std::uint32_t n_ports,
                                                       PacketBackend& backend, const TransportConfig& cfg = {}) {
  cfg.validate();
  const auto local = backend.local_address();
  for (std::uint32_t port = 0; port < n_ports && port <= 0xFFFF; ++port) {
    PacketDescription syn;
    syn.set(IpField::saddr, local).set(IpField::daddr, target);
    syn.set(TcpField::sport, kScanSourcePort)
        .set(TcpField::dport, port)
        .set(TcpField::seq, kScanSeq)
        .set(TcpField::flags, tcp_flags::kSyn)
        .set(TcpField::window, kScanWindow);
    backend.send(fill_defaults(syn, local, target, static_cast<std::uint16_t>(port)));

    const auto reply = detail::await_reply(backend, cfg, target, static_cast<std::uint16_t>(port), kScanSourcePort);
    if (!reply) continue;
    const auto flags = reply->value_or(TcpField::flags, 0);
    if ((flags & (tcp_flags::kSyn | tcp_flags::kAck)) == (tcp_flags::kSyn | tcp_flags::kAck)) {
      PacketDescription rst;
      rst.set(IpField::saddr, local).set(IpField::daddr, target);
      rst.set(TcpField::sport, kScanSourcePort)
          .set(TcpField::dport, port)
          .set(TcpField::seq, reply->value_or(TcpField::ack, kScanSeq + 1))
          .set(TcpField::flags, tcp_flags::kRst)
          .set(TcpField::window, 0);
      backend.send(fill_defaults(rst, local, target, static_cast<std::uint16_t>(port)));
      return static_cast<std::uint16_t>(port);
    }
  }
  return std::nullopt;
}

/// Sends every probe of an OS corpus to `open_port` and records the
/// matching reply (by source address and port), or a blank line.
inline Fingerprint send_and_receive(const Corpus& corpus, std::uint32_t target, std::optional<std::uint16_t> open_port,
                                    const TransportConfig& cfg, PacketBackend& backend, std::string label) {
  cfg.validate();
  if (corpus.kind != Kind::os) throw DomainError("send_and_receive needs an os corpus");
  if (!open_port)
    throw ScanPrerequisiteError("no open TCP port on " + format_ipv4(target) + "; a port scan must find one first");
  Fingerprint fp;
  fp.label = std::move(label);
  fp.kind = Kind::os;
  fp.corpus_checksum = corpus.checksum();
  fp.lines.reserve(corpus.size());
  const auto local = backend.local_address();

  for (const auto& line : corpus.probes) {
    auto probe = decode_apd(line);
    if (!probe[TcpField::sport]) probe.set(TcpField::sport, kProbeSourcePort);
    if (!probe[TcpField::seq]) probe.set(TcpField::seq, kDefaultProbeSeq);
    if (!probe[IpField::saddr]) probe[IpField::saddr] = FieldValue::placeholder();
    if (!probe[IpField::daddr]) probe[IpField::daddr] = FieldValue::placeholder();
    if (!probe[TcpField::dport]) probe[TcpField::dport] = FieldValue::placeholder();
    probe = fill_defaults(std::move(probe), local, target, *open_port);
    backend.send(probe);
    const auto reply = detail::await_reply(backend, cfg, target, *open_port, std::nullopt);
    fp.lines.push_back(reply ? encode_apd(*reply) : std::string());
  }
  return fp;
}

/// Reads one FTP reply and reduces it to its status code. Multi-line
/// replies (`ddd-` ... `ddd `) are consumed to their last line. Lines that
/// do not start with a code are skipped. nullopt on timeout.
inline std::optional<std::string> read_reply_code(LineChannel& ch, std::chrono::milliseconds timeout) {
  for (;;) {
    auto line = ch.read_line(timeout);
    if (!line) return std::nullopt;
    if (line->size() < 3 || !is_status_code(line->substr(0, 3))) continue;
    const std::string code = line->substr(0, 3);
    if (line->size() == 3 || (*line)[3] != '-') return code;
    for (;;) {
      auto more = ch.read_line(timeout);
      if (!more) return code;
      if (more->size() >= 3 && more->compare(0, 3, code) == 0 && (more->size() == 3 || (*more)[3] == ' ')) return code;
    }
  }
}

namespace detail {

inline std::unique_ptr<LineChannel> open_and_login(const ChannelFactory& factory, const TransportConfig& cfg) {
  auto ch = factory();
  const auto greeting = read_reply_code(*ch, cfg.timeout);
  if (!greeting) throw TransportError("FTP server sent no greeting");
  if ((*greeting)[0] != '2') throw TransportError("FTP server refused the session with " + *greeting);

  ch->send_line("USER anonymous");
  auto reply = read_reply_code(*ch, cfg.timeout);
  if (!reply) throw TransportError("no reply to USER");
  if (*reply == "230") return ch;
  if ((*reply)[0] != '3') throw LoginRefusedError("anonymous login refused: USER answered " + *reply);
  ch->send_line("PASS " + std::string(kAnonymousPassword));
  reply = read_reply_code(*ch, cfg.timeout);
  if (!reply) throw TransportError("no reply to PASS");
  if ((*reply)[0] != '2') throw LoginRefusedError("anonymous login refused: PASS answered " + *reply);
  return ch;
}

}  // namespace detail

/// One anonymous control session; record n is the status code of the reply
/// to probe n, or blank on timeout. If the server drops the connection the
/// interrupted probe is blanked, the session is re-established and the run
/// continues with the next probe. A refused login, or running out of
/// reconnects, aborts without a fingerprint.
inline Fingerprint ftp_session(const Corpus& corpus, const ChannelFactory& connect, const TransportConfig& cfg,
                               std::string label) {
  cfg.validate();
  if (corpus.kind != Kind::ftp) throw DomainError("ftp_session needs an ftp corpus");
  Fingerprint fp;
  fp.label = std::move(label);
  fp.kind = Kind::ftp;
  fp.corpus_checksum = corpus.checksum();
  fp.lines.reserve(corpus.size());

  auto ch = detail::open_and_login(connect, cfg);
  std::size_t reconnects = 0;
  for (const auto& probe : corpus.probes) {
    try {
      ch->send_line(probe);
      fp.lines.push_back(read_reply_code(*ch, cfg.timeout).value_or(std::string()));
    } catch (const ConnectionClosedError&) {
      fp.lines.emplace_back();
      if (++reconnects > cfg.max_reconnects)
        throw ConnectionClosedError("connection lost " + std::to_string(reconnects) +
                                    " times; partial fingerprint discarded");
      try {
        ch = detail::open_and_login(connect, cfg);
      } catch (const LoginRefusedError&) {
        throw;
      } catch (const TransportError& e) {
        throw ConnectionClosedError(std::string("reconnect failed, partial fingerprint discarded: ") + e.what());
      }
    }
  }
  return fp;
}

/// ftp_session over real TCP to target.host:target.ftp_port().
inline Fingerprint ftp_session(const Corpus& corpus, const TargetAddress& target, const TransportConfig& cfg,
                               std::string label) {
  const ChannelFactory connect = [&]() -> std::unique_ptr<LineChannel> {
    return SocketLineChannel::connect(target.host, target.ftp_port(), cfg.timeout);
  };
  return ftp_session(corpus, connect, cfg, std::move(label));
}

}  // namespace fuzzprint
