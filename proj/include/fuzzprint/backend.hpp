#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "fuzzprint/packet.hpp"

namespace fuzzprint {

/// Window of the SYN the port scanner sends. Simulated personalities are
/// checked against exactly this probe.
inline constexpr std::uint32_t kScanWindow = 1024;

/// Sends and receives IPv4/TCP packets. Implementations: the in-process
/// simulated stack and the raw-socket backend.
class PacketBackend {
 public:
  virtual ~PacketBackend() = default;

  virtual void send(const PacketDescription& pkt) = 0;

  /// Next inbound packet, or nullopt once `timeout` passes without one.
  /// The packet need not be a reply to anything this side sent.
  virtual std::optional<PacketDescription> receive(std::chrono::milliseconds timeout) = 0;

  /// Address to put into ip.saddr.
  virtual std::uint32_t local_address() const = 0;
};

/// A CRLF line-oriented control connection (FTP).
class LineChannel {
 public:
  virtual ~LineChannel() = default;

  /// Writes `line` followed by CRLF. Throws ConnectionClosedError when the
  /// peer has gone away.
  virtual void send_line(std::string_view line) = 0;

  /// One line without its terminator; nullopt on timeout. Throws
  /// ConnectionClosedError at end of stream.
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;
};

/// Opens a fresh control connection; throws TransportError on failure.
using ChannelFactory = std::function<std::unique_ptr<LineChannel>()>;

}  // namespace fuzzprint
