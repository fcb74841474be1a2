#pragma once

// Live packet backend on Linux raw IPv4 sockets. Needs CAP_NET_RAW (usually
// root). Not exercised by the automated tests.
//
// The local kernel knows nothing about these half-open connections and will
// answer a target's SYN+ACK with its own RST; that does not disturb probing
// but can be suppressed with a firewall rule on the scan source port.

#if defined(__linux__)

#include <netinet/in.h>
#include <netinet/ip.h>
#include <sys/socket.h>

#include <chrono>
#include <cstring>
#include <optional>
#include <vector>

#include "fuzzprint/backend.hpp"
#include "fuzzprint/net.hpp"
#include "fuzzprint/packet.hpp"

namespace fuzzprint {

/// Address the kernel would use as source for packets to `target`.
inline std::uint32_t local_address_for(std::uint32_t target) {
  UniqueFd fd(::socket(AF_INET, SOCK_DGRAM, 0));
  if (!fd) throw TransportError(std::string("socket: ") + std::strerror(errno));
  const auto sa = make_sockaddr(target, 9);
  if (::connect(fd.get(), reinterpret_cast<const sockaddr*>(&sa), sizeof sa) != 0)
    throw TransportError("no route to " + format_ipv4(target));
  sockaddr_in local{};
  socklen_t len = sizeof local;
  ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&local), &len);
  return ntohl(local.sin_addr.s_addr);
}

class RawSocketBackend final : public PacketBackend {
 public:
  explicit RawSocketBackend(std::uint32_t target) : local_(local_address_for(target)) {
    fd_ = UniqueFd(::socket(AF_INET, SOCK_RAW, IPPROTO_TCP));
    if (!fd_) throw TransportError(std::string("raw socket (needs CAP_NET_RAW): ") + std::strerror(errno));
    const int one = 1;
    if (::setsockopt(fd_.get(), IPPROTO_IP, IP_HDRINCL, &one, sizeof one) != 0)
      throw TransportError(std::string("IP_HDRINCL: ") + std::strerror(errno));
  }

  void send(const PacketDescription& pkt) override {
    const auto bytes = to_wire(pkt);
    const auto sa = make_sockaddr(pkt.value_or(IpField::daddr, 0), 0);
    if (::sendto(fd_.get(), bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&sa), sizeof sa) < 0)
      throw TransportError(std::string("sendto: ") + std::strerror(errno));
  }

  std::optional<PacketDescription> receive(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() < 0 || !wait_readable(fd_.get(), left)) return std::nullopt;
      std::vector<std::uint8_t> buf(65535);
      const auto n = ::recv(fd_.get(), buf.data(), buf.size(), 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("recv: ") + std::strerror(errno));
      }
      buf.resize(static_cast<std::size_t>(n));
      try {
        return from_wire(buf);
      } catch (const ParseError&) {
        // truncated or odd packet from somebody else; keep waiting
      }
    }
  }

  std::uint32_t local_address() const override { return local_; }

 private:
  std::uint32_t local_;
  UniqueFd fd_;
};

}  // namespace fuzzprint

#endif
