#pragma once

// IPv4/TCP packet descriptions and their one-line APD text form.
//
//   line   := group ("+" group)*
//   group  := name "{" pair ("," pair)* "}"     name is "ip" or "tcp"
//   pair   := key "=" value
//   value  := integer | dotted-quad | "DUMMY" | option-string
//   option-string := option (";" option)*,  option := kind[":" integer]
//
// An empty line stands for "no response".

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzprint/checksum.hpp"
#include "fuzzprint/error.hpp"

namespace fuzzprint {

enum class Layer { ip, tcp };

inline constexpr std::string_view layer_name(Layer l) noexcept {
  return l == Layer::ip ? "ip" : "tcp";
}

struct FieldDescriptor {
  Layer layer;
  std::string_view name;
  unsigned width_bits;

  constexpr std::uint64_t domain_size() const noexcept { return std::uint64_t{1} << width_bits; }
  constexpr std::uint64_t max_value() const noexcept { return domain_size() - 1; }
};

// Enumerators are in header order; that order is also the canonical APD order.
enum class IpField : std::size_t { version, ihl, tos, len, id, flags, fragoff, ttl, protocol, cksum, saddr, daddr };
enum class TcpField : std::size_t { sport, dport, seq, ack, offset, flags, window, cksum, urgent };

inline constexpr std::size_t kIpFieldCount = 12;
inline constexpr std::size_t kTcpFieldCount = 9;

inline constexpr std::array<FieldDescriptor, kIpFieldCount> kIpFields{{
    {Layer::ip, "version", 4},
    {Layer::ip, "ihl", 4},
    {Layer::ip, "tos", 8},
    {Layer::ip, "len", 16},
    {Layer::ip, "id", 16},
    {Layer::ip, "flags", 3},
    {Layer::ip, "fragoff", 13},
    {Layer::ip, "ttl", 8},
    {Layer::ip, "protocol", 8},
    {Layer::ip, "cksum", 16},
    {Layer::ip, "saddr", 32},
    {Layer::ip, "daddr", 32},
}};

inline constexpr std::array<FieldDescriptor, kTcpFieldCount> kTcpFields{{
    {Layer::tcp, "sport", 16},
    {Layer::tcp, "dport", 16},
    {Layer::tcp, "seq", 32},
    {Layer::tcp, "ack", 32},
    {Layer::tcp, "offset", 4},
    {Layer::tcp, "flags", 6},
    {Layer::tcp, "window", 16},
    {Layer::tcp, "cksum", 16},
    {Layer::tcp, "urgent", 16},
}};

inline constexpr const FieldDescriptor& descriptor(IpField f) noexcept {
  return kIpFields[static_cast<std::size_t>(f)];
}
inline constexpr const FieldDescriptor& descriptor(TcpField f) noexcept {
  return kTcpFields[static_cast<std::size_t>(f)];
}

/// Looks up "ip.ttl" / "tcp.window" style names.
inline std::optional<FieldDescriptor> find_field(std::string_view qualified) {
  const auto dot = qualified.find('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto layer = qualified.substr(0, dot);
  const auto name = qualified.substr(dot + 1);
  if (layer == "ip") {
    for (const auto& d : kIpFields)
      if (d.name == name) return d;
  } else if (layer == "tcp") {
    for (const auto& d : kTcpFields)
      if (d.name == name) return d;
  }
  return std::nullopt;
}

namespace tcp_flags {
inline constexpr std::uint32_t kUrg = 32;
inline constexpr std::uint32_t kAck = 16;
inline constexpr std::uint32_t kPsh = 8;
inline constexpr std::uint32_t kRst = 4;
inline constexpr std::uint32_t kSyn = 2;
inline constexpr std::uint32_t kFin = 1;
}  // namespace tcp_flags

namespace ip_flags {
inline constexpr std::uint32_t kReserved = 4;
inline constexpr std::uint32_t kDontFragment = 2;
inline constexpr std::uint32_t kMoreFragments = 1;
}  // namespace ip_flags

/// A field value, or the DUMMY placeholder that the sender later replaces
/// with a real address/port. DUMMY is legal only for ip.saddr, ip.daddr and
/// tcp.dport.
struct FieldValue {
  std::uint32_t value = 0;
  bool dummy = false;

  static constexpr FieldValue of(std::uint32_t v) noexcept { return {v, false}; }
  static constexpr FieldValue placeholder() noexcept { return {0, true}; }

  friend constexpr bool operator==(const FieldValue&, const FieldValue&) = default;
};

enum class OptionKind : char {
  window_scale = 'W',
  nop = 'N',
  mss = 'M',
  timestamp = 'T',
  echoed_mss = 'E',
};

struct TcpOption {
  OptionKind kind = OptionKind::nop;
  std::uint32_t value = 0;  // ignored for N

  static constexpr TcpOption nop() noexcept { return {OptionKind::nop, 0}; }

  friend constexpr bool operator==(const TcpOption& a, const TcpOption& b) noexcept {
    return a.kind == b.kind && (a.kind == OptionKind::nop || a.value == b.value);
  }
};

/// Bytes the option occupies on the wire.
inline constexpr std::size_t wire_length(OptionKind k) noexcept {
  switch (k) {
    case OptionKind::nop: return 1;
    case OptionKind::window_scale: return 3;
    case OptionKind::mss:
    case OptionKind::echoed_mss: return 4;
    case OptionKind::timestamp: return 10;
  }
  return 0;
}

inline constexpr unsigned option_value_bits(OptionKind k) noexcept {
  switch (k) {
    case OptionKind::nop: return 0;
    case OptionKind::window_scale: return 8;
    case OptionKind::mss:
    case OptionKind::echoed_mss: return 16;
    case OptionKind::timestamp: return 32;
  }
  return 0;
}

inline std::size_t options_wire_length(std::span<const TcpOption> opts) noexcept {
  std::size_t n = 0;
  for (const auto& o : opts) n += wire_length(o.kind);
  return n;
}

inline bool options_word_aligned(std::span<const TcpOption> opts) noexcept {
  return options_wire_length(opts) % 4 == 0;
}

/// Compact kind string such as "MNWNNT".
inline std::string option_kinds(std::span<const TcpOption> opts) {
  std::string s;
  s.reserve(opts.size());
  for (const auto& o : opts) s.push_back(static_cast<char>(o.kind));
  return s;
}

struct PacketDescription {
  std::array<std::optional<FieldValue>, kIpFieldCount> ip{};
  std::array<std::optional<FieldValue>, kTcpFieldCount> tcp{};
  std::vector<TcpOption> options;
  bool is_blank = false;

  static PacketDescription blank() {
    PacketDescription p;
    p.is_blank = true;
    return p;
  }

  const std::optional<FieldValue>& operator[](IpField f) const { return ip[static_cast<std::size_t>(f)]; }
  std::optional<FieldValue>& operator[](IpField f) { return ip[static_cast<std::size_t>(f)]; }
  const std::optional<FieldValue>& operator[](TcpField f) const { return tcp[static_cast<std::size_t>(f)]; }
  std::optional<FieldValue>& operator[](TcpField f) { return tcp[static_cast<std::size_t>(f)]; }

  PacketDescription& set(IpField f, std::uint32_t v) {
    (*this)[f] = FieldValue::of(v);
    return *this;
  }
  PacketDescription& set(TcpField f, std::uint32_t v) {
    (*this)[f] = FieldValue::of(v);
    return *this;
  }

  /// Concrete value, or `fallback` when unset or DUMMY.
  std::uint32_t value_or(IpField f, std::uint32_t fallback) const {
    const auto& v = (*this)[f];
    return v && !v->dummy ? v->value : fallback;
  }
  std::uint32_t value_or(TcpField f, std::uint32_t fallback) const {
    const auto& v = (*this)[f];
    return v && !v->dummy ? v->value : fallback;
  }

  bool has_fields() const {
    const auto set = [](const auto& o) { return o.has_value(); };
    return std::any_of(ip.begin(), ip.end(), set) || std::any_of(tcp.begin(), tcp.end(), set) ||
           !options.empty();
  }

  friend bool operator==(const PacketDescription&, const PacketDescription&) = default;
};

namespace detail {

inline bool dummy_allowed(Layer layer, std::size_t index) noexcept {
  if (layer == Layer::ip)
    return index == static_cast<std::size_t>(IpField::saddr) || index == static_cast<std::size_t>(IpField::daddr);
  return index == static_cast<std::size_t>(TcpField::dport);
}

inline bool is_address(Layer layer, std::size_t index) noexcept {
  return layer == Layer::ip && (index == static_cast<std::size_t>(IpField::saddr) ||
                                index == static_cast<std::size_t>(IpField::daddr));
}

inline std::string qualified(const FieldDescriptor& d) {
  return std::string(layer_name(d.layer)) + "." + std::string(d.name);
}

inline void check_domain(const FieldDescriptor& d, std::size_t index, const FieldValue& v) {
  if (v.dummy) {
    if (!dummy_allowed(d.layer, index)) throw DomainError(qualified(d) + " cannot hold DUMMY");
    return;
  }
  if (v.value > d.max_value())
    throw DomainError(qualified(d) + "=" + std::to_string(v.value) + " exceeds " +
                      std::to_string(d.width_bits) + "-bit domain");
}

inline void check_option(const TcpOption& o) {
  const unsigned bits = option_value_bits(o.kind);
  if (bits == 0 || bits == 32) return;
  if (o.value >= (1u << bits))
    throw DomainError(std::string("tcp.options ") + static_cast<char>(o.kind) + ":" + std::to_string(o.value) +
                      " exceeds " + std::to_string(bits) + "-bit domain");
}

}  // namespace detail

inline std::string format_ipv4(std::uint32_t addr) {
  return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xFF) + "." +
         std::to_string((addr >> 8) & 0xFF) + "." + std::to_string(addr & 0xFF);
}

inline std::optional<std::uint32_t> parse_ipv4(std::string_view s) {
  std::uint32_t addr = 0;
  int parts = 0;
  std::size_t pos = 0;
  while (parts < 4) {
    unsigned octet = 0;
    const char* first = s.data() + pos;
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, octet);
    if (ec != std::errc{} || ptr == first || octet > 255 || ptr - first > 3) return std::nullopt;
    addr = addr << 8 | octet;
    pos = static_cast<std::size_t>(ptr - s.data());
    ++parts;
    if (parts < 4) {
      if (pos >= s.size() || s[pos] != '.') return std::nullopt;
      ++pos;
    }
  }
  if (pos != s.size()) return std::nullopt;
  return addr;
}

/// Serializes a non-blank packet to one APD line in canonical field order.
inline std::string encode_apd(const PacketDescription& pkt) {
  if (pkt.is_blank) throw DomainError("blank packet has no APD encoding (it is stored as an empty line)");
  if (!pkt.has_fields()) throw DomainError("packet without fields would encode as a blank line");

  std::string out;
  const auto emit_group = [&out](std::string_view name, const auto& table, const auto& values, auto extra) {
    std::string body;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (!values[i]) continue;
      const auto& d = table[i];
      detail::check_domain(d, i, *values[i]);
      if (!body.empty()) body += ',';
      body += d.name;
      body += '=';
      if (values[i]->dummy)
        body += "DUMMY";
      else if (detail::is_address(d.layer, i))
        body += format_ipv4(values[i]->value);
      else
        body += std::to_string(values[i]->value);
    }
    extra(body);
    if (body.empty()) return;
    if (!out.empty()) out += '+';
    out += name;
    out += '{';
    out += body;
    out += '}';
  };

  emit_group("ip", kIpFields, pkt.ip, [](std::string&) {});
  emit_group("tcp", kTcpFields, pkt.tcp, [&pkt](std::string& body) {
    if (pkt.options.empty()) return;
    if (!body.empty()) body += ',';
    body += "options=";
    for (std::size_t i = 0; i < pkt.options.size(); ++i) {
      const auto& o = pkt.options[i];
      detail::check_option(o);
      if (i) body += ';';
      body += static_cast<char>(o.kind);
      if (o.kind != OptionKind::nop) {
        body += ':';
        body += std::to_string(o.value);
      }
    }
  });
  return out;
}

namespace detail {

class ApdParser {
 public:
  explicit ApdParser(std::string_view line) : s_(line) {}

  PacketDescription parse() {
    PacketDescription pkt;
    if (s_.empty()) return PacketDescription::blank();
    bool seen_ip = false;
    bool seen_tcp = false;
    for (;;) {
      const std::size_t name_start = pos_;
      const auto name = take_while([](char c) { return c >= 'a' && c <= 'z'; });
      Layer layer;
      if (name == "ip") {
        if (seen_ip) fail("duplicate ip group", name_start);
        seen_ip = true;
        layer = Layer::ip;
      } else if (name == "tcp") {
        if (seen_tcp) fail("duplicate tcp group", name_start);
        seen_tcp = true;
        layer = Layer::tcp;
      } else {
        fail("unknown or missing group name '" + std::string(name) + "'", name_start);
      }
      expect('{');
      parse_pairs(layer, pkt);
      expect('}');
      if (pos_ == s_.size()) break;
      expect('+');
    }
    return pkt;
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const { throw ParseError("APD: " + what, at); }

  void expect(char c) {
    if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  template <typename Pred>
  std::string_view take_while(Pred p) {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && p(s_[pos_])) ++pos_;
    return s_.substr(start, pos_ - start);
  }

  std::uint64_t parse_integer(std::string_view tok, std::size_t at) const {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size())
      fail("expected integer, got '" + std::string(tok) + "'", at);
    return v;
  }

  void parse_pairs(Layer layer, PacketDescription& pkt) {
    for (;;) {
      const std::size_t key_start = pos_;
      const auto key = take_while([](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; });
      if (key.empty()) fail("expected field name", key_start);
      expect('=');
      const std::size_t value_start = pos_;
      const auto value = take_while([](char c) { return c != ',' && c != '}'; });

      if (layer == Layer::tcp && key == "options") {
        if (!pkt.options.empty()) fail("duplicate options entry", key_start);
        parse_options(value, value_start, pkt.options);
      } else {
        const auto& table = layer == Layer::ip ? std::span<const FieldDescriptor>(kIpFields)
                                               : std::span<const FieldDescriptor>(kTcpFields);
        auto it = std::find_if(table.begin(), table.end(), [&](const FieldDescriptor& d) { return d.name == key; });
        if (it == table.end()) fail("unknown field " + std::string(layer_name(layer)) + "." + std::string(key), key_start);
        const auto index = static_cast<std::size_t>(it - table.begin());
        auto& slot = layer == Layer::ip ? pkt.ip[index] : pkt.tcp[index];
        if (slot) fail("duplicate field " + std::string(key), key_start);

        FieldValue fv;
        if (value == "DUMMY") {
          if (!dummy_allowed(layer, index)) fail(qualified(*it) + " cannot hold DUMMY", value_start);
          fv = FieldValue::placeholder();
        } else if (is_address(layer, index) && value.find('.') != std::string_view::npos) {
          auto addr = parse_ipv4(value);
          if (!addr) fail("malformed IPv4 address '" + std::string(value) + "'", value_start);
          fv = FieldValue::of(*addr);
        } else {
          const auto v = parse_integer(value, value_start);
          if (v > it->max_value()) fail(qualified(*it) + " out of domain", value_start);
          fv = FieldValue::of(static_cast<std::uint32_t>(v));
        }
        slot = fv;
      }
      if (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        continue;
      }
      return;
    }
  }

  void parse_options(std::string_view text, std::size_t base, std::vector<TcpOption>& out) const {
    if (text.empty()) fail("empty options list", base);
    std::size_t i = 0;
    for (;;) {
      const std::size_t end = std::min(text.find(';', i), text.size());
      const auto item = text.substr(i, end - i);
      if (item.empty()) fail("empty option", base + i);
      TcpOption opt;
      switch (item[0]) {
        case 'W': opt.kind = OptionKind::window_scale; break;
        case 'N': opt.kind = OptionKind::nop; break;
        case 'M': opt.kind = OptionKind::mss; break;
        case 'T': opt.kind = OptionKind::timestamp; break;
        case 'E': opt.kind = OptionKind::echoed_mss; break;
        default: fail("unknown option kind '" + std::string(1, item[0]) + "'", base + i);
      }
      if (opt.kind == OptionKind::nop) {
        if (item.size() != 1) fail("N option takes no value", base + i);
      } else {
        if (item.size() < 3 || item[1] != ':') fail("option needs ':value'", base + i);
        const auto v = parse_integer(item.substr(2), base + i + 2);
        const unsigned bits = option_value_bits(opt.kind);
        if (bits < 64 && v >= (std::uint64_t{1} << bits)) fail("option value out of domain", base + i + 2);
        opt.value = static_cast<std::uint32_t>(v);
      }
      out.push_back(opt);
      if (end == text.size()) return;
      i = end + 1;
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses one APD line; an empty line yields a blank packet.
inline PacketDescription decode_apd(std::string_view line) { return detail::ApdParser(line).parse(); }

// ---------------------------------------------------------------------------
// Wire form. Unset fields take the values below; DUMMY encodes as zero.

namespace wire_defaults {
inline constexpr std::uint32_t kVersion = 4;
inline constexpr std::uint32_t kIhl = 5;
inline constexpr std::uint32_t kTtl = 64;
inline constexpr std::uint32_t kProtocol = 6;
}  // namespace wire_defaults

inline std::vector<std::uint8_t> encode_tcp_options(std::span<const TcpOption> opts) {
  std::vector<std::uint8_t> out;
  for (const auto& o : opts) {
    switch (o.kind) {
      case OptionKind::nop: out.push_back(1); break;
      case OptionKind::mss:
      case OptionKind::echoed_mss:
        out.insert(out.end(), {2, 4, static_cast<std::uint8_t>(o.value >> 8), static_cast<std::uint8_t>(o.value)});
        break;
      case OptionKind::window_scale: out.insert(out.end(), {3, 3, static_cast<std::uint8_t>(o.value)}); break;
      case OptionKind::timestamp:
        out.insert(out.end(), {8, 10, static_cast<std::uint8_t>(o.value >> 24), static_cast<std::uint8_t>(o.value >> 16),
                               static_cast<std::uint8_t>(o.value >> 8), static_cast<std::uint8_t>(o.value), 0, 0, 0, 0});
        break;
    }
  }
  // end-of-list padding up to the next 32-bit word
  while (out.size() % 4) out.push_back(0);
  return out;
}

namespace detail {

inline void put16(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  b[at] = static_cast<std::uint8_t>(v >> 8);
  b[at + 1] = static_cast<std::uint8_t>(v);
}
inline void put32(std::vector<std::uint8_t>& b, std::size_t at, std::uint32_t v) {
  put16(b, at, v >> 16);
  put16(b, at + 2, v & 0xFFFF);
}
inline std::uint32_t get16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) << 8 | b[at + 1];
}
inline std::uint32_t get32(std::span<const std::uint8_t> b, std::size_t at) {
  return get16(b, at) << 16 | get16(b, at + 2);
}

}  // namespace detail

inline constexpr std::size_t kIpHeaderBytes = 20;
inline constexpr std::size_t kTcpHeaderBytes = 20;

/// Raw IPv4+TCP bytes. The IP header is always 20 bytes; lengths, offset and
/// checksums are written as given (or zero when unset). Use fill_defaults
/// first to obtain a packet that will be accepted by a peer.
inline std::vector<std::uint8_t> to_wire(const PacketDescription& pkt) {
  using detail::put16;
  using detail::put32;
  const auto opts = encode_tcp_options(pkt.options);
  std::vector<std::uint8_t> b(kIpHeaderBytes + kTcpHeaderBytes + opts.size(), 0);

  b[0] = static_cast<std::uint8_t>(pkt.value_or(IpField::version, wire_defaults::kVersion) << 4 |
                                   pkt.value_or(IpField::ihl, wire_defaults::kIhl));
  b[1] = static_cast<std::uint8_t>(pkt.value_or(IpField::tos, 0));
  put16(b, 2, pkt.value_or(IpField::len, 0));
  put16(b, 4, pkt.value_or(IpField::id, 0));
  put16(b, 6, pkt.value_or(IpField::flags, 0) << 13 | pkt.value_or(IpField::fragoff, 0));
  b[8] = static_cast<std::uint8_t>(pkt.value_or(IpField::ttl, wire_defaults::kTtl));
  b[9] = static_cast<std::uint8_t>(pkt.value_or(IpField::protocol, wire_defaults::kProtocol));
  put16(b, 10, pkt.value_or(IpField::cksum, 0));
  put32(b, 12, pkt.value_or(IpField::saddr, 0));
  put32(b, 16, pkt.value_or(IpField::daddr, 0));

  const std::size_t t = kIpHeaderBytes;
  put16(b, t + 0, pkt.value_or(TcpField::sport, 0));
  put16(b, t + 2, pkt.value_or(TcpField::dport, 0));
  put32(b, t + 4, pkt.value_or(TcpField::seq, 0));
  put32(b, t + 8, pkt.value_or(TcpField::ack, 0));
  // offset(4) | reserved(6) | flags(6)
  put16(b, t + 12, pkt.value_or(TcpField::offset, 0) << 12 | pkt.value_or(TcpField::flags, 0));
  put16(b, t + 14, pkt.value_or(TcpField::window, 0));
  put16(b, t + 16, pkt.value_or(TcpField::cksum, 0));
  put16(b, t + 18, pkt.value_or(TcpField::urgent, 0));
  std::copy(opts.begin(), opts.end(), b.begin() + static_cast<std::ptrdiff_t>(t + kTcpHeaderBytes));
  return b;
}

/// Parses raw IPv4+TCP bytes into a fully populated description. MSS, window
/// scale, timestamp and NOP options are kept; other kinds are skipped.
inline PacketDescription from_wire(std::span<const std::uint8_t> b) {
  using detail::get16;
  using detail::get32;
  if (b.size() < kIpHeaderBytes) throw ParseError("wire: truncated IPv4 header", b.size());
  PacketDescription p;
  const std::size_t ihl = b[0] & 0x0F;
  if (ihl < 5 || ihl * 4 > b.size()) throw ParseError("wire: bad IHL", 0);
  p.set(IpField::version, b[0] >> 4).set(IpField::ihl, static_cast<std::uint32_t>(ihl));
  p.set(IpField::tos, b[1]).set(IpField::len, get16(b, 2)).set(IpField::id, get16(b, 4));
  p.set(IpField::flags, get16(b, 6) >> 13).set(IpField::fragoff, get16(b, 6) & 0x1FFF);
  p.set(IpField::ttl, b[8]).set(IpField::protocol, b[9]).set(IpField::cksum, get16(b, 10));
  p.set(IpField::saddr, get32(b, 12)).set(IpField::daddr, get32(b, 16));

  const std::size_t t = ihl * 4;
  if (b.size() < t + kTcpHeaderBytes) throw ParseError("wire: truncated TCP header", b.size());
  p.set(TcpField::sport, get16(b, t)).set(TcpField::dport, get16(b, t + 2));
  p.set(TcpField::seq, get32(b, t + 4)).set(TcpField::ack, get32(b, t + 8));
  const std::uint32_t off_flags = get16(b, t + 12);
  const std::size_t offset = off_flags >> 12;
  p.set(TcpField::offset, static_cast<std::uint32_t>(offset)).set(TcpField::flags, off_flags & 0x3F);
  p.set(TcpField::window, get16(b, t + 14)).set(TcpField::cksum, get16(b, t + 16)).set(TcpField::urgent, get16(b, t + 18));

  if (offset < 5 || t + offset * 4 > b.size()) throw ParseError("wire: bad TCP data offset", t + 12);
  std::size_t i = t + kTcpHeaderBytes;
  const std::size_t end = t + offset * 4;
  while (i < end) {
    const std::uint8_t kind = b[i];
    if (kind == 0) break;
    if (kind == 1) {
      p.options.push_back(TcpOption::nop());
      ++i;
      continue;
    }
    if (i + 1 >= end || b[i + 1] < 2 || i + b[i + 1] > end) throw ParseError("wire: malformed TCP option", i);
    const std::size_t len = b[i + 1];
    if (kind == 2 && len == 4) p.options.push_back({OptionKind::mss, get16(b, i + 2)});
    if (kind == 3 && len == 3) p.options.push_back({OptionKind::window_scale, b[i + 2]});
    if (kind == 8 && len == 10) p.options.push_back({OptionKind::timestamp, get32(b, i + 2)});
    i += len;
  }
  return p;
}

/// Ones-complement checksum of the IPv4 header bytes of `wire`.
inline std::uint16_t ip_header_checksum(std::span<const std::uint8_t> wire) {
  std::vector<std::uint8_t> hdr(wire.begin(), wire.begin() + kIpHeaderBytes);
  hdr[10] = hdr[11] = 0;
  InternetChecksum c;
  c.update(hdr);
  return c.finish();
}

/// TCP checksum over the pseudo header and the segment of `wire`.
inline std::uint16_t tcp_segment_checksum(std::span<const std::uint8_t> wire) {
  std::vector<std::uint8_t> seg(wire.begin() + kIpHeaderBytes, wire.end());
  seg[16] = seg[17] = 0;
  const std::size_t len = seg.size();
  const std::uint8_t pseudo[12] = {wire[12], wire[13], wire[14], wire[15], wire[16], wire[17], wire[18], wire[19],
                                   0, 6, static_cast<std::uint8_t>(len >> 8), static_cast<std::uint8_t>(len)};
  InternetChecksum c;
  c.update(pseudo);
  c.update(seg);
  return c.finish();
}

/// Replaces DUMMY markers with the real endpoints, completes unset
/// computable fields (version, ihl, protocol, total length, data offset) and
/// recomputes both checksums. Every other field is left as it was.
inline PacketDescription fill_defaults(PacketDescription pkt, std::uint32_t source, std::uint32_t target,
                                       std::uint16_t open_port) {
  if (pkt.is_blank) return pkt;
  const auto replace = [](auto& slot, std::uint32_t v) {
    if (slot && slot->dummy) slot = FieldValue::of(v);
  };
  replace(pkt[IpField::saddr], source);
  replace(pkt[IpField::daddr], target);
  replace(pkt[TcpField::dport], open_port);

  const auto opts_len = static_cast<std::uint32_t>(encode_tcp_options(pkt.options).size());
  const auto complete = [](auto& slot, std::uint32_t v) {
    if (!slot) slot = FieldValue::of(v);
  };
  complete(pkt[IpField::version], wire_defaults::kVersion);
  complete(pkt[IpField::ihl], wire_defaults::kIhl);
  complete(pkt[IpField::protocol], wire_defaults::kProtocol);
  complete(pkt[IpField::len], static_cast<std::uint32_t>(kIpHeaderBytes + kTcpHeaderBytes) + opts_len);
  complete(pkt[TcpField::offset], (static_cast<std::uint32_t>(kTcpHeaderBytes) + opts_len) / 4);

  auto wire = to_wire(pkt);
  pkt.set(IpField::cksum, ip_header_checksum(wire));
  wire = to_wire(pkt);
  pkt.set(TcpField::cksum, tcp_segment_checksum(wire));
  return pkt;
}

}  // namespace fuzzprint
