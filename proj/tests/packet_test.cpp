#include <gtest/gtest.h>

#include <random>

#include "fuzzprint/packet.hpp"
#include "test_util.hpp"

using namespace fuzzprint;

namespace {

PacketDescription random_packet(std::mt19937_64& g) {
  PacketDescription p;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < kIpFieldCount; ++i) {
    if (!coin(g)) continue;
    const bool dummy_ok = i == static_cast<std::size_t>(IpField::saddr) || i == static_cast<std::size_t>(IpField::daddr);
    if (dummy_ok && coin(g))
      p.ip[i] = FieldValue::placeholder();
    else
      p.ip[i] = FieldValue::of(static_cast<std::uint32_t>(g() & kIpFields[i].max_value()));
  }
  for (std::size_t i = 0; i < kTcpFieldCount; ++i) {
    if (!coin(g)) continue;
    if (i == static_cast<std::size_t>(TcpField::dport) && coin(g))
      p.tcp[i] = FieldValue::placeholder();
    else
      p.tcp[i] = FieldValue::of(static_cast<std::uint32_t>(g() & kTcpFields[i].max_value()));
  }
  const char kinds[] = "WNMTE";
  const auto n = g() % 6;
  for (std::size_t i = 0; i < n; ++i) {
    TcpOption o;
    o.kind = static_cast<OptionKind>(kinds[g() % 5]);
    if (o.kind != OptionKind::nop) {
      const auto bits = option_value_bits(o.kind);
      o.value = static_cast<std::uint32_t>(g() & ((std::uint64_t{1} << bits) - 1));
    }
    p.options.push_back(o);
  }
  if (!p.has_fields()) p.set(TcpField::flags, tcp_flags::kSyn);
  return p;
}

}  // namespace

TEST(Apd, EncodesCanonicalOrder) {
  PacketDescription p;
  p.set(TcpField::window, 1024).set(TcpField::flags, tcp_flags::kSyn);
  p[IpField::daddr] = FieldValue::placeholder();
  p.set(IpField::ttl, 64);
  p[TcpField::dport] = FieldValue::placeholder();
  p.options = {{OptionKind::mss, 1460}, TcpOption::nop(), {OptionKind::window_scale, 7}};
  EXPECT_EQ(encode_apd(p), "ip{ttl=64,daddr=DUMMY}+tcp{dport=DUMMY,flags=2,window=1024,options=M:1460;N;W:7}");
}

TEST(Apd, DecodesResponseExample) {
  const auto p = decode_apd(
      "ip{tos=0,flags=2,ttl=64,saddr=192.0.2.10,daddr=10.0.0.1}+tcp{sport=22,dport=40001,ack=12648432,flags=18,"
      "window=5840,options=M:1460;N;W:7;N;T:5}");
  EXPECT_EQ(p.value_or(IpField::saddr, 0), 0xC000020Au);
  EXPECT_EQ(p.value_or(TcpField::flags, 0), tcp_flags::kSyn | tcp_flags::kAck);
  ASSERT_EQ(p.options.size(), 5u);
  EXPECT_EQ(option_kinds(p.options), "MNWNT");
  EXPECT_EQ(p.options[4].value, 5u);
}

TEST(Apd, EmptyLineIsBlank) {
  EXPECT_TRUE(decode_apd("").is_blank);
  EXPECT_THROW(encode_apd(PacketDescription::blank()), DomainError);
  EXPECT_THROW(encode_apd(PacketDescription{}), DomainError);
}

TEST(Apd, RejectsDummyOutsideAllowedFields) {
  EXPECT_THROW(decode_apd("tcp{sport=DUMMY}"), ParseError);
  EXPECT_THROW(decode_apd("ip{ttl=DUMMY}"), ParseError);
  EXPECT_NO_THROW(decode_apd("ip{saddr=DUMMY,daddr=DUMMY}+tcp{dport=DUMMY}"));
  PacketDescription p;
  p[TcpField::window] = FieldValue::placeholder();
  EXPECT_THROW(encode_apd(p), DomainError);
}

TEST(Apd, RejectsOutOfDomainValues) {
  EXPECT_THROW(decode_apd("tcp{flags=64}"), ParseError);
  EXPECT_THROW(decode_apd("tcp{window=65536}"), ParseError);
  EXPECT_THROW(decode_apd("ip{flags=8}"), ParseError);
  EXPECT_THROW(decode_apd("tcp{options=W:256}"), ParseError);
  EXPECT_NO_THROW(decode_apd("tcp{flags=63,window=65535}"));
  PacketDescription p;
  p.set(TcpField::flags, 64);
  EXPECT_THROW(encode_apd(p), DomainError);
}

TEST(Apd, ParseErrorsCarryOffset) {
  try {
    decode_apd("tcp{window=12x}");
    FAIL() << "no exception";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 11u);
  }
  EXPECT_THROW(decode_apd("udp{sport=1}"), ParseError);
  EXPECT_THROW(decode_apd("tcp{sport=1}+tcp{sport=2}"), ParseError);
  EXPECT_THROW(decode_apd("tcp{sport=1,sport=2}"), ParseError);
  EXPECT_THROW(decode_apd("tcp{sport=1"), ParseError);
  EXPECT_THROW(decode_apd("tcp{sport=1}+"), ParseError);
  EXPECT_THROW(decode_apd("tcp{options=}"), ParseError);
  EXPECT_THROW(decode_apd("tcp{options=N:1}"), ParseError);
  EXPECT_THROW(decode_apd("ip{saddr=1.2.3}"), ParseError);
}

TEST(Apd, RoundTripProperty) {
  std::mt19937_64 g(20240601);
  for (int i = 0; i < 5000; ++i) {
    const auto p = random_packet(g);
    const auto line = encode_apd(p);
    const auto back = decode_apd(line);
    ASSERT_EQ(back, p) << line;
    ASSERT_EQ(encode_apd(back), line);
  }
}

TEST(Apd, RandomBytesNeverCrash) {
  std::mt19937_64 g(7);
  const std::string alphabet = "iptcp{}=,+;:.DUMMYWNMTEoptions0123456789 \x01\xff";
  std::size_t parsed = 0;
  for (int i = 0; i < 20000; ++i) {
    std::string s;
    const auto len = g() % 40;
    for (std::size_t k = 0; k < len; ++k) s += alphabet[g() % alphabet.size()];
    try {
      const auto p = decode_apd(s);
      if (!p.is_blank && p.has_fields()) {
        // anything accepted must re-encode and parse back to the same packet
        ASSERT_EQ(decode_apd(encode_apd(p)), p) << s;
      }
      ++parsed;
    } catch (const ParseError& e) {
      ASSERT_LE(e.offset(), s.size()) << s;
    }
  }
  EXPECT_GT(parsed, 0u);
}

TEST(Checksum, MatchesNaiveOnesComplementSum) {
  std::mt19937_64 g(99);
  for (int i = 0; i < 2000; ++i) {
    std::vector<std::uint8_t> bytes(g() % 80);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(g());
    InternetChecksum c;
    // feed in random chunks to exercise odd-length carries
    std::size_t at = 0;
    while (at < bytes.size()) {
      const auto n = std::min<std::size_t>(bytes.size() - at, g() % 7);
      c.update(std::span<const std::uint8_t>(bytes).subspan(at, n));
      at += n;
    }
    ASSERT_EQ(c.finish(), testutil::naive_internet_checksum(bytes));
  }
}

TEST(Checksum, Rfc1071Example) {
  // Example words from RFC 1071 section 3: sum 0xDDF2, checksum 0x220D.
  const std::vector<std::uint8_t> bytes{0x00, 0x01, 0xF2, 0x03, 0xF4, 0xF5, 0xF6, 0xF7};
  InternetChecksum c;
  c.update(bytes);
  EXPECT_EQ(c.finish(), 0x220D);
}

TEST(Wire, FillDefaultsProducesValidChecksums) {
  const auto probe = decode_apd("ip{saddr=DUMMY,daddr=DUMMY}+tcp{dport=DUMMY,flags=2,window=4096,options=M:1460;N;W:3}");
  const auto full = fill_defaults(probe, 0x0A000001, 0xC000020A, 80);
  EXPECT_EQ(full.value_or(IpField::saddr, 0), 0x0A000001u);
  EXPECT_EQ(full.value_or(IpField::daddr, 0), 0xC000020Au);
  EXPECT_EQ(full.value_or(TcpField::dport, 0), 80u);
  EXPECT_EQ(full.value_or(IpField::len, 0), 48u);
  EXPECT_EQ(full.value_or(TcpField::offset, 0), 7u);
  const auto wire = to_wire(full);
  ASSERT_EQ(wire.size(), 48u);
  // a correct header sums to zero including its checksum
  EXPECT_EQ(testutil::naive_internet_checksum({wire.begin(), wire.begin() + 20}), 0);
  std::vector<std::uint8_t> pseudo{wire[12], wire[13], wire[14], wire[15], wire[16], wire[17], wire[18], wire[19], 0, 6, 0, 28};
  pseudo.insert(pseudo.end(), wire.begin() + 20, wire.end());
  EXPECT_EQ(testutil::naive_internet_checksum(pseudo), 0);
}

TEST(Wire, RoundTripThroughBytes) {
  const auto p = fill_defaults(
      decode_apd("ip{tos=16,id=7,flags=2,fragoff=0,ttl=60,saddr=1.2.3.4,daddr=5.6.7.8}+tcp{sport=22,dport=40001,seq=1,ack=2,"
                 "flags=18,window=5792,urgent=0,options=M:1460;N;N;T:77;N;W:7}"),
      0, 0, 0);
  const auto back = from_wire(to_wire(p));
  EXPECT_EQ(back, p);
}

TEST(Wire, UnalignedOptionsArePadded) {
  PacketDescription p;
  p.set(TcpField::flags, tcp_flags::kSyn);
  p.options = {{OptionKind::mss, 1460}, TcpOption::nop(), {OptionKind::window_scale, 7}, TcpOption::nop(),
               {OptionKind::timestamp, 1}};
  EXPECT_FALSE(options_word_aligned(p.options));
  const auto bytes = encode_tcp_options(p.options);
  EXPECT_EQ(bytes.size() % 4, 0u);
  EXPECT_EQ(bytes.size(), 20u);
  const auto back = from_wire(to_wire(fill_defaults(p, 1, 2, 3)));
  EXPECT_EQ(back.options, p.options);
}

TEST(Wire, TruncatedInputThrows) {
  std::vector<std::uint8_t> short_buf(10, 0x45);
  EXPECT_THROW(from_wire(short_buf), ParseError);
}

TEST(Fields, Lookup) {
  ASSERT_TRUE(find_field("tcp.window"));
  EXPECT_EQ(find_field("tcp.window")->width_bits, 16u);
  EXPECT_EQ(find_field("ip.flags")->max_value(), 7u);
  EXPECT_FALSE(find_field("tcp.bogus"));
  EXPECT_FALSE(find_field("window"));
}

TEST(Ipv4, ParseAndFormat) {
  EXPECT_EQ(parse_ipv4("192.0.2.10"), 0xC000020Au);
  EXPECT_EQ(format_ipv4(0xC000020A), "192.0.2.10");
  EXPECT_FALSE(parse_ipv4("256.0.0.1"));
  EXPECT_FALSE(parse_ipv4("1.2.3"));
  EXPECT_FALSE(parse_ipv4("1.2.3.4.5"));
  EXPECT_FALSE(parse_ipv4("a.b.c.d"));
}
