#pragma once

// Declarative behavior tables for simulated targets.
//
// Text format: `key = value` lines, `#` comments. A TCP personality may
// contain `rule:` blocks; every key after a `rule:` line belongs to that
// rule until the next `rule:`.
//
//   kind = tcp
//   name = tcp-alpha
//   open_ports = 22, 80
//   default = rst                 # or: silent
//   ttl = 64
//   isn = 1000
//   rule:
//     match.flags_all = S         # letters UAPRSF or an integer
//     match.flags_none = AR
//     match.port = open           # open | closed | any
//     match.window = any          # zero | nonzero | any
//     match.options = present     # present | absent | any
//     respond = packet            # or: silent
//     flags = SA
//     window = 5840
//     ack = S++                   # O | S | S++
//     options = M:1460;N;W:7      # APD option list, or '-' for none
//     df = 1
//     tos = 0
//
//   kind = ftp
//   name = ftp-alpha
//   greeting = alpha FTP ready    # or: none
//   allow_anonymous = 1
//   overlong_threshold = 14
//   overlong_code = 501           # optional
//   default_code = 500
//   case_sensitive = 0
//   multiline = HELP, FEAT, STAT
//   close_after_errors = 0        # 0 = never
//   reply.SITE = 200
//   reply.SITE.overlong = 501     # class suffix: none | normal | overlong
//   reply.NOOP = silent           # no reply at all

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fuzzprint/backend.hpp"
#include "fuzzprint/corpus.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/packet.hpp"

namespace fuzzprint {

namespace detail {
/// Values must survive the line format: no '#', no control characters, no
/// surrounding whitespace.
inline void check_text_value(std::string_view key, std::string_view v) {
  if (v.empty()) throw DomainError("personality " + std::string(key) + " is empty");
  if (v.front() == ' ' || v.back() == ' ') throw DomainError("personality " + std::string(key) + " has surrounding spaces");
  for (char c : v)
    if (c == '#' || static_cast<unsigned char>(c) < 0x20 || c == 0x7F)
      throw DomainError("personality " + std::string(key) + " contains '#' or control characters");
}
}  // namespace detail

enum class PortClass { any, open, closed };
enum class WindowClass { any, zero, nonzero };
enum class OptionsClass { any, present, absent };
enum class AckMode { zero, same, plus_one };

struct ProbeMatch {
  std::uint32_t flags_all = 0;   // every bit must be set in the probe
  std::uint32_t flags_none = 0;  // no bit may be set in the probe
  PortClass port = PortClass::any;
  WindowClass window = WindowClass::any;
  OptionsClass options = OptionsClass::any;

  friend bool operator==(const ProbeMatch&, const ProbeMatch&) = default;
};

struct ResponseTemplate {
  bool silent = false;
  std::uint32_t flags = 0;
  std::uint32_t window = 0;
  AckMode ack = AckMode::plus_one;
  std::vector<TcpOption> options;
  bool df = false;
  std::uint32_t tos = 0;

  friend bool operator==(const ResponseTemplate&, const ResponseTemplate&) = default;
};

struct StackRule {
  ProbeMatch match;
  ResponseTemplate respond;

  friend bool operator==(const StackRule&, const StackRule&) = default;
};

enum class DefaultAction { rst, silent };

struct StackPersonality {
  std::string name;
  std::set<std::uint16_t> open_ports;
  std::vector<StackRule> rules;  // first match wins
  DefaultAction default_action = DefaultAction::rst;
  std::uint32_t ttl = 64;
  std::uint32_t isn = 1000;

  friend bool operator==(const StackPersonality&, const StackPersonality&) = default;
};

/// Answer to anything no rule matched when the default action is rst.
inline ResponseTemplate default_rst_template() {
  ResponseTemplate t;
  t.flags = tcp_flags::kRst | tcp_flags::kAck;
  t.ack = AckMode::plus_one;
  return t;
}

inline bool rule_matches(const ProbeMatch& m, const PacketDescription& probe, bool port_open) {
  const auto flags = probe.value_or(TcpField::flags, 0);
  if ((flags & m.flags_all) != m.flags_all) return false;
  if (flags & m.flags_none) return false;
  if (m.port == PortClass::open && !port_open) return false;
  if (m.port == PortClass::closed && port_open) return false;
  const auto window = probe.value_or(TcpField::window, 0);
  if (m.window == WindowClass::zero && window != 0) return false;
  if (m.window == WindowClass::nonzero && window == 0) return false;
  if (m.options == OptionsClass::present && probe.options.empty()) return false;
  if (m.options == OptionsClass::absent && !probe.options.empty()) return false;
  return true;
}

/// Template that governs the reply to `probe`, or nullopt for silence.
inline std::optional<ResponseTemplate> select_template(const StackPersonality& p, const PacketDescription& probe) {
  const auto flags = probe.value_or(TcpField::flags, 0);
  // a reset is never answered
  if ((flags & tcp_flags::kRst) && !(flags & tcp_flags::kSyn)) return std::nullopt;
  const bool open = p.open_ports.count(static_cast<std::uint16_t>(probe.value_or(TcpField::dport, 0))) > 0;
  for (const auto& r : p.rules)
    if (rule_matches(r.match, probe, open)) {
      if (r.respond.silent) return std::nullopt;
      return r.respond;
    }
  if (p.default_action == DefaultAction::silent) return std::nullopt;
  return default_rst_template();
}

/// Reply of the simulated stack; a blank packet means silence.
inline PacketDescription respond_tcp(const StackPersonality& p, const PacketDescription& probe) {
  const auto t = select_template(p, probe);
  if (!t) return PacketDescription::blank();
  const auto probe_seq = probe.value_or(TcpField::seq, 0);
  PacketDescription r;
  r.set(IpField::tos, t->tos)
      .set(IpField::flags, t->df ? ip_flags::kDontFragment : 0)
      .set(IpField::ttl, p.ttl)
      .set(IpField::protocol, 6)
      .set(IpField::saddr, probe.value_or(IpField::daddr, 0))
      .set(IpField::daddr, probe.value_or(IpField::saddr, 0));
  std::uint32_t ack = 0;
  switch (t->ack) {
    case AckMode::zero: ack = 0; break;
    case AckMode::same: ack = probe_seq; break;
    case AckMode::plus_one: ack = probe_seq + 1; break;
  }
  r.set(TcpField::sport, probe.value_or(TcpField::dport, 0))
      .set(TcpField::dport, probe.value_or(TcpField::sport, 0))
      .set(TcpField::seq, p.isn)
      .set(TcpField::ack, ack)
      .set(TcpField::flags, t->flags)
      .set(TcpField::window, t->window);
  r.options = t->options;
  for (auto& o : r.options) {
    if (o.kind != OptionKind::echoed_mss) continue;
    const auto mss = std::find_if(probe.options.begin(), probe.options.end(),
                                  [](const TcpOption& x) { return x.kind == OptionKind::mss; });
    if (mss != probe.options.end()) o.value = mss->value;
  }
  return r;
}

/// Scanner-style SYN to `port`.
inline PacketDescription canonical_syn(std::uint16_t port) {
  PacketDescription probe;
  probe.set(TcpField::dport, port).set(TcpField::flags, tcp_flags::kSyn).set(TcpField::window, kScanWindow);
  return probe;
}

/// A SYN to every open port must be answered with SYN+ACK.
inline void validate(const StackPersonality& p) {
  detail::check_text_value("name", p.name);
  if (p.ttl > 255) throw DomainError("ttl out of range");
  for (const auto& r : p.rules) {
    if (r.match.flags_all > 63 || r.match.flags_none > 63 || r.respond.flags > 63) throw DomainError("flags out of range");
    if (r.respond.window > 0xFFFF || r.respond.tos > 0xFF) throw DomainError("window/tos out of range");
  }
  for (auto port : p.open_ports) {
    const auto t = select_template(p, canonical_syn(port));
    const std::uint32_t sa = tcp_flags::kSyn | tcp_flags::kAck;
    if (!t || (t->flags & sa) != sa)
      throw DomainError("personality " + p.name + ": SYN to open port " + std::to_string(port) + " is not answered with SYN+ACK");
  }
}

// ---------------------------------------------------------------------------

enum class LengthClass { any, none, normal, overlong };

inline constexpr std::string_view length_class_name(LengthClass c) noexcept {
  switch (c) {
    case LengthClass::any: return "any";
    case LengthClass::none: return "none";
    case LengthClass::normal: return "normal";
    case LengthClass::overlong: return "overlong";
  }
  return "?";
}

struct ReplyKey {
  std::string command;
  LengthClass length = LengthClass::any;

  friend auto operator<=>(const ReplyKey&, const ReplyKey&) = default;
};

/// Status code, or nullopt for "send nothing".
using ReplyCode = std::optional<int>;

struct FtpPersonality {
  std::string name;
  std::optional<std::string> greeting;  // banner text; nullopt = banner disabled
  bool allow_anonymous = true;
  std::map<ReplyKey, ReplyCode> replies;
  std::size_t overlong_threshold = 64;
  std::optional<int> overlong_code;
  int default_code = 500;
  bool case_sensitive = false;
  std::set<std::string> multiline;        // commands answered with a multi-line reply
  std::size_t close_after_errors = 0;     // 0 = never; else 421 + close after that many 5xx replies

  friend bool operator==(const FtpPersonality&, const FtpPersonality&) = default;
};

inline bool valid_code(int c) noexcept { return c >= 100 && c <= 599; }

inline void validate(const FtpPersonality& p) {
  detail::check_text_value("name", p.name);
  if (p.greeting) detail::check_text_value("greeting", *p.greeting);
  if (!valid_code(p.default_code)) throw DomainError("default_code is not a three-digit status code");
  if (p.overlong_code && !valid_code(*p.overlong_code)) throw DomainError("overlong_code is not a three-digit status code");
  for (const auto& [k, v] : p.replies)
    if (v && !valid_code(*v)) throw DomainError("reply." + k.command + " is not a three-digit status code");
}

struct ParsedProbe {
  std::string command;
  std::string argument;
};

inline ParsedProbe split_probe(std::string_view line, bool case_sensitive) {
  const auto sp = line.find(' ');
  ParsedProbe p;
  p.command = std::string(line.substr(0, sp));
  if (sp != std::string_view::npos) p.argument = std::string(line.substr(sp + 1));
  if (!case_sensitive)
    std::transform(p.command.begin(), p.command.end(), p.command.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return p;
}

inline LengthClass classify_argument(const FtpPersonality& p, std::string_view argument) {
  if (argument.empty()) return LengthClass::none;
  return argument.size() > p.overlong_threshold ? LengthClass::overlong : LengthClass::normal;
}

/// Table lookup: exact (command, class), then the overlong code, then
/// (command, any), then default_code.
inline ReplyCode respond_ftp(const FtpPersonality& p, std::string_view line) {
  const auto probe = split_probe(line, p.case_sensitive);
  const auto cls = classify_argument(p, probe.argument);
  if (auto it = p.replies.find({probe.command, cls}); it != p.replies.end()) return it->second;
  if (cls == LengthClass::overlong && p.overlong_code) return p.overlong_code;
  if (auto it = p.replies.find({probe.command, LengthClass::any}); it != p.replies.end()) return it->second;
  return p.default_code;
}

// ---------------------------------------------------------------------------
// Text format

using Personality = std::variant<StackPersonality, FtpPersonality>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::uint32_t parse_uint(const std::string& v, std::size_t at, std::uint64_t max) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size() || out > max)
    throw ParseError("personality: bad number '" + v + "'", at);
  return static_cast<std::uint32_t>(out);
}

inline bool parse_bool(const std::string& v, std::size_t at) {
  if (v == "1" || v == "yes" || v == "true" || v == "Y") return true;
  if (v == "0" || v == "no" || v == "false" || v == "N") return false;
  throw ParseError("personality: bad boolean '" + v + "'", at);
}

inline std::uint32_t parse_flags(const std::string& v, std::size_t at) {
  if (!v.empty() && std::isdigit(static_cast<unsigned char>(v[0]))) return parse_uint(v, at, 63);
  std::uint32_t f = 0;
  for (char c : v) {
    switch (c) {
      case 'U': f |= tcp_flags::kUrg; break;
      case 'A': f |= tcp_flags::kAck; break;
      case 'P': f |= tcp_flags::kPsh; break;
      case 'R': f |= tcp_flags::kRst; break;
      case 'S': f |= tcp_flags::kSyn; break;
      case 'F': f |= tcp_flags::kFin; break;
      default: throw ParseError("personality: bad flag letter in '" + v + "'", at);
    }
  }
  return f;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= v.size()) {
    const auto c = std::min(v.find(',', i), v.size());
    auto item = trim(std::string_view(v).substr(i, c - i));
    if (!item.empty()) out.push_back(item);
    i = c + 1;
  }
  return out;
}

inline std::string options_to_text(const std::vector<TcpOption>& opts) {
  if (opts.empty()) return "-";
  PacketDescription p;
  p.options = opts;
  const auto apd = encode_apd(p);  // tcp{options=...}
  const auto eq = apd.find('=');
  return apd.substr(eq + 1, apd.size() - eq - 2);
}

inline std::vector<TcpOption> options_from_text(const std::string& v, std::size_t at) {
  if (v == "-" || v.empty()) return {};
  try {
    return decode_apd("tcp{options=" + v + "}").options;
  } catch (const ParseError& e) {
    throw ParseError(std::string("personality: bad options: ") + e.what(), at);
  }
}

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t offset;
};

}  // namespace detail

inline Personality parse_personality(std::string_view text) {
  using namespace detail;
  // tokenize: (key, value) pairs and rule markers
  std::vector<KeyValue> items;
  std::size_t offset = 0;
  for (const auto& raw : split_lines(text)) {
    const std::size_t at = offset;
    offset += raw.size() + 1;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line == "rule:") {
      items.push_back({"rule:", "", at});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("personality: expected 'key = value'", at);
    items.push_back({trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), at});
  }
  if (items.empty() || items[0].key != "kind") throw ParseError("personality: first entry must be 'kind'", 0);

  if (items[0].value == "tcp") {
    StackPersonality p;
    StackRule* rule = nullptr;
    for (std::size_t i = 1; i < items.size(); ++i) {
      const auto& [k, v, at] = items[i];
      if (k == "rule:") {
        p.rules.emplace_back();
        rule = &p.rules.back();
        continue;
      }
      if (!rule) {
        if (k == "name") p.name = v;
        else if (k == "open_ports") {
          for (const auto& port : split_list(v)) p.open_ports.insert(static_cast<std::uint16_t>(parse_uint(port, at, 0xFFFF)));
        } else if (k == "default") {
          if (v == "rst") p.default_action = DefaultAction::rst;
          else if (v == "silent") p.default_action = DefaultAction::silent;
          else throw ParseError("personality: default must be rst or silent", at);
        } else if (k == "ttl") p.ttl = parse_uint(v, at, 255);
        else if (k == "isn") p.isn = parse_uint(v, at, 0xFFFFFFFFu);
        else throw ParseError("personality: unknown key '" + k + "'", at);
        continue;
      }
      auto& m = rule->match;
      auto& r = rule->respond;
      if (k == "match.flags_all") m.flags_all = parse_flags(v, at);
      else if (k == "match.flags_none") m.flags_none = parse_flags(v, at);
      else if (k == "match.port") {
        if (v == "any") m.port = PortClass::any;
        else if (v == "open") m.port = PortClass::open;
        else if (v == "closed") m.port = PortClass::closed;
        else throw ParseError("personality: match.port must be open, closed or any", at);
      } else if (k == "match.window") {
        if (v == "any") m.window = WindowClass::any;
        else if (v == "zero") m.window = WindowClass::zero;
        else if (v == "nonzero") m.window = WindowClass::nonzero;
        else throw ParseError("personality: match.window must be zero, nonzero or any", at);
      } else if (k == "match.options") {
        if (v == "any") m.options = OptionsClass::any;
        else if (v == "present") m.options = OptionsClass::present;
        else if (v == "absent") m.options = OptionsClass::absent;
        else throw ParseError("personality: match.options must be present, absent or any", at);
      } else if (k == "respond") {
        if (v == "silent") r.silent = true;
        else if (v == "packet") r.silent = false;
        else throw ParseError("personality: respond must be packet or silent", at);
      } else if (k == "flags") r.flags = parse_flags(v, at);
      else if (k == "window") r.window = parse_uint(v, at, 0xFFFF);
      else if (k == "ack") {
        if (v == "O") r.ack = AckMode::zero;
        else if (v == "S") r.ack = AckMode::same;
        else if (v == "S++") r.ack = AckMode::plus_one;
        else throw ParseError("personality: ack must be O, S or S++", at);
      } else if (k == "options") r.options = options_from_text(v, at);
      else if (k == "df") r.df = parse_bool(v, at);
      else if (k == "tos") r.tos = parse_uint(v, at, 0xFF);
      else throw ParseError("personality: unknown rule key '" + k + "'", at);
    }
    validate(p);
    return p;
  }

  if (items[0].value == "ftp") {
    FtpPersonality p;
    for (std::size_t i = 1; i < items.size(); ++i) {
      const auto& [k, v, at] = items[i];
      if (k == "rule:") throw ParseError("personality: rule blocks are for tcp personalities", at);
      if (k == "name") p.name = v;
      else if (k == "greeting") {
        if (v == "none") p.greeting.reset();
        else p.greeting = v;
      } else if (k == "allow_anonymous") p.allow_anonymous = parse_bool(v, at);
      else if (k == "overlong_threshold") p.overlong_threshold = parse_uint(v, at, 0xFFFFFFFFu);
      else if (k == "overlong_code") p.overlong_code = static_cast<int>(parse_uint(v, at, 599));
      else if (k == "default_code") p.default_code = static_cast<int>(parse_uint(v, at, 599));
      else if (k == "case_sensitive") p.case_sensitive = parse_bool(v, at);
      else if (k == "close_after_errors") p.close_after_errors = parse_uint(v, at, 0xFFFFFFFFu);
      else if (k == "multiline") {
        for (auto& c : split_list(v)) p.multiline.insert(c);
      } else if (k.rfind("reply.", 0) == 0) {
        ReplyKey key;
        key.command = k.substr(6);
        const auto dot = key.command.rfind('.');
        if (dot != std::string::npos) {
          const auto suffix = key.command.substr(dot + 1);
          if (suffix == "none") key.length = LengthClass::none;
          else if (suffix == "normal") key.length = LengthClass::normal;
          else if (suffix == "overlong") key.length = LengthClass::overlong;
          else throw ParseError("personality: unknown length class '" + suffix + "'", at);
          key.command.erase(dot);
        }
        if (key.command.empty()) throw ParseError("personality: empty command in reply key", at);
        ReplyCode code;
        if (v != "silent") code = static_cast<int>(parse_uint(v, at, 599));
        p.replies[key] = code;
      } else {
        throw ParseError("personality: unknown key '" + k + "'", at);
      }
    }
    validate(p);
    return p;
  }
  throw ParseError("personality: kind must be tcp or ftp", items[0].offset);
}

inline std::string format_personality(const StackPersonality& p) {
  std::ostringstream os;
  os << "kind = tcp\nname = " << p.name << "\nopen_ports = ";
  bool first = true;
  for (auto port : p.open_ports) {
    os << (first ? "" : ", ") << port;
    first = false;
  }
  os << "\ndefault = " << (p.default_action == DefaultAction::rst ? "rst" : "silent") << "\nttl = " << p.ttl
     << "\nisn = " << p.isn << "\n";
  static constexpr const char* kPort[] = {"any", "open", "closed"};
  static constexpr const char* kWindow[] = {"any", "zero", "nonzero"};
  static constexpr const char* kOptions[] = {"any", "present", "absent"};
  static constexpr const char* kAck[] = {"O", "S", "S++"};
  for (const auto& r : p.rules) {
    os << "rule:\n"
       << "  match.flags_all = " << r.match.flags_all << "\n"
       << "  match.flags_none = " << r.match.flags_none << "\n"
       << "  match.port = " << kPort[static_cast<int>(r.match.port)] << "\n"
       << "  match.window = " << kWindow[static_cast<int>(r.match.window)] << "\n"
       << "  match.options = " << kOptions[static_cast<int>(r.match.options)] << "\n";
    if (r.respond.silent) {
      os << "  respond = silent\n";
    }
    os << "  flags = " << r.respond.flags << "\n"
       << "  window = " << r.respond.window << "\n"
       << "  ack = " << kAck[static_cast<int>(r.respond.ack)] << "\n"
       << "  options = " << detail::options_to_text(r.respond.options) << "\n"
       << "  df = " << (r.respond.df ? 1 : 0) << "\n"
       << "  tos = " << r.respond.tos << "\n";
  }
  return os.str();
}

inline std::string format_personality(const FtpPersonality& p) {
  std::ostringstream os;
  os << "kind = ftp\nname = " << p.name << "\ngreeting = " << (p.greeting ? *p.greeting : "none")
     << "\nallow_anonymous = " << (p.allow_anonymous ? 1 : 0) << "\noverlong_threshold = " << p.overlong_threshold
     << "\n";
  if (p.overlong_code) os << "overlong_code = " << *p.overlong_code << "\n";
  os << "default_code = " << p.default_code << "\ncase_sensitive = " << (p.case_sensitive ? 1 : 0)
     << "\nclose_after_errors = " << p.close_after_errors << "\n";
  if (!p.multiline.empty()) {
    os << "multiline = ";
    bool first = true;
    for (const auto& c : p.multiline) {
      os << (first ? "" : ", ") << c;
      first = false;
    }
    os << "\n";
  }
  for (const auto& [k, v] : p.replies) {
    os << "reply." << k.command;
    if (k.length != LengthClass::any) os << "." << length_class_name(k.length);
    os << " = ";
    if (v) os << *v;
    else os << "silent";
    os << "\n";
  }
  return os.str();
}

inline std::string format_personality(const Personality& p) {
  return std::visit([](const auto& x) { return format_personality(x); }, p);
}

inline Personality load_personality(const std::string& path) { return parse_personality(read_text_file(path)); }

}  // namespace fuzzprint
