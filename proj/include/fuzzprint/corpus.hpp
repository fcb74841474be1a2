#pragma once

// Fuzz corpora: the ordered probe list shared by every fingerprinting run.
//
// File layout (LF line endings):
//   #corpus <os|ftp> <checksum>
//   #parent <checksum>            optional, present on reduced corpora
//   <probe 0>
//   <probe 1>
//   ...
//
// FTP probes are stored with bytes outside 0x21..0x7E (other than space),
// backslash, and a leading '#' escaped as \xNN.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzprint/checksum.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/packet.hpp"

namespace fuzzprint {

enum class Kind { os, ftp };

inline constexpr std::string_view kind_name(Kind k) noexcept { return k == Kind::os ? "os" : "ftp"; }

inline std::optional<Kind> parse_kind(std::string_view s) noexcept {
  if (s == "os") return Kind::os;
  if (s == "ftp") return Kind::ftp;
  return std::nullopt;
}

/// Content hash of a probe list; also the corpus version stamp.
inline std::string corpus_checksum(Kind kind, const std::vector<std::string>& probes) {
  Fnv1a64 h;
  h.update(kind_name(kind));
  h.update("\n");
  for (const auto& p : probes) {
    h.update(p);
    h.update("\n");
  }
  return to_hex64(h.digest());
}

struct Corpus {
  Kind kind = Kind::os;
  std::vector<std::string> probes;  // unescaped probe text
  std::optional<std::string> parent_checksum;

  std::string checksum() const { return corpus_checksum(kind, probes); }
  std::size_t size() const noexcept { return probes.size(); }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

inline std::string escape_probe(std::string_view probe) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const auto c = static_cast<unsigned char>(probe[i]);
    const bool printable = c >= 0x20 && c <= 0x7E;
    if (!printable || c == '\\' || (i == 0 && c == '#')) {
      out += "\\x";
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

inline std::string unescape_probe(std::string_view text, std::size_t line_no = 0) {
  const auto hex = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw ParseError("corpus line " + std::to_string(line_no) + ": bad \\x escape", line_no);
  };
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '\\') {
      out += text[i];
      continue;
    }
    if (i + 3 >= text.size()) throw ParseError("corpus line " + std::to_string(line_no) + ": truncated escape", line_no);
    if (text[i + 1] != 'x') throw ParseError("corpus line " + std::to_string(line_no) + ": bad escape", line_no);
    out += static_cast<char>(hex(text[i + 2]) << 4 | hex(text[i + 3]));
    i += 3;
  }
  return out;
}

/// Splits LF-terminated text into lines. A final line without LF is kept.
inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline std::string format_corpus(const Corpus& c) {
  std::string out = "#corpus " + std::string(kind_name(c.kind)) + " " + c.checksum() + "\n";
  if (c.parent_checksum) out += "#parent " + *c.parent_checksum + "\n";
  for (const auto& p : c.probes) {
    out += c.kind == Kind::ftp ? escape_probe(p) : p;
    out += '\n';
  }
  return out;
}

/// Parses a corpus file and verifies its stamp against the content.
inline Corpus parse_corpus(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("corpus: missing header", 0);
  std::istringstream header(lines[0]);
  std::string tag, kind_s, stamp, extra;
  header >> tag >> kind_s >> stamp;
  if (tag != "#corpus" || stamp.empty() || (header >> extra)) throw ParseError("corpus: malformed header line", 0);
  const auto kind = parse_kind(kind_s);
  if (!kind) throw ParseError("corpus: unknown kind '" + kind_s + "'", 0);
  if (!is_hex64(stamp)) throw IntegrityError("corpus: malformed checksum '" + stamp + "'");

  Corpus c;
  c.kind = *kind;
  std::size_t first = 1;
  if (lines.size() > 1 && lines[1].rfind("#parent ", 0) == 0) {
    const auto parent = lines[1].substr(8);
    if (!is_hex64(parent)) throw IntegrityError("corpus: malformed parent checksum");
    c.parent_checksum = parent;
    first = 2;
  }
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (c.kind == Kind::ftp) {
      c.probes.push_back(unescape_probe(lines[i], i + 1));
      continue;
    }
    // OS probes must be well-formed, non-blank APD
    try {
      if (decode_apd(lines[i]).is_blank) throw ParseError("empty probe", 0);
    } catch (const ParseError& e) {
      throw ParseError("corpus line " + std::to_string(i + 1) + ": " + e.what(), i + 1);
    }
    c.probes.push_back(lines[i]);
  }
  if (c.checksum() != stamp)
    throw IntegrityError("corpus: checksum mismatch (header " + stamp + ", content " + c.checksum() + ")");
  return c;
}

inline Corpus load_corpus(const std::string& path) { return parse_corpus(read_text_file(path)); }

inline void save_corpus(const std::string& path, const Corpus& c) { write_text_file(path, format_corpus(c)); }

}  // namespace fuzzprint
