#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzprint/corpus.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/packet.hpp"

namespace fuzzprint {

/// Line n holds the response to probe n: an APD line (os), a three-digit
/// status code (ftp), or an empty string when the target stayed silent.
struct Fingerprint {
  std::string label;
  Kind kind = Kind::os;
  std::string corpus_checksum;
  std::vector<std::string> lines;

  std::size_t size() const noexcept { return lines.size(); }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

inline bool is_status_code(std::string_view s) noexcept {
  return s.size() == 3 && s[0] >= '1' && s[0] <= '5' && std::isdigit(static_cast<unsigned char>(s[1])) &&
         std::isdigit(static_cast<unsigned char>(s[2]));
}

inline void validate_label(std::string_view label) {
  if (label.empty()) throw DomainError("fingerprint label is empty");
  if (std::isspace(static_cast<unsigned char>(label.front())) || std::isspace(static_cast<unsigned char>(label.back())))
    throw DomainError("fingerprint label has leading or trailing whitespace");
  for (char c : label)
    if (static_cast<unsigned char>(c) < 0x20 || c == 0x7F) throw DomainError("fingerprint label contains control characters");
}

/// Checks record syntax for the fingerprint's kind.
inline void validate_records(const Fingerprint& fp) {
  for (std::size_t i = 0; i < fp.lines.size(); ++i) {
    const auto& line = fp.lines[i];
    if (line.empty()) continue;
    if (fp.kind == Kind::ftp) {
      if (!is_status_code(line)) throw ParseError("fingerprint record " + std::to_string(i) + " is not a status code", i);
    } else {
      (void)decode_apd(line);
    }
  }
}

inline std::string format_fingerprint(const Fingerprint& fp) {
  validate_label(fp.label);
  std::string out = "#fingerprint " + std::string(kind_name(fp.kind)) + " " + fp.label + " " + fp.corpus_checksum + "\n";
  for (const auto& l : fp.lines) {
    out += l;
    out += '\n';
  }
  return out;
}

/// Parses `#fingerprint <kind> <label> <corpus-checksum>` plus records. The
/// label may contain spaces; kind is the first token and the checksum the last.
inline Fingerprint parse_fingerprint(std::string_view text) {
  auto lines = split_lines(text);
  if (lines.empty()) throw IntegrityError("fingerprint: empty file");
  const std::string& h = lines[0];
  constexpr std::string_view kTag = "#fingerprint ";
  if (h.rfind(kTag, 0) != 0) throw IntegrityError("fingerprint: missing header");
  const std::string rest = h.substr(kTag.size());
  const auto first_sp = rest.find(' ');
  const auto last_sp = rest.rfind(' ');
  if (first_sp == std::string::npos || last_sp == first_sp) throw IntegrityError("fingerprint: malformed header");
  const auto kind = parse_kind(rest.substr(0, first_sp));
  if (!kind) throw IntegrityError("fingerprint: unknown kind in header");
  Fingerprint fp;
  fp.kind = *kind;
  fp.label = rest.substr(first_sp + 1, last_sp - first_sp - 1);
  fp.corpus_checksum = rest.substr(last_sp + 1);
  if (!is_hex64(fp.corpus_checksum)) throw IntegrityError("fingerprint: malformed corpus checksum in header");
  try {
    validate_label(fp.label);
  } catch (const DomainError& e) {
    throw IntegrityError(std::string("fingerprint: ") + e.what());
  }
  fp.lines.assign(lines.begin() + 1, lines.end());
  validate_records(fp);
  return fp;
}

inline Fingerprint load_fingerprint_file(const std::string& path) { return parse_fingerprint(read_text_file(path)); }

inline void save_fingerprint_file(const std::string& path, const Fingerprint& fp) {
  write_text_file(path, format_fingerprint(fp));
}

}  // namespace fuzzprint
