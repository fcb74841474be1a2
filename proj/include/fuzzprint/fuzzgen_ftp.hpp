#pragma once

// Mutation-based fuzzer for FTP control-connection probes.

#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzprint/corpus.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/rng.hpp"

namespace fuzzprint {

struct FtpProbe {
  std::string command;
  std::string argument;

  /// `COMMAND SP argument`, or just `COMMAND` when the argument is empty.
  /// CRLF is added only when the probe is written to the wire.
  std::string to_line() const { return argument.empty() ? command : command + " " + argument; }
};

struct MutationParams {
  std::size_t max_len = 64;    // L
  std::size_t instances = 4;   // n
  std::size_t mutations = 8;   // m, per instance
  std::uint64_t seed = 1;

  void validate() const {
    if (max_len < 1) throw DomainError("max_len must be >= 1");
    if (instances < 1) throw DomainError("instances must be >= 1");
  }
};

/// Commands that only affect the control connection: nothing that
/// downloads, uploads, creates directories or ends the session.
struct CommandCorpusSpec {
  std::vector<std::string> commands;

  static CommandCorpusSpec defaults() {
    return {{"USER", "PASS", "ACCT", "TYPE", "MODE", "STRU", "STAT", "SYST", "HELP", "NOOP", "FEAT", "OPTS", "SITE",
             "REST", "ALLO", "PORT"}};
  }

  void validate() const {
    static constexpr std::string_view kForbidden[] = {"RETR", "STOR", "STOU", "APPE", "MKD", "XMKD", "LIST", "NLST",
                                                      "MLSD", "DELE", "RMD", "XRMD", "RNFR", "RNTO",
                                                      "QUIT", "REIN"};
    if (commands.empty()) throw DomainError("command list is empty");
    for (const auto& c : commands) {
      if (c.empty()) throw DomainError("empty command token");
      for (char ch : c)
        if (ch < 0x21 || ch > 0x7E) throw DomainError("command token '" + c + "' must be printable without spaces");
      std::string upper = c;
      for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      for (auto f : kForbidden)
        if (upper == f) throw DomainError(c + " touches files, the data connection or the session and is not allowed");
    }
  }
};

inline constexpr char kPrintableFirst = 0x20;
inline constexpr char kPrintableLast = 0x7E;
inline constexpr std::uint64_t kPrintableCount = kPrintableLast - kPrintableFirst + 1;  // 95

/// Applies exactly one edit: insert a random printable character, replace a
/// character by a different printable one, or delete a character, chosen
/// uniformly (an empty message can only grow).
inline std::string mutate(std::string message, Xorshift64Star& rng) {
  enum { kInsert, kReplace, kDelete };
  const int op = message.empty() ? kInsert : static_cast<int>(rng.below(3));
  switch (op) {
    case kInsert: {
      const auto pos = rng.below(message.size() + 1);
      const auto ch = static_cast<char>(kPrintableFirst + rng.below(kPrintableCount));
      message.insert(message.begin() + static_cast<std::ptrdiff_t>(pos), ch);
      break;
    }
    case kReplace: {
      const auto pos = static_cast<std::size_t>(rng.below(message.size()));
      const char old = message[pos];
      if (old >= kPrintableFirst && old <= kPrintableLast) {
        // draw from the 94 printable characters other than `old`
        auto ch = static_cast<char>(kPrintableFirst + rng.below(kPrintableCount - 1));
        if (ch >= old) ++ch;
        message[pos] = ch;
      } else {
        message[pos] = static_cast<char>(kPrintableFirst + rng.below(kPrintableCount));
      }
      break;
    }
    default:
      message.erase(static_cast<std::size_t>(rng.below(message.size())), 1);
      break;
  }
  return message;
}

/// For each command and each argument length 1..L: a base probe with an
/// argument of that many 'a' characters, then n instances, each emitted as
/// the base followed by its m successive mutations. One random stream,
/// seeded once, is consumed in (command, length, instance, step) order.
inline Corpus build_ftp_corpus(const CommandCorpusSpec& spec, const MutationParams& params) {
  spec.validate();
  params.validate();
  Xorshift64Star rng(params.seed);
  Corpus corpus;
  corpus.kind = Kind::ftp;
  corpus.probes.reserve(spec.commands.size() * params.max_len * params.instances * (params.mutations + 1));
  for (const auto& command : spec.commands) {
    for (std::size_t len = 1; len <= params.max_len; ++len) {
      const std::string base = FtpProbe{command, std::string(len, 'a')}.to_line();
      for (std::size_t inst = 0; inst < params.instances; ++inst) {
        std::string probe = base;
        corpus.probes.push_back(probe);
        for (std::size_t step = 0; step < params.mutations; ++step) {
          probe = mutate(std::move(probe), rng);
          corpus.probes.push_back(probe);
        }
      }
    }
  }
  return corpus;
}

}  // namespace fuzzprint
