#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace fuzzprint {

/// 64-bit FNV-1a.
class Fnv1a64 {
 public:
  static constexpr std::uint64_t kOffsetBasis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t kPrime = 0x100000001b3ULL;

  constexpr void update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
      hash_ ^= c;
      hash_ *= kPrime;
    }
  }

  constexpr std::uint64_t digest() const noexcept { return hash_; }

 private:
  std::uint64_t hash_ = kOffsetBasis;
};

/// Lowercase, zero-padded 16-digit hex.
inline std::string to_hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xF];
    v >>= 4;
  }
  return out;
}

inline bool is_hex64(std::string_view s) {
  if (s.size() != 16) return false;
  for (char c : s) {
    const bool digit = c >= '0' && c <= '9';
    const bool lower = c >= 'a' && c <= 'f';
    if (!digit && !lower) return false;
  }
  return true;
}

/// Running 16-bit ones-complement sum as used by the IPv4 and TCP checksums.
/// Bytes are consumed as big-endian 16-bit words; an odd trailing byte is
/// padded with zero.
class InternetChecksum {
 public:
  void update(std::span<const std::uint8_t> bytes) noexcept {
    std::size_t i = 0;
    if (odd_) {
      sum_ += bytes.empty() ? 0 : bytes[0];
      if (!bytes.empty()) ++i;
      odd_ = bytes.empty();
    }
    for (; i + 1 < bytes.size(); i += 2) {
      sum_ += static_cast<std::uint32_t>(bytes[i] << 8 | bytes[i + 1]);
    }
    if (i < bytes.size()) {
      sum_ += static_cast<std::uint32_t>(bytes[i]) << 8;
      odd_ = true;
    }
  }

  std::uint16_t finish() const noexcept {
    std::uint64_t s = sum_;
    while (s >> 16) s = (s & 0xFFFF) + (s >> 16);
    return static_cast<std::uint16_t>(~s & 0xFFFF);
  }

 private:
  std::uint64_t sum_ = 0;
  bool odd_ = false;
};

}  // namespace fuzzprint
