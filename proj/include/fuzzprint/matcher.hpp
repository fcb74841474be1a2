#pragma once

// Behavioral agreement between fingerprints.
//
// Per probe, two responses are compared on a fixed set of constant-content
// features; the fingerprint score is the arithmetic mean over all probes,
// expressed as a percentage. Scores are exact rationals; rounding to two
// decimals happens only when formatting.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fuzzprint/corpus.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/fingerprint.hpp"
#include "fuzzprint/packet.hpp"
#include "fuzzprint/store.hpp"

namespace fuzzprint {

namespace detail {
__extension__ using int128 = __int128;
}  // namespace detail

/// Exact fraction with a positive denominator, always normalized.
class Ratio {
 public:
  constexpr Ratio() = default;
  Ratio(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
    if (den_ <= 0) throw DomainError("ratio denominator must be positive");
    const auto g = std::gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  constexpr std::int64_t num() const noexcept { return num_; }
  constexpr std::int64_t den() const noexcept { return den_; }
  double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Ratio operator+(const Ratio& a, const Ratio& b) {
    const auto g = std::gcd(a.den_, b.den_);
    return Ratio(a.num_ * (b.den_ / g) + b.num_ * (a.den_ / g), a.den_ / g * b.den_);
  }
  friend Ratio operator-(const Ratio& a, const Ratio& b) {
    const auto g = std::gcd(a.den_, b.den_);
    return Ratio(a.num_ * (b.den_ / g) - b.num_ * (a.den_ / g), a.den_ / g * b.den_);
  }
  friend bool operator==(const Ratio& a, const Ratio& b) noexcept { return a.num_ == b.num_ && a.den_ == b.den_; }
  friend bool operator<(const Ratio& a, const Ratio& b) noexcept {
    return static_cast<detail::int128>(a.num_) * b.den_ < static_cast<detail::int128>(b.num_) * a.den_;
  }
  friend bool operator>(const Ratio& a, const Ratio& b) noexcept { return b < a; }
  friend bool operator<=(const Ratio& a, const Ratio& b) noexcept { return !(b < a); }
  friend bool operator>=(const Ratio& a, const Ratio& b) noexcept { return !(a < b); }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// A value in [0, 100], exact.
struct Percentage {
  Ratio value;

  /// Rounded half-up to hundredths of a percent, e.g. 9780 for 97.80.
  std::int64_t hundredths() const {
    const auto n = static_cast<detail::int128>(value.num()) * 200 + value.den();
    return static_cast<std::int64_t>(n / (2 * static_cast<detail::int128>(value.den())));
  }

  std::string to_string() const {
    const auto h = hundredths();
    std::string frac = std::to_string(h % 100);
    if (frac.size() < 2) frac.insert(frac.begin(), '0');
    return std::to_string(h / 100) + "." + frac;
  }

  friend bool operator==(const Percentage&, const Percentage&) = default;
  friend bool operator<(const Percentage& a, const Percentage& b) noexcept { return a.value < b.value; }
};

enum class AckRelation { zero, same, plus_one, other };

inline constexpr std::string_view ack_relation_name(AckRelation r) noexcept {
  switch (r) {
    case AckRelation::zero: return "O";
    case AckRelation::same: return "S";
    case AckRelation::plus_one: return "S++";
    case AckRelation::other: return "OTHER";
  }
  return "?";
}

/// Zero is checked first, so ack 0 is O even when it also equals seq or
/// seq + 1 (mod 2^32).
inline constexpr AckRelation ack_relation(std::uint32_t probe_seq, std::uint32_t response_ack) noexcept {
  if (response_ack == 0) return AckRelation::zero;
  if (response_ack == probe_seq) return AckRelation::same;
  if (response_ack == static_cast<std::uint32_t>(probe_seq + 1u)) return AckRelation::plus_one;
  return AckRelation::other;
}

/// Sequence number placed in a probe whose corpus line leaves tcp.seq unset.
inline constexpr std::uint32_t kDefaultProbeSeq = 0x00C0FFEE;

/// Number of compared OS response features.
inline constexpr std::int64_t kOsFeatureCount = 7;

/// Compared OS response features, in order: responded, tcp.flags,
/// tcp.window, ack relation, tcp.options (ordered kinds and values, except
/// timestamp values), ip DF bit, ip.tos. TTL, ip.id and sequence numbers are
/// excluded.
struct OsFeatures {
  bool responded = false;
  std::optional<std::uint32_t> flags;
  std::optional<std::uint32_t> window;
  std::optional<AckRelation> ack;
  std::vector<TcpOption> options;
  std::optional<bool> df;
  std::optional<std::uint32_t> tos;

  friend bool operator==(const OsFeatures&, const OsFeatures&) = default;
};

inline OsFeatures os_features(const PacketDescription& p, std::uint32_t probe_seq) {
  OsFeatures f;
  if (p.is_blank) return f;
  const auto val = [](const std::optional<FieldValue>& v) -> std::optional<std::uint32_t> {
    if (!v || v->dummy) return std::nullopt;
    return v->value;
  };
  f.responded = true;
  f.flags = val(p[TcpField::flags]);
  f.window = val(p[TcpField::window]);
  if (auto a = val(p[TcpField::ack])) f.ack = ack_relation(probe_seq, *a);
  f.options = p.options;
  // timestamp values change per reply
  for (auto& o : f.options)
    if (o.kind == OptionKind::timestamp) o.value = 0;
  if (auto fl = val(p[IpField::flags])) f.df = (*fl & ip_flags::kDontFragment) != 0;
  f.tos = val(p[IpField::tos]);
  return f;
}

/// Count of equal features (0..7). Two silent responses agree fully.
inline std::int64_t equal_feature_count(const OsFeatures& a, const OsFeatures& b) {
  if (!a.responded && !b.responded) return kOsFeatureCount;
  if (a.responded != b.responded) return 0;
  return 1 + (a.flags == b.flags) + (a.window == b.window) + (a.ack == b.ack) + (a.options == b.options) +
         (a.df == b.df) + (a.tos == b.tos);
}

/// Agreement of two response records for the same probe, in [0, 1].
inline Ratio match_response(std::string_view a, std::string_view b, Kind kind,
                            std::uint32_t probe_seq = kDefaultProbeSeq) {
  if (kind == Kind::ftp) return Ratio(a == b ? 1 : 0, 1);
  const auto fa = os_features(decode_apd(a), probe_seq);
  const auto fb = os_features(decode_apd(b), probe_seq);
  return Ratio(equal_feature_count(fa, fb), kOsFeatureCount);
}

/// Sequence number of every probe of an OS corpus as it goes on the wire.
inline std::vector<std::uint32_t> probe_sequence_numbers(const Corpus& corpus) {
  std::vector<std::uint32_t> seqs;
  if (corpus.kind != Kind::os) return seqs;
  seqs.reserve(corpus.size());
  for (const auto& line : corpus.probes) seqs.push_back(decode_apd(line).value_or(TcpField::seq, kDefaultProbeSeq));
  return seqs;
}

namespace detail {

inline void check_compatible(const Fingerprint& a, const Fingerprint& b) {
  if (a.kind != b.kind)
    throw IncompatibleCorpusError("cannot compare " + std::string(kind_name(a.kind)) + " fingerprint '" + a.label +
                                  "' with " + std::string(kind_name(b.kind)) + " fingerprint '" + b.label + "'");
  if (a.corpus_checksum != b.corpus_checksum)
    throw IncompatibleCorpusError("fingerprints '" + a.label + "' (corpus " + a.corpus_checksum + ") and '" + b.label +
                                  "' (corpus " + b.corpus_checksum + ") come from different corpora");
  if (a.size() != b.size())
    throw IntegrityError("fingerprints '" + a.label + "' and '" + b.label + "' share a corpus but differ in length");
}

/// Per-record feature vectors, decoded once.
inline std::vector<OsFeatures> features_of(const Fingerprint& fp, std::span<const std::uint32_t> seqs) {
  std::vector<OsFeatures> out;
  out.reserve(fp.size());
  for (std::size_t i = 0; i < fp.size(); ++i)
    out.push_back(os_features(decode_apd(fp.lines[i]), seqs.empty() ? kDefaultProbeSeq : seqs[i]));
  return out;
}

inline std::vector<std::uint32_t> seqs_for(const Fingerprint& fp, const Corpus* corpus) {
  if (!corpus || fp.kind != Kind::os) return {};
  if (corpus->kind != fp.kind || corpus->checksum() != fp.corpus_checksum)
    throw IncompatibleCorpusError("corpus " + corpus->checksum() + " did not produce fingerprint '" + fp.label + "'");
  return probe_sequence_numbers(*corpus);
}

/// Sum of per-probe agreement in units of 1/kOsFeatureCount (os) or 1 (ftp).
inline Percentage score(const Fingerprint& a, const Fingerprint& b, const std::vector<OsFeatures>* fa,
                        const std::vector<OsFeatures>* fb) {
  const auto n = static_cast<std::int64_t>(a.size());
  if (n == 0) return Percentage{Ratio(100, 1)};
  std::int64_t units = 0;
  std::int64_t per_probe = 1;
  if (a.kind == Kind::ftp) {
    for (std::size_t i = 0; i < a.size(); ++i) units += a.lines[i] == b.lines[i];
  } else {
    per_probe = kOsFeatureCount;
    for (std::size_t i = 0; i < a.size(); ++i) units += equal_feature_count((*fa)[i], (*fb)[i]);
  }
  return Percentage{Ratio(100 * units, per_probe * n)};
}

}  // namespace detail

/// Mean per-probe agreement of two fingerprints from the same corpus, as a
/// percentage. When the OS corpus is supplied, each probe's own sequence
/// number is used for the ack relation; otherwise kDefaultProbeSeq.
inline Percentage match_file(const Fingerprint& current, const Fingerprint& other, const Corpus* corpus = nullptr) {
  detail::check_compatible(current, other);
  if (current.kind == Kind::ftp) return detail::score(current, other, nullptr, nullptr);
  const auto seqs = detail::seqs_for(current, corpus);
  const auto fa = detail::features_of(current, seqs);
  const auto fb = detail::features_of(other, seqs);
  return detail::score(current, other, &fa, &fb);
}

struct RankEntry {
  std::string label;
  Percentage score;
};

inline constexpr std::size_t kRankLimit = 5;

/// Best matches among `known` for `query`: descending score, ties by label.
/// Fingerprints of another kind or corpus are skipped.
inline std::vector<RankEntry> rank(std::span<const Fingerprint> known, const Fingerprint& query,
                                   const Corpus* corpus = nullptr, std::size_t limit = kRankLimit) {
  std::vector<RankEntry> out;
  for (const auto& fp : known) {
    if (fp.kind != query.kind || fp.corpus_checksum != query.corpus_checksum) continue;
    out.push_back({fp.label, match_file(query, fp, corpus)});
  }
  std::sort(out.begin(), out.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.score.value != b.score.value) return b.score.value < a.score.value;
    return a.label < b.label;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

inline std::vector<RankEntry> rank(const Collection& c, const Fingerprint& query, const Corpus* corpus = nullptr) {
  const auto known = c.load_all(query.kind);
  return rank(known, query, corpus);
}

/// Probe indices at which at least two fingerprints disagree, ascending.
inline std::vector<std::size_t> extract_discriminative_probes(std::span<const Fingerprint> fps,
                                                              const Corpus* corpus = nullptr) {
  if (fps.size() < 2) throw InsufficientDataError("need at least two fingerprints to find discriminative probes");
  for (std::size_t i = 1; i < fps.size(); ++i) detail::check_compatible(fps[0], fps[i]);
  std::vector<std::size_t> out;
  const std::size_t n = fps[0].size();
  if (fps[0].kind == Kind::ftp) {
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t i = 1; i < fps.size(); ++i)
        if (fps[i].lines[p] != fps[0].lines[p]) {
          out.push_back(p);
          break;
        }
    return out;
  }
  // feature equality is an equivalence, so comparing against the first suffices
  const auto seqs = detail::seqs_for(fps[0], corpus);
  std::vector<std::vector<OsFeatures>> feats;
  for (const auto& fp : fps) feats.push_back(detail::features_of(fp, seqs));
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t i = 1; i < fps.size(); ++i)
      if (!(feats[i][p] == feats[0][p])) {
        out.push_back(p);
        break;
      }
  return out;
}

/// The probes at `indices`, in original order, stamped with the parent's checksum.
inline Corpus reduce_corpus(const Corpus& parent, std::span<const std::size_t> indices) {
  Corpus out;
  out.kind = parent.kind;
  out.parent_checksum = parent.checksum();
  for (auto i : indices) {
    if (i >= parent.size()) throw DomainError("probe index " + std::to_string(i) + " outside corpus");
    out.probes.push_back(parent.probes[i]);
  }
  return out;
}

struct SimilarityReport {
  Kind kind = Kind::os;
  std::vector<std::string> labels;
  std::vector<std::vector<Percentage>> matrix;
  std::vector<std::vector<RankEntry>> top5;  // per label, the best other labels
  std::vector<std::size_t> discriminative;   // empty when fewer than two fingerprints
};

inline SimilarityReport similarity_matrix(std::span<const Fingerprint> fps, const Corpus* corpus = nullptr) {
  if (fps.empty()) throw InsufficientDataError("similarity matrix needs at least one fingerprint");
  for (std::size_t i = 1; i < fps.size(); ++i) detail::check_compatible(fps[0], fps[i]);

  SimilarityReport r;
  r.kind = fps[0].kind;
  const std::size_t k = fps.size();
  for (const auto& fp : fps) r.labels.push_back(fp.label);
  r.matrix.assign(k, std::vector<Percentage>(k, Percentage{Ratio(100, 1)}));

  std::vector<std::vector<OsFeatures>> feats;
  if (r.kind == Kind::os) {
    const auto seqs = detail::seqs_for(fps[0], corpus);
    for (const auto& fp : fps) feats.push_back(detail::features_of(fp, seqs));
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto s = r.kind == Kind::os ? detail::score(fps[i], fps[j], &feats[i], &feats[j])
                                        : detail::score(fps[i], fps[j], nullptr, nullptr);
      r.matrix[i][j] = r.matrix[j][i] = s;
    }

  r.top5.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto& row = r.top5[i];
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) row.push_back({r.labels[j], r.matrix[i][j]});
    std::sort(row.begin(), row.end(), [](const RankEntry& a, const RankEntry& b) {
      if (a.score.value != b.score.value) return b.score.value < a.score.value;
      return a.label < b.label;
    });
    if (row.size() > kRankLimit) row.resize(kRankLimit);
  }
  if (k >= 2) r.discriminative = extract_discriminative_probes(fps, corpus);
  return r;
}

inline SimilarityReport similarity_matrix(const Collection& c, Kind kind, const Corpus* corpus = nullptr) {
  const auto fps = c.load_all(kind);
  return similarity_matrix(fps, corpus);
}

namespace detail {
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace detail

/// `label,label,percentage` rows in row-major order.
inline std::string format_matrix_csv(const SimilarityReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.labels.size(); ++i)
    for (std::size_t j = 0; j < r.labels.size(); ++j)
      out += detail::csv_field(r.labels[i]) + "," + detail::csv_field(r.labels[j]) + "," + r.matrix[i][j].to_string() + "\n";
  return out;
}

inline std::string format_matrix_table(const SimilarityReport& r) {
  std::size_t w = 6;  // "100.00"
  for (const auto& l : r.labels) w = std::max(w, l.size());
  const auto pad = [w](const std::string& s, bool right) {
    const std::string fill(w - std::min(w, s.size()), ' ');
    return right ? fill + s : s + fill;
  };
  std::ostringstream os;
  os << pad("", false);
  for (const auto& l : r.labels) os << "  " << pad(l, true);
  os << '\n';
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    os << pad(r.labels[i], false);
    for (std::size_t j = 0; j < r.labels.size(); ++j) os << "  " << pad(r.matrix[i][j].to_string(), true);
    os << '\n';
  }
  return os.str();
}

}  // namespace fuzzprint
