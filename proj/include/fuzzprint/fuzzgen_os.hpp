#pragma once

// Generation-based fuzzer for OS probes: every selected TCP header field is
// swept over [0, 2^w - 1] in steps, the per-field lists are combined by
// cartesian product, and each combination is crossed with a set of TCP
// option layouts.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fuzzprint/corpus.hpp"
#include "fuzzprint/error.hpp"
#include "fuzzprint/packet.hpp"

namespace fuzzprint {

struct SelectedField {
  FieldDescriptor field;
  std::uint64_t step = 1;
};

struct FieldSelection {
  std::vector<SelectedField> fields;

  static FieldSelection uniform(const std::vector<FieldDescriptor>& fields, std::uint64_t step) {
    FieldSelection s;
    for (const auto& f : fields) s.fields.push_back({f, step});
    return s;
  }

  /// Throws DomainError unless every field is a fuzzable TCP field with step >= 1.
  void validate() const {
    if (fields.empty()) throw DomainError("field selection is empty");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto& f = fields[i];
      const std::string name = "tcp." + std::string(f.field.name);
      if (f.field.layer != Layer::tcp)
        throw DomainError("ip." + std::string(f.field.name) + ": only TCP fields can be fuzzed");
      if (f.field.name == "dport") throw DomainError(name + " is reserved for the target port");
      if (f.step == 0) throw DomainError(name + ": step must be >= 1");
      for (std::size_t j = 0; j < i; ++j)
        if (fields[j].field.name == f.field.name) throw DomainError(name + " selected twice");
    }
  }
};

/// Default selection: tcp.flags every value, tcp.window every 16384,
/// tcp.urgent every 32768.
inline FieldSelection default_field_selection() {
  return FieldSelection{{
      {descriptor(TcpField::flags), 1},
      {descriptor(TcpField::window), 16384},
      {descriptor(TcpField::urgent), 32768},
  }};
}

using ValueList = std::vector<std::uint32_t>;
using ValueLists = std::vector<ValueList>;
using ValueTuple = std::vector<std::uint32_t>;

/// One list per selected field: 0, s, 2s, ... up to the largest multiple of
/// s not above 2^w - 1.
inline ValueLists generate_fuzz(const FieldSelection& selection) {
  selection.validate();
  ValueLists lists;
  lists.reserve(selection.fields.size());
  for (const auto& f : selection.fields) {
    const std::uint64_t last = f.field.domain_size() - 1;
    ValueList values;
    values.reserve(static_cast<std::size_t>(last / f.step + 1));
    for (std::uint64_t v = 0; v <= last; v += f.step) values.push_back(static_cast<std::uint32_t>(v));
    lists.push_back(std::move(values));
  }
  return lists;
}

inline constexpr std::uint64_t kDefaultCardinalityCap = 100'000;

/// Product of the list lengths, saturating at uint64 max.
inline std::uint64_t product_cardinality(const ValueLists& lists) noexcept {
  std::uint64_t n = 1;
  for (const auto& l : lists) {
    if (l.empty()) return 0;
    if (n > std::numeric_limits<std::uint64_t>::max() / l.size()) return std::numeric_limits<std::uint64_t>::max();
    n *= l.size();
  }
  return n;
}

/// All tuples (v_1..v_n), v_k from lists[k], in lexicographic order of list
/// position (the last list varies fastest).
inline std::vector<ValueTuple> cross_product(const ValueLists& lists, std::uint64_t cap = kDefaultCardinalityCap) {
  if (lists.empty()) throw DomainError("cross_product needs at least one list");
  const std::uint64_t total = product_cardinality(lists);
  if (total > cap) throw CardinalityError(total, cap);

  std::vector<ValueTuple> out;
  if (total == 0) return out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<std::size_t> idx(lists.size(), 0);
  for (;;) {
    ValueTuple t(lists.size());
    for (std::size_t k = 0; k < lists.size(); ++k) t[k] = lists[k][idx[k]];
    out.push_back(std::move(t));
    std::size_t k = lists.size();
    while (k > 0) {
      --k;
      if (++idx[k] < lists[k].size()) break;
      idx[k] = 0;
      if (k == 0) return out;
    }
  }
}

using OptionTemplate = std::vector<TcpOption>;
using OptionTemplateSet = std::vector<OptionTemplate>;

inline constexpr std::uint32_t kTemplateMss = 1460;
inline constexpr std::uint32_t kTemplateWindowScale = 0;
inline constexpr std::uint32_t kTemplateTimestamp = 1;

/// Every ordering of every subset of `kinds` (drawn from "WMT"). Each option
/// is emitted as a word-aligned unit: W as N,W; M alone; T as N,N,T. The
/// empty subset (no options) comes first, then subsets by size.
inline OptionTemplateSet default_option_templates(std::string_view kinds = "WMT") {
  std::vector<char> base;
  for (char k : std::string_view("WMT"))
    if (kinds.find(k) != std::string_view::npos) base.push_back(k);
  for (char k : kinds)
    if (k != 'W' && k != 'M' && k != 'T') throw DomainError(std::string("option template kind must be W, M or T, got ") + k);

  const auto unit = [](char k, OptionTemplate& t) {
    switch (k) {
      case 'W':
        t.push_back(TcpOption::nop());
        t.push_back({OptionKind::window_scale, kTemplateWindowScale});
        break;
      case 'M': t.push_back({OptionKind::mss, kTemplateMss}); break;
      case 'T':
        t.push_back(TcpOption::nop());
        t.push_back(TcpOption::nop());
        t.push_back({OptionKind::timestamp, kTemplateTimestamp});
        break;
    }
  };

  OptionTemplateSet out;
  const unsigned n = static_cast<unsigned>(base.size());
  for (unsigned size = 0; size <= n; ++size) {
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      if (static_cast<unsigned>(__builtin_popcount(mask)) != size) continue;
      std::vector<std::size_t> members;
      for (unsigned i = 0; i < n; ++i)
        if (mask & (1u << i)) members.push_back(i);
      do {
        OptionTemplate t;
        for (auto i : members) unit(base[i], t);
        out.push_back(std::move(t));
      } while (std::next_permutation(members.begin(), members.end()));
    }
  }
  return out;
}

/// One APD probe per (tuple x template), tuple-major. Addresses and the
/// destination port are DUMMY; SYN is always set so that the probe can
/// reach an open port's listening socket.
inline Corpus generate_packets(const std::vector<ValueTuple>& tuples, const FieldSelection& selection,
                               const OptionTemplateSet& templates, std::uint64_t cap = kDefaultCardinalityCap) {
  selection.validate();
  if (templates.empty()) throw DomainError("option template set is empty (use one empty template for none)");
  for (const auto& t : templates)
    if (!options_word_aligned(t)) throw DomainError("option template " + option_kinds(t) + " is not word aligned");
  const std::uint64_t lines = static_cast<std::uint64_t>(tuples.size()) * templates.size();
  if (lines > cap) throw CardinalityError(lines, cap);

  Corpus corpus;
  corpus.kind = Kind::os;
  corpus.probes.reserve(static_cast<std::size_t>(lines));
  for (const auto& tuple : tuples) {
    if (tuple.size() != selection.fields.size())
      throw DomainError("tuple arity " + std::to_string(tuple.size()) + " does not match selection");
    PacketDescription base;
    base[IpField::saddr] = FieldValue::placeholder();
    base[IpField::daddr] = FieldValue::placeholder();
    base[TcpField::dport] = FieldValue::placeholder();
    base.set(TcpField::flags, tcp_flags::kSyn);
    for (std::size_t k = 0; k < tuple.size(); ++k) {
      const auto& d = selection.fields[k].field;
      const auto it = std::find_if(kTcpFields.begin(), kTcpFields.end(),
                                   [&](const FieldDescriptor& x) { return x.name == d.name; });
      base.tcp[static_cast<std::size_t>(it - kTcpFields.begin())] = FieldValue::of(tuple[k]);
    }
    base.set(TcpField::flags, base.value_or(TcpField::flags, 0) | tcp_flags::kSyn);
    for (const auto& t : templates) {
      PacketDescription p = base;
      p.options = t;
      corpus.probes.push_back(encode_apd(p));
    }
  }
  return corpus;
}

/// generate_fuzz -> cross_product -> generate_packets.
inline Corpus generate_os_corpus(const FieldSelection& selection, const OptionTemplateSet& templates,
                                 std::uint64_t cap = kDefaultCardinalityCap) {
  const auto lists = generate_fuzz(selection);
  const std::uint64_t tuples = product_cardinality(lists);
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t lines =
      templates.empty() || tuples <= max / templates.size() ? tuples * templates.size() : max;
  if (lines > cap) throw CardinalityError(lines, cap);
  return generate_packets(cross_product(lists, cap), selection, templates, cap);
}

}  // namespace fuzzprint
