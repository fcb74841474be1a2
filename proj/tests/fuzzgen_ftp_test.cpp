#include <gtest/gtest.h>

#include <map>

#include "fuzzprint/fuzzgen_ftp.hpp"
#include "test_util.hpp"

using namespace fuzzprint;

TEST(Rng, XorshiftStarReference) {
  // independent transcription of the published recurrence
  std::uint64_t x = 42;
  Xorshift64Star rng(42);
  for (int i = 0; i < 1000; ++i) {
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    ASSERT_EQ(rng.next(), x * 2685821657736338717ULL);
  }
}

TEST(Rng, ZeroSeedIsReplaced) {
  Xorshift64Star zero(0);
  Xorshift64Star golden(0x9E3779B97F4A7C15ULL);
  EXPECT_EQ(zero.state(), golden.state());
  EXPECT_NE(zero.next(), 0u);
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Xorshift64Star rng(5);
  for (std::uint64_t bound : {1u, 2u, 3u, 95u, 1000u}) {
    std::map<std::uint64_t, int> seen;
    for (int i = 0; i < 20000; ++i) {
      const auto v = rng.below(bound);
      ASSERT_LT(v, bound);
      ++seen[v];
    }
    if (bound <= 95) {
      EXPECT_EQ(seen.size(), bound);
    }
  }
}

TEST(Mutate, TenThousandCallsEachOneEdit) {
  Xorshift64Star rng(1234);
  std::string msg = "SITE aaaa";
  for (int i = 0; i < 10000; ++i) {
    const auto next = mutate(msg, rng);
    ASSERT_EQ(testutil::levenshtein(msg, next), 1u) << '"' << msg << "\" -> \"" << next << '"';
    ASSERT_EQ(next.find_first_of("\r\n"), std::string::npos);
    for (char c : next) ASSERT_TRUE(c >= 0x20 && c <= 0x7E);
    msg = next.size() > 40 ? std::string("USER a") : next;
  }
}

TEST(Mutate, EmptyMessageGrows) {
  Xorshift64Star rng(9);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(mutate("", rng).size(), 1u);
}

TEST(Mutate, ReplaysUnderSameSeed) {
  Xorshift64Star a(77), b(77), c(78);
  std::string x = "HELP aaa", y = x, z = x;
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    x = mutate(x, a);
    y = mutate(y, b);
    z = mutate(z, c);
    ASSERT_EQ(x, y);
    differs |= x != z;
  }
  EXPECT_TRUE(differs);
}

TEST(FtpCorpus, ShapeAndCounts) {
  CommandCorpusSpec spec{{"USER", "SITE", "NOOP"}};
  MutationParams params;
  params.max_len = 5;
  params.instances = 3;
  params.mutations = 4;
  const auto corpus = build_ftp_corpus(spec, params);
  ASSERT_EQ(corpus.size(), 3u * 5u * 3u * 5u);
  std::size_t i = 0;
  for (const auto& cmd : spec.commands)
    for (std::size_t len = 1; len <= 5; ++len)
      for (std::size_t inst = 0; inst < 3; ++inst) {
        ASSERT_EQ(corpus.probes[i], cmd + " " + std::string(len, 'a'));
        for (std::size_t step = 1; step <= 4; ++step)
          ASSERT_EQ(testutil::levenshtein(corpus.probes[i + step - 1], corpus.probes[i + step]), 1u);
        i += 5;
      }
}

TEST(FtpCorpus, DefaultParametersAndDeterminism) {
  const auto a = build_ftp_corpus(CommandCorpusSpec::defaults(), MutationParams{});
  EXPECT_EQ(a.size(), 16u * 64u * 4u * 9u);
  const auto b = build_ftp_corpus(CommandCorpusSpec::defaults(), MutationParams{});
  EXPECT_EQ(a.checksum(), b.checksum());
  MutationParams other;
  other.seed = 2;
  EXPECT_NE(build_ftp_corpus(CommandCorpusSpec::defaults(), other).checksum(), a.checksum());
}

TEST(FtpCorpus, NoMutations) {
  MutationParams params;
  params.max_len = 3;
  params.instances = 1;
  params.mutations = 0;
  const auto c = build_ftp_corpus(CommandCorpusSpec{{"NOOP"}}, params);
  EXPECT_EQ(c.probes, (std::vector<std::string>{"NOOP a", "NOOP aa", "NOOP aaa"}));
}

TEST(FtpCorpus, RejectsDangerousCommands) {
  for (const char* bad : {"RETR", "stor", "MKD", "LIST", "QUIT", "DELE"})
    EXPECT_THROW(build_ftp_corpus(CommandCorpusSpec{{"USER", bad}}, MutationParams{}), DomainError) << bad;
  EXPECT_THROW(build_ftp_corpus(CommandCorpusSpec{{}}, MutationParams{}), DomainError);
  EXPECT_THROW(build_ftp_corpus(CommandCorpusSpec{{"SI TE"}}, MutationParams{}), DomainError);
  MutationParams p;
  p.max_len = 0;
  EXPECT_THROW(build_ftp_corpus(CommandCorpusSpec::defaults(), p), DomainError);
}

TEST(FtpProbe, LineForm) {
  EXPECT_EQ((FtpProbe{"SYST", ""}.to_line()), "SYST");
  EXPECT_EQ((FtpProbe{"SITE", "xyz"}.to_line()), "SITE xyz");
}
