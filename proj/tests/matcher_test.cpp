#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fuzzprint/matcher.hpp"
#include "test_util.hpp"

using namespace fuzzprint;

namespace {

const std::string kSum = "00000000000000aa";

Fingerprint ftp(std::string label, std::vector<std::string> lines) {
  return Fingerprint{std::move(label), Kind::ftp, kSum, std::move(lines)};
}

Fingerprint os(std::string label, std::vector<std::string> lines) {
  return Fingerprint{std::move(label), Kind::os, kSum, std::move(lines)};
}

constexpr const char* kSynAck =
    "ip{tos=0,flags=2,ttl=64}+tcp{seq=5,ack=12648431,flags=18,window=5840,options=M:1460;N;W:7}";

}  // namespace

TEST(AckRelation, Classification) {
  EXPECT_EQ(ack_relation(100, 0), AckRelation::zero);
  EXPECT_EQ(ack_relation(100, 100), AckRelation::same);
  EXPECT_EQ(ack_relation(100, 101), AckRelation::plus_one);
  EXPECT_EQ(ack_relation(100, 102), AckRelation::other);
  EXPECT_EQ(ack_relation(0xFFFFFFFF, 0), AckRelation::zero);  // zero wins over seq+1
  EXPECT_EQ(ack_relation(0xFFFFFFFE, 0xFFFFFFFF), AckRelation::plus_one);
  EXPECT_EQ(ack_relation(0, 0), AckRelation::zero);
}

TEST(Ratio, ExactArithmetic) {
  EXPECT_EQ(Ratio(2, 4), Ratio(1, 2));
  EXPECT_EQ(Ratio(1, 3) + Ratio(1, 6), Ratio(1, 2));
  EXPECT_EQ(Ratio(1, 2) - Ratio(1, 3), Ratio(1, 6));
  EXPECT_TRUE(Ratio(1, 3) < Ratio(34, 100));
  EXPECT_THROW(Ratio(1, 0), DomainError);
}

TEST(Percentage, RoundsHalfUpToHundredths) {
  EXPECT_EQ(Percentage{Ratio(48900, 500)}.to_string(), "97.80");
  EXPECT_EQ(Percentage{Ratio(200, 3)}.to_string(), "66.67");
  EXPECT_EQ(Percentage{Ratio(100, 3)}.to_string(), "33.33");
  EXPECT_EQ(Percentage{Ratio(1, 8)}.to_string(), "0.13");
  EXPECT_EQ(Percentage{Ratio(100, 1)}.to_string(), "100.00");
  EXPECT_EQ(Percentage{Ratio(0, 1)}.to_string(), "0.00");
  EXPECT_EQ(Percentage{Ratio(600, 7)}.to_string(), "85.71");
}

TEST(MatchResponse, HandCountedFeatures) {
  // identical except window: 6 of 7 features agree
  const std::string other_window =
      "ip{tos=0,flags=2,ttl=64}+tcp{seq=5,ack=12648431,flags=18,window=8192,options=M:1460;N;W:7}";
  EXPECT_EQ(match_response(kSynAck, other_window, Kind::os), Ratio(6, 7));
  // ttl, seq and ip.id are ignored
  const std::string other_ttl =
      "ip{tos=0,id=9,flags=2,ttl=128}+tcp{seq=99,ack=12648431,flags=18,window=5840,options=M:1460;N;W:7}";
  EXPECT_EQ(match_response(kSynAck, other_ttl, Kind::os), Ratio(1, 1));
  // window, options and DF differ: 4 of 7
  const std::string three =
      "ip{tos=0,flags=0,ttl=64}+tcp{seq=5,ack=12648431,flags=18,window=8192,options=M:1460}";
  EXPECT_EQ(match_response(kSynAck, three, Kind::os), Ratio(4, 7));
  EXPECT_EQ(match_response("", "", Kind::os), Ratio(1, 1));
  EXPECT_EQ(match_response(kSynAck, "", Kind::os), Ratio(0, 1));
}

TEST(MatchResponse, AckRelationUsesProbeSequence) {
  const std::string ack_plus_one = "tcp{ack=101,flags=18}";
  const std::string ack_same = "tcp{ack=100,flags=18}";
  EXPECT_EQ(match_response(ack_plus_one, ack_same, Kind::os, 100), Ratio(6, 7));
  // different absolute acks that are both seq+1 for their probe are equal
  EXPECT_EQ(match_response("tcp{ack=101,flags=18}", "tcp{ack=101,flags=18}", Kind::os, 100), Ratio(1, 1));
}

TEST(MatchResponse, OptionOrderMattersTimestampValueDoesNot) {
  EXPECT_EQ(match_response("tcp{options=M:1460;N;W:7;N;T:1}", "tcp{options=T:1;N;W:7;N;M:1460}", Kind::os),
            Ratio(6, 7));
  EXPECT_EQ(match_response("tcp{options=M:1460;N;N;T:100}", "tcp{options=M:1460;N;N;T:99999}", Kind::os), Ratio(1, 1));
  EXPECT_EQ(match_response("tcp{options=M:1460}", "tcp{options=M:536}", Kind::os), Ratio(6, 7));
}

TEST(MatchResponse, FtpIsEquality) {
  EXPECT_EQ(match_response("500", "500", Kind::ftp), Ratio(1, 1));
  EXPECT_EQ(match_response("500", "501", Kind::ftp), Ratio(0, 1));
  EXPECT_EQ(match_response("", "", Kind::ftp), Ratio(1, 1));
  EXPECT_EQ(match_response("", "500", Kind::ftp), Ratio(0, 1));
}

TEST(MatchFile, SelfIdentityAndSymmetry) {
  const auto a = os("a", {kSynAck, "", "tcp{flags=20,ack=0}"});
  const auto b = os("b", {"", "", "tcp{flags=20,ack=1}"});
  EXPECT_EQ(match_file(a, a).to_string(), "100.00");
  EXPECT_EQ(match_file(a, b), match_file(b, a));
  // probe 0: 0/7, probe 1: 7/7, probe 2: 6/7 -> 13/21
  EXPECT_EQ(match_file(a, b).value, Ratio(1300, 21));
}

TEST(MatchFile, IncompatibleInputs) {
  auto a = ftp("a", {"200"});
  auto b = ftp("b", {"200"});
  b.corpus_checksum = "00000000000000bb";
  EXPECT_THROW(match_file(a, b), IncompatibleCorpusError);
  EXPECT_THROW(match_file(a, os("c", {""})), IncompatibleCorpusError);
  EXPECT_THROW(match_file(a, ftp("d", {"200", "200"})), IntegrityError);
}

TEST(MatchFile, EmptyFingerprintsScoreFull) {
  EXPECT_EQ(match_file(ftp("a", {}), ftp("b", {})).to_string(), "100.00");
}

TEST(MatchFile, CorpusMustMatch) {
  Corpus corpus;
  corpus.kind = Kind::os;
  corpus.probes = {"tcp{seq=100,flags=2}"};
  auto a = Fingerprint{"a", Kind::os, corpus.checksum(), {"tcp{ack=101,flags=18}"}};
  auto b = Fingerprint{"b", Kind::os, corpus.checksum(), {"tcp{ack=100,flags=18}"}};
  EXPECT_EQ(match_file(a, b, &corpus).value, Ratio(600, 7));
  Corpus other = corpus;
  other.probes.push_back("tcp{flags=2}");
  EXPECT_THROW(match_file(a, b, &other), IncompatibleCorpusError);
}

TEST(MatchFile, EachFlippedLineCostsExactlyOneNth) {
  std::mt19937_64 g(11);
  const std::size_t n = 137;
  std::vector<std::string> lines(n);
  for (auto& l : lines) l = std::to_string(200 + g() % 300);
  auto a = ftp("a", lines);
  auto b = ftp("b", lines);
  Ratio expected(100, 1);
  for (std::size_t i = 0; i < n; i += 3) {
    const auto before = match_file(a, b).value;
    b.lines[i] = b.lines[i] == "999" ? "998" : "999";
    const auto after = match_file(a, b).value;
    ASSERT_EQ(before - after, Ratio(100, static_cast<std::int64_t>(n)));
  }
}

TEST(Rank, OrderAndLimit) {
  std::vector<Fingerprint> known{ftp("e", {"200", "200", "200"}), ftp("d", {"", "", ""}),
                                 ftp("c", {"", "", "500"}),       ftp("b", {"", "", "500"}),
                                 ftp("a", {"500", "500", "500"}), ftp("f", {"", "200", "200"})};
  const auto query = ftp("q", {"", "", ""});
  const auto r = rank(known, query);
  ASSERT_EQ(r.size(), 5u);
  EXPECT_EQ(r[0].label, "d");
  EXPECT_EQ(r[1].label, "b");  // tie with c broken by label
  EXPECT_EQ(r[2].label, "c");
  EXPECT_EQ(r[3].label, "f");
  EXPECT_EQ(r[4].label, "a");
}

TEST(Rank, SkipsOtherCorpora) {
  auto other = ftp("x", {""});
  other.corpus_checksum = "00000000000000bb";
  std::vector<Fingerprint> known{other, ftp("y", {""})};
  const auto r = rank(known, ftp("q", {""}));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].label, "y");
}

TEST(Discriminative, MatchesBrutePairScan) {
  std::mt19937_64 g(21);
  for (int round = 0; round < 30; ++round) {
    const std::size_t n = 40, k = 2 + g() % 4;
    std::vector<Fingerprint> fps;
    std::vector<std::string> base(n, "200");
    std::set<std::size_t> planted;
    for (std::size_t i = 0; i < k; ++i) fps.push_back(ftp("fp" + std::to_string(i), base));
    for (int d = 0; d < 6; ++d) {
      const auto p = g() % n;
      fps[g() % k].lines[p] = "5" + std::to_string(10 + g() % 90);
      planted.insert(p);
    }
    std::vector<std::size_t> brute;
    for (std::size_t p = 0; p < n; ++p) {
      bool differ = false;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) differ |= fps[i].lines[p] != fps[j].lines[p];
      if (differ) brute.push_back(p);
    }
    const auto got = extract_discriminative_probes(fps);
    ASSERT_EQ(got, brute);
    for (auto p : got) ASSERT_TRUE(planted.count(p));
  }
}

TEST(Discriminative, OsUsesFeaturesNotText) {
  // ttl differs at probe 0 (ignored), window at probe 1
  std::vector<Fingerprint> fps{os("a", {"ip{ttl=64}+tcp{flags=18}", "tcp{window=1}"}),
                               os("b", {"ip{ttl=128}+tcp{flags=18}", "tcp{window=2}"})};
  EXPECT_EQ(extract_discriminative_probes(fps), (std::vector<std::size_t>{1}));
}

TEST(Discriminative, NeedsTwo) {
  std::vector<Fingerprint> one{ftp("a", {"200"})};
  EXPECT_THROW(extract_discriminative_probes(one), InsufficientDataError);
}

TEST(ReduceCorpus, KeepsOrderAndParent) {
  Corpus c;
  c.kind = Kind::ftp;
  c.probes = {"A", "B", "C", "D"};
  const std::vector<std::size_t> idx{1, 3};
  const auto r = reduce_corpus(c, idx);
  EXPECT_EQ(r.probes, (std::vector<std::string>{"B", "D"}));
  EXPECT_EQ(r.parent_checksum, c.checksum());
  EXPECT_NE(r.checksum(), c.checksum());
  const std::vector<std::size_t> bad{4};
  EXPECT_THROW(reduce_corpus(c, bad), DomainError);
}

TEST(Similarity, MatrixCsvAndTable) {
  std::vector<Fingerprint> fps{ftp("a,1", {"200", "500"}), ftp("b", {"200", "501"}), ftp("c", {"200", "500"})};
  const auto r = similarity_matrix(fps);
  ASSERT_EQ(r.matrix.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(r.matrix[i][j], r.matrix[j][i]);
  EXPECT_EQ(r.matrix[0][1].to_string(), "50.00");
  EXPECT_EQ(r.matrix[0][2].to_string(), "100.00");
  EXPECT_EQ(r.discriminative, (std::vector<std::size_t>{1}));
  EXPECT_EQ(r.top5[1][0].label, "a,1");
  const auto csv = format_matrix_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "\"a,1\",\"a,1\",100.00");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_NE(format_matrix_table(r).find("50.00"), std::string::npos);
}

TEST(Similarity, CollectionBacked) {
  testutil::TempDir dir;
  Collection c(dir.path());
  c.save(ftp("x", {"200"}));
  c.save(ftp("y", {"500"}));
  const auto r = similarity_matrix(c, Kind::ftp);
  EXPECT_EQ(r.labels, (std::vector<std::string>{"x", "y"}));
  EXPECT_EQ(r.matrix[0][1].to_string(), "0.00");
  EXPECT_THROW(similarity_matrix(c, Kind::os), InsufficientDataError);
}
