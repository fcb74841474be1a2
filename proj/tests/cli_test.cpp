#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "test_util.hpp"

using namespace fuzzprint;
using testutil::data_path;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "fuzzprint");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string personality(const std::string& name) { return data_path("personalities/" + name + ".personality"); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override { ::unsetenv(cli::kCollectionEnv); }
  void TearDown() override { ::unsetenv(cli::kCollectionEnv); }
  testutil::TempDir dir;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"gen-ftp", "--max-len", "x"}).code, 1);
  EXPECT_EQ(run({"gen-ftp", "--max-len", "0"}).code, 1);
  EXPECT_EQ(run({"gen-ftp", "--commands", "USER,RETR"}).code, 1);
  EXPECT_EQ(run({"gen-os", "--field", "bogus:1"}).code, 1);
  EXPECT_EQ(run({"gen-os", "--field", "dport:1"}).code, 1);
  EXPECT_EQ(run({"matrix", "--kind", "http"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, GenFtpToStdoutIsStable) {
  const auto a = run({"gen-ftp", "--max-len", "3", "--instances", "1", "--mutations", "1", "--commands", "SITE,NOOP"});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto c = parse_corpus(a.out);
  EXPECT_EQ(c.size(), 2u * 3u * 2u);
  EXPECT_EQ(run({"gen-ftp", "--max-len", "3", "--instances", "1", "--mutations", "1", "--commands", "SITE,NOOP"}).out,
            a.out);
}

TEST_F(CliTest, GenOsFields) {
  const auto r = run({"gen-os", "--field", "flags:16", "--field", "tcp.window:32768", "--option-kinds", "none"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_corpus(r.out).size(), 8u);
  EXPECT_EQ(run({"gen-os", "--cap", "10"}).code, 2);
}

TEST_F(CliTest, FingerprintStoreAndRank) {
  const auto corpus = data_path("corpora/os-small.corpus");
  const auto col = dir.str("col");
  for (const char* p : {"tcp-alpha", "tcp-beta", "tcp-gamma", "tcp-delta", "tcp-epsilon"}) {
    const auto r = run({"--collection", col, "fp-os", "192.0.2.10", "--corpus", corpus, "--sim", personality(p),
                        "--label", p});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("stored"), std::string::npos);
  }
  const auto ranked = run({"--collection", col, "fp-os", "192.0.2.10", "--corpus", corpus, "--sim",
                           personality("tcp-gamma")});
  ASSERT_EQ(ranked.code, 0) << ranked.err;
  EXPECT_EQ(std::count(ranked.out.begin(), ranked.out.end(), '\n'), 5);
  EXPECT_EQ(ranked.out.rfind("1. tcp-gamma  100.00%", 0), 0u) << ranked.out;
}

TEST_F(CliTest, NeverOverwritesStoredFingerprint) {
  const auto col = dir.str("col");
  const std::vector<std::string> args{"--collection", col, "fp-ftp", "localhost", "--corpus",
                                      data_path("corpora/ftp-release.corpus"), "--sim", personality("ftp-beta"),
                                      "--label", "VSFTPD 2.0.5"};
  ASSERT_EQ(run(args).code, 0);
  const auto before = read_text_file(col + "/ftp/vsftpd-2.0.5.fp");
  auto again = args;
  again[7] = personality("ftp-gamma");
  const auto r = run(again);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("already exists"), std::string::npos);
  EXPECT_EQ(read_text_file(col + "/ftp/vsftpd-2.0.5.fp"), before);
  EXPECT_EQ(load_fingerprint_file(col + "/ftp/vsftpd-2.0.5.fp").label, "VSFTPD 2.0.5");
}

TEST_F(CliTest, AnonymousRefusedExitsTwoAndStoresNothing) {
  std::ofstream(dir.str("closed.personality")) << "kind = ftp\nname = closed\nallow_anonymous = 0\n";
  const auto col = dir.str("col");
  const auto r = run({"--collection", col, "fp-ftp", "h", "--corpus", data_path("corpora/ftp-release.corpus"), "--sim",
                      dir.str("closed.personality"), "--label", "closed", "-o", dir.str("out.fp")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("refused"), std::string::npos);
  EXPECT_TRUE(Collection(col).list(Kind::ftp).empty());
  EXPECT_FALSE(std::filesystem::exists(dir.str("out.fp")));
}

TEST_F(CliTest, MatchFiles) {
  const auto a = data_path("collection/ftp/ftp-alpha-1.0.fp");
  const auto b = data_path("collection/ftp/ftp-alpha-1.1.fp");
  const auto r = run({"match", a, b});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, match_file(load_fingerprint_file(a), load_fingerprint_file(b)).to_string() + "\n");
  const auto mismatch = run({"match", a, data_path("collection/os/tcp-alpha.fp")});
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_EQ(run({"match", a, dir.str("missing.fp")}).code, 2);
}

TEST_F(CliTest, MatchChecksumMismatch) {
  auto fp = load_fingerprint_file(data_path("collection/ftp/ftp-beta.fp"));
  fp.corpus_checksum = "ffffffffffffffff";
  save_fingerprint_file(dir.str("other.fp"), fp);
  const auto r = run({"match", data_path("collection/ftp/ftp-beta.fp"), dir.str("other.fp")});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("different corpora"), std::string::npos);
}

TEST_F(CliTest, MatrixCsvStableAndEnvCollection) {
  ::setenv(cli::kCollectionEnv, data_path("collection").c_str(), 1);
  const auto a = run({"--format", "csv", "matrix", "--kind", "ftp"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 36);
  EXPECT_EQ(run({"--format", "csv", "matrix", "--kind", "ftp"}).out, a.out);
  EXPECT_NE(a.out.find("ftp-alpha-1.0,ftp-alpha-1.0,100.00\n"), std::string::npos);
}

TEST_F(CliTest, ConfigFilePrecedence) {
  const auto cfg = dir.str("fuzzprint.conf");
  std::ofstream(cfg) << "# settings\ncollection = " << data_path("collection") << "\nformat = csv\n";
  ::setenv(cli::kCollectionEnv, dir.str("nowhere").c_str(), 1);
  // config beats the environment
  const auto from_cfg = run({"--config", cfg, "matrix", "--kind", "os"});
  ASSERT_EQ(from_cfg.code, 0) << from_cfg.err;
  EXPECT_NE(from_cfg.out.find("tcp-alpha,tcp-alpha,100.00"), std::string::npos);
  // flags beat the config
  const auto from_flag = run({"--config", cfg, "--collection", dir.str("empty"), "--format", "table", "matrix"});
  EXPECT_EQ(from_flag.code, 2);  // empty collection
  std::ofstream(dir.str("bad.conf")) << "colour = blue\n";
  EXPECT_EQ(run({"--config", dir.str("bad.conf"), "matrix"}).code, 1);
  EXPECT_EQ(run({"--config", dir.str("absent.conf"), "matrix"}).code, 1);
}

TEST_F(CliTest, ExtractWritesReducedCorpus) {
  const auto out = dir.str("reduced.corpus");
  const auto r = run({"--collection", data_path("collection"), "extract", "--kind", "ftp", "--corpus",
                      data_path("corpora/ftp-small.corpus"), "-o", out});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto reduced = load_corpus(out);
  const auto parent = load_corpus(data_path("corpora/ftp-small.corpus"));
  EXPECT_EQ(reduced.parent_checksum, parent.checksum());
  EXPECT_LT(reduced.size(), parent.size());
  EXPECT_GT(reduced.size(), 0u);
}

TEST_F(CliTest, ScanSimulated) {
  const auto r = run({"scan", "192.0.2.10", "--sim", personality("tcp-delta")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "open port 23 on 192.0.2.10\n");
  const auto none = run({"scan", "192.0.2.10", "--ports", "20", "--sim", personality("tcp-delta")});
  EXPECT_EQ(none.code, 0);
  EXPECT_NE(none.out.find("no open port"), std::string::npos);
  EXPECT_EQ(run({"scan", "192.0.2.10", "--sim", personality("ftp-beta")}).code, 1);
}

TEST_F(CliTest, FpOsWithoutOpenPortFails) {
  const auto r = run({"--collection", dir.str("c"), "fp-os", "192.0.2.10", "--ports", "10", "--corpus",
                      data_path("corpora/os-small.corpus"), "--sim", personality("tcp-delta")});
  EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, SimEchoesNormalizedPersonality) {
  const auto r = run({"sim", personality("ftp-beta")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(parse_personality(r.out), load_personality(personality("ftp-beta")));
  std::ofstream(dir.str("broken.personality")) << "kind = ftp\nname = x\nreply.SITE = abc\n";
  EXPECT_EQ(run({"sim", dir.str("broken.personality")}).code, 2);
}
