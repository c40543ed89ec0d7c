#include <acr/synth.hpp>

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result acr_cli(const std::string& args) {
  const std::string cmd = std::string(ACR_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("acr_cli_" + std::string(
        ::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path write(const std::string& name, const std::string& content) {
    const auto p = dir_ / name;
    fs::create_directories(p.parent_path());
    acr::detail::write_file(p, content);
    return p;
  }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, ParsePrintsCanonicalForm) {
  auto r = acr_cli("parse 'G#:min7/b3'");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "G#:min7/b3\n");
  r = acr_cli("parse Ab:min7/b3 C");
  EXPECT_EQ(r.out, "G#:min7/b3\nC:maj\n");
  r = acr_cli("parse H:maj");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("offset 0"), std::string::npos);
}

TEST_F(Cli, ValidateReportsLineNumbers) {
  const auto good = write("good.lab", "0 1 C:maj\n1 2 N\n");
  const auto bad = write("bad.lab", "0 2 C:maj\n1 3 D:min\n");
  EXPECT_EQ(acr_cli("validate " + good.string()).code, 0);
  const auto r = acr_cli("validate " + bad.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("line 2"), std::string::npos);
}

TEST_F(Cli, EvaluateIdentityFixture) {
  write("ref/a.lab", "0 2 C:maj\n2 3 B:dim\n3 4 N\n");
  write("ref/b.lab", "0 5 A:min7\n");
  write("pred/a.lab", "0 2 C:maj\n2 3 B:dim\n3 4 N\n");
  write("pred/b.lab", "0 5 A:min7\n");
  const auto r = acr_cli("evaluate --pred " + (dir_ / "pred").string() + " --ref " +
                         (dir_ / "ref").string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["wcsr"].get<double>(), 1.0);
  EXPECT_EQ(j["acqa"].get<double>(), 1.0);
  const auto out = dir_ / "out";
  EXPECT_EQ(acr_cli("evaluate --pred " + (dir_ / "pred").string() + " --ref " +
                    (dir_ / "ref").string() + " --output-dir " + out.string()).code, 0);
  EXPECT_TRUE(fs::exists(out / "metrics.json"));
  EXPECT_TRUE(fs::exists(out / "per_type.csv"));
  fs::remove(dir_ / "pred/b.lab");
  EXPECT_EQ(acr_cli("evaluate --pred " + (dir_ / "pred").string() + " --ref " +
                    (dir_ / "ref").string()).code, 2);
}

TEST_F(Cli, StatsEmitsDistribution) {
  write("labs/a.lab", "0 3 C:maj\n3 4 A:min\n");
  const auto r = acr_cli("stats " + (dir_ / "labs").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "class,share\nmaj,0.750000\nmin,0.250000\n");
}

TEST_F(Cli, SelectWritesDatasetAndReport) {
  const auto pseudo = write("p.jsonl",
      "{\"track\":\"a\",\"start\":0,\"end\":10,\"label\":\"C\",\"confidence\":0.9}\n"
      "{\"track\":\"a\",\"start\":10,\"end\":10.4,\"label\":\"B:dim\",\"confidence\":0.8}\n"
      "{\"track\":\"a\",\"start\":10.4,\"end\":60,\"label\":\"C\",\"confidence\":0.9}\n");
  const auto cfg = write("sel.json", R"({"min_length": 8, "labeled_total": 100})");
  const auto out = dir_ / "sel";
  const auto r = acr_cli("select --pseudolabels " + pseudo.string() + " --config " +
                         cfg.string() + " --output-dir " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(acr::detail::read_file(out / "excerpts.json"));
  EXPECT_NEAR(j["tracks"]["a"][0]["start"].get<double>(), 6.2, 1e-12);
  EXPECT_TRUE(fs::exists(out / "selection_report.csv"));
  const auto missing = write("nomin.json", "{}");
  EXPECT_EQ(acr_cli("select --pseudolabels " + pseudo.string() + " --config " +
                    missing.string()).code, 2);
}

TEST_F(Cli, SynthRunCompare) {
  const auto spec = write("spec.json",
      R"({"tracks": 3, "track_length": [10, 20], "noise_sigma": 0.1, "track_prefix": "s"})");
  const auto corpus = dir_ / "corpus";
  ASSERT_EQ(acr_cli("synth --spec " + spec.string() + " --seed 4 --output-dir " +
                    corpus.string()).code, 0);
  EXPECT_TRUE(fs::exists(corpus / "manifest.json"));
  EXPECT_TRUE(fs::exists(corpus / "s0.lab"));

  const auto cfg = write("exp.json", R"({
    "name": "cli",
    "labeled": "corpus",
    "unlabeled": {"synth": {"tracks": 3, "track_length": [10, 20], "noise_sigma": 0.1, "track_prefix": "u"}},
    "test": {"synth": {"tracks": 2, "track_length": [10, 20], "noise_sigma": 0.1, "track_prefix": "t"}},
    "iterations": 1,
    "train": {"epochs": 3},
    "selection": {"min_length": 4}
  })");
  const auto run1 = dir_ / "run1", run2 = dir_ / "run2";
  ASSERT_EQ(acr_cli("run --config " + cfg.string() + " --output-dir " + run1.string()).code, 0);
  ASSERT_EQ(acr_cli("--seed 0 run --config " + cfg.string() + " --output-dir " + run2.string()).code, 0);
  EXPECT_EQ(acr::detail::read_file(run1 / "reports.json"),
            acr::detail::read_file(run2 / "reports.json"));
  const auto r = acr_cli("compare " + (run1 / "reports.json").string() + " " +
                         (run2 / "reports.json").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("experiment,wcsr,acqa,best_iteration\ncli,", 0), 0u);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
  EXPECT_EQ(acr_cli("run --config " + cfg.string()).code, 1);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(acr_cli("").code, 1);
  EXPECT_EQ(acr_cli("bogus").code, 1);
  EXPECT_EQ(acr_cli("parse --unknown-flag C").code, 1);
  EXPECT_EQ(acr_cli("evaluate --pred x").code, 1);
}

TEST_F(Cli, EverySubcommandHasHelp) {
  for (const char* sub : {"parse", "validate", "stats", "evaluate", "select", "synth", "run",
                          "compare"}) {
    const auto r = acr_cli(std::string(sub) + " --help");
    EXPECT_EQ(r.code, 0) << sub;
    EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
  }
  EXPECT_EQ(acr_cli("--help").code, 0);
}
