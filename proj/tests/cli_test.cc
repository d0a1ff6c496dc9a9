#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "snr/cli.h"
#include "snr/reorder.h"

namespace snr {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("snr_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
    write_config(root_ / "config.json", root_ / "work", {});
  }
  void TearDown() override { fs::remove_all(root_); }

  void write_config(const fs::path& path, const fs::path& work, const nlohmann::json& extra) {
    const fs::path data = SNR_TEST_DATA_DIR;
    nlohmann::json c = {
        {"work_dir", work.string()},
        {"corpus", {{"train", (data / "e1_corpus.jsonl").string()},
                    {"test", (data / "e1_corpus.jsonl").string()}}},
        {"static_vectors", (data / "e1_static.vec").string()},
        {"contextual", (data / "e1_contextual.jsonl").string()},
        {"brown_k", 2},
        {"brown_min_count", 1}};
    for (const auto& [k, v] : extra.items()) c[k] = v;
    std::ofstream(path) << c.dump(1);
  }

  int run(std::vector<std::string> args, const fs::path& config = {}) {
    out_.str("");
    err_.str("");
    std::vector<std::string> argv = {"snr", "--config", (config.empty() ? root_ / "config.json" : config).string()};
    argv.insert(argv.end(), args.begin(), args.end());
    return run_command(argv, out_, err_);
  }

  void run_pipeline(const fs::path& config, const std::string& jobs) {
    ASSERT_EQ(run({"--jobs", jobs, "ingest"}, config), 0) << err_.str();
    ASSERT_EQ(run({"--jobs", jobs, "align", "--split", "train"}, config), 0) << err_.str();
    ASSERT_EQ(run({"--jobs", jobs, "align", "--split", "test"}, config), 0) << err_.str();
    ASSERT_EQ(run({"train-select"}, config), 0) << err_.str();
    ASSERT_EQ(run({"train-classes"}, config), 0) << err_.str();
    ASSERT_EQ(run({"train-preorder"}, config), 0) << err_.str();
    ASSERT_EQ(run({"--jobs", jobs, "translate", "--split", "test", "--reorder", "statistical"}, config), 0)
        << err_.str();
    ASSERT_EQ(run({"evaluate", "--split", "test"}, config), 0) << err_.str();
  }

  fs::path root_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, AlignWritesDumpAndSummary) {
  ASSERT_EQ(run({"ingest"}), 0) << err_.str();
  ASSERT_EQ(run({"align", "--split", "train"}), 0) << err_.str();
  EXPECT_EQ(out_.str(), "1 examples aligned\n");
  const auto line = slurp(root_ / "work" / "alignments_train.jsonl");
  EXPECT_NE(line.find(R"("perm":[2,3,0,1,4])"), std::string::npos) << line;
}

TEST_F(CliTest, StatisticalTranslationOfE1) {
  run_pipeline(root_ / "config.json", "1");
  const auto records = parse_translation_dump(slurp(root_ / "work" / "translations_test.jsonl"));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].gloss, (std::vector<std::string>{"YOU", "NAME", "WHAT"}));
  EXPECT_EQ(records[0].spo, (std::vector<std::string>{"WHAT", "*", "YOU", "NAME", "*"}));
  const auto report = nlohmann::json::parse(slurp(root_ / "work" / "report_test.json"));
  EXPECT_NEAR(report["bleu3"].get<double>(), 100.0, 1e-9);
  EXPECT_EQ(report["bleu4"].get<double>(), 0.0);  // three tokens, no 4-grams
  EXPECT_EQ(report["n_examples"].get<int>(), 1);
}

TEST_F(CliTest, OtherReorderModesAndPrint) {
  run_pipeline(root_ / "config.json", "1");
  ASSERT_EQ(run({"translate", "--split", "test", "--reorder", "none", "--print"}), 0) << err_.str();
  EXPECT_EQ(out_.str(), "e1\tWHAT YOU NAME\n1 examples translated\n");
  ASSERT_EQ(run({"translate", "--split", "test", "--reorder", "learned", "--spo", "aligned"}), 0)
      << err_.str();
  const auto records = parse_translation_dump(slurp(root_ / "work" / "translations_test.jsonl"));
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].gloss.size(), 3u);
}

TEST_F(CliTest, BenchWritesLatencyReport) {
  run_pipeline(root_ / "config.json", "1");
  ASSERT_EQ(run({"bench", "--split", "test", "--repeats", "3", "--baseline-ms", "4380"}), 0)
      << err_.str();
  const auto j = nlohmann::json::parse(slurp(root_ / "work" / "latency.json"));
  for (const char* stage : {"gs", "preorder", "snr"}) {
    EXPECT_GT(j[stage]["ms"].get<double>(), 0.0);
    EXPECT_NEAR(j[stage]["speedup"].get<double>(), 4380.0 / j[stage]["ms"].get<double>(), 1e-6);
  }
}

TEST_F(CliTest, ArtifactsAreDeterministic) {
  write_config(root_ / "a.json", root_ / "wa", {});
  write_config(root_ / "b.json", root_ / "wb", {});
  run_pipeline(root_ / "a.json", "1");
  run_pipeline(root_ / "b.json", "4");
  for (const char* f : {"corpus_train.jsonl", "alignments_train.jsonl", "alignments_test.jsonl",
                        "select_model.json", "classes.json", "preorder_model.json",
                        "translations_test.jsonl", "report_test.json"})
    EXPECT_EQ(slurp(root_ / "wa" / f), slurp(root_ / "wb" / f)) << f;
}

TEST_F(CliTest, UsageErrors) {
  std::vector<std::string> argv = {"snr", "frobnicate"};
  EXPECT_EQ(run_command(argv, out_, err_), 1);
  EXPECT_NE(err_.str().find("Usage"), std::string::npos) << err_.str();
  EXPECT_EQ(run_command({"snr"}, out_, err_), 1);
  EXPECT_EQ(run_command({"snr", "align"}, out_, err_), 1);
  EXPECT_EQ(run({"translate", "--reorder", "sideways"}), 1);
}

TEST_F(CliTest, Version) {
  EXPECT_EQ(run_command({"snr", "--version"}, out_, err_), 0);
  EXPECT_NE(out_.str().find(kVersion), std::string::npos);
}

TEST_F(CliTest, DataErrorsExitTwo) {
  EXPECT_EQ(run({"align", "--split", "train"}), 2);
  EXPECT_NE(err_.str().find("error"), std::string::npos);
  write_config(root_ / "bad.json", root_ / "work", {{"alpha", 1.5}});
  EXPECT_EQ(run({"ingest"}, root_ / "bad.json"), 2);
  write_config(root_ / "typo.json", root_ / "work", {{"alhpa", 0.5}});
  EXPECT_EQ(run({"ingest"}, root_ / "typo.json"), 2);
  EXPECT_EQ(run({"ingest"}, root_ / "missing.json"), 2);
}

TEST_F(CliTest, SeedFlagOverridesConfig) {
  ASSERT_EQ(run({"ingest"}), 0);
  ASSERT_EQ(run({"align", "--split", "train"}), 0);
  ASSERT_EQ(run({"train-classes"}), 0);
  ASSERT_EQ(run({"--seed", "99", "train-preorder"}), 0) << err_.str();
  EXPECT_NE(out_.str().find("preorder model"), std::string::npos);
}

}  // namespace
}  // namespace snr
