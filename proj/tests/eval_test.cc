#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "snr/error.h"
#include "snr/eval.h"

namespace snr {
namespace {

using Seqs = std::vector<TokenSeq>;

TEST(Bleu, Examples) {
  EXPECT_NEAR(bleu({{"A", "B", "C", "D"}}, {{"A", "B", "C", "D"}}, 4), 100.0, 1e-9);
  EXPECT_NEAR(bleu({{"A", "B", "C"}}, {{"A", "C", "B"}}, 1), 100.0, 1e-9);
  EXPECT_EQ(bleu({{"A", "B", "C"}}, {{"A", "C", "B"}}, 2), 0.0);
  EXPECT_NEAR(bleu({{"A", "B"}}, {{"A", "B", "C", "D"}}, 1), 100.0 * std::exp(-1.0), 1e-9);
  EXPECT_NEAR(bleu({{"A", "B"}}, {{"A", "B", "C", "D"}}, 1), 36.79, 0.005);
}

TEST(Bleu, HigherOrderCanExceedLowerOrder) {
  // p1 = 2/3 after clipping A, p2 = 2/2
  const Seqs h = {{"A", "B", "A"}};
  const Seqs r = {{"B", "A", "B"}};
  EXPECT_NEAR(bleu(h, r, 1), 100.0 * 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(bleu(h, r, 2), 100.0 * std::sqrt(2.0 / 3.0), 1e-9);
  EXPECT_GT(bleu(h, r, 2), bleu(h, r, 1));
}

TEST(Bleu, ClipsAndPools) {
  // Clipped unigram precision 2/4 on the first pair, 1/1 on the second: pooled 3/5.
  const Seqs h = {{"A", "A", "A", "A"}, {"B"}};
  const Seqs r = {{"A", "A", "C", "D"}, {"B"}};
  EXPECT_NEAR(bleu(h, r, 1), 60.0, 1e-9);
}

TEST(Bleu, Errors) {
  EXPECT_THROW(bleu({}, {}, 4), DomainError);
  EXPECT_THROW(bleu({{"A"}}, {}, 1), DomainError);
  EXPECT_THROW(bleu({{"A"}}, {{"A"}}, 5), DomainError);
  EXPECT_THROW(bleu({{"A"}}, {{"A"}}, 0), DomainError);
}

TEST(Bleu, Properties) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    Seqs h, r;
    for (std::size_t s = 0, n = 1 + rng() % 6; s < n; ++s) {
      TokenSeq ref, hyp;
      for (std::size_t k = 0, len = 1 + rng() % 8; k < len; ++k) ref.push_back(std::string(1, "ABCD"[rng() % 4]));
      for (std::size_t k = 0, len = 1 + rng() % 8; k < len; ++k) hyp.push_back(std::string(1, "ABCD"[rng() % 4]));
      h.push_back(hyp);
      r.push_back(ref);
    }
    for (int n = 1; n <= 4; ++n) {
      const double b = bleu(h, r, n);
      EXPECT_GE(b, 0.0);
      EXPECT_LE(b, 100.0 + 1e-9);
    }
    const double rouge = rouge_l(h, r);
    EXPECT_GE(rouge, 0.0);
    EXPECT_LE(rouge, 100.0 + 1e-9);

    // Pair order does not matter.
    std::vector<std::size_t> idx(h.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    Seqs h2, r2;
    for (auto i : idx) {
      h2.push_back(h[i]);
      r2.push_back(r[i]);
    }
    EXPECT_NEAR(bleu(h2, r2, 4), bleu(h, r, 4), 1e-9);
    EXPECT_NEAR(rouge_l(h2, r2), rouge, 1e-9);

    // Unigram BLEU ignores order within a sentence.
    Seqs shuffled = r;
    for (auto& s : shuffled) std::shuffle(s.begin(), s.end(), rng);
    EXPECT_NEAR(bleu(shuffled, r, 1), 100.0, 1e-9);
  }
}

TEST(Rouge, Examples) {
  EXPECT_NEAR(rouge_l({{"A", "B", "C"}}, {{"A", "B", "C"}}), 100.0, 1e-9);
  EXPECT_NEAR(rouge_l({{"A", "B", "C"}}, {{"A", "C"}}), 80.0, 1e-9);
  EXPECT_EQ(rouge_l({{"A", "B"}}, {{"C", "D"}}), 0.0);
  EXPECT_NEAR(rouge_l({{"A", "B", "C"}, {"X"}}, {{"A", "C"}, {"Y"}}), 40.0, 1e-9);
  EXPECT_EQ(lcs_length({"A", "B", "C", "B", "D", "A", "B"}, {"B", "D", "C", "A", "B", "A"}), 4u);
  EXPECT_THROW(rouge_l({}, {}), DomainError);
}

TEST(Report, JsonFields) {
  const auto r = evaluate({{"A", "B", "C", "D"}}, {{"A", "B", "C", "D"}});
  const auto j = nlohmann::json::parse(r.to_json());
  for (const char* k : {"bleu1", "bleu2", "bleu3", "bleu4", "rouge"})
    EXPECT_NEAR(j.at(k).get<double>(), 100.0, 1e-9) << k;
  EXPECT_EQ(j.at("n_examples").get<std::size_t>(), 1u);
}

TEST(Latency, SpeedupsFromInjectedTimings) {
  const auto r = make_latency_report({{"gs", 239.0}, {"snr", 1420.0}, {"base", 4380.0}}, 4380.0);
  EXPECT_NEAR(r.stages.at("gs").speedup, 4380.0 / 239.0, 1e-12);
  EXPECT_NEAR(r.stages.at("snr").speedup, 4380.0 / 1420.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.stages.at("base").speedup, 1.0);
  EXPECT_NEAR(r.stages.at("snr").speedup, 3.08, 0.005);
  EXPECT_THROW(make_latency_report({{"x", 0.0}}, 1.0), DomainError);
  EXPECT_THROW(make_latency_report({{"x", 1.0}}, -1.0), DomainError);
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_DOUBLE_EQ(j["gs"]["ms"].get<double>(), 239.0);
}

TEST(Latency, BenchUsesWarmupAndMeanWithFakeClock) {
  // Each stage call advances the fake clock by a fixed cost.
  std::chrono::nanoseconds now{0};
  std::map<std::string, int> calls;
  std::map<std::string, Stage> stages;
  stages["fast"] = [&](const Corpus&) {
    ++calls["fast"];
    now += std::chrono::milliseconds(2);
  };
  stages["slow"] = [&](const Corpus&) {
    ++calls["slow"];
    now += std::chrono::milliseconds(8);
  };
  const auto r = bench_latency(stages, Corpus{}, 4, 0.0, "slow", [&] { return now; });
  EXPECT_EQ(calls["fast"], 5);
  EXPECT_EQ(calls["slow"], 5);
  EXPECT_NEAR(r.stages.at("fast").ms, 2.0, 1e-9);
  EXPECT_NEAR(r.stages.at("slow").ms, 8.0, 1e-9);
  EXPECT_NEAR(r.stages.at("fast").speedup, 4.0, 1e-9);
  EXPECT_THROW(bench_latency(stages, Corpus{}, 2, 1.0), DomainError);
  EXPECT_THROW(bench_latency(stages, Corpus{}, 3, 0.0, "missing", [&] { return now; }), DomainError);
}

}  // namespace
}  // namespace snr
