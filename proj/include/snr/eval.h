#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "snr/corpus.h"

namespace snr {

using TokenSeq = std::vector<std::string>;

// Corpus BLEU with pooled clipped counts, no smoothing, uniform weights.
// Returns a value in [0, 100].
double bleu(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references,
            int max_n);

// Mean sentence-level ROUGE-L F1, in [0, 100].
double rouge_l(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references);

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

struct EvalReport {
  double bleu1 = 0.0, bleu2 = 0.0, bleu3 = 0.0, bleu4 = 0.0;
  double rouge = 0.0;
  std::size_t n_examples = 0;

  std::string to_json() const;
};

EvalReport evaluate(const std::vector<TokenSeq>& hypotheses,
                    const std::vector<TokenSeq>& references);

struct StageLatency {
  double ms = 0.0;
  double speedup = 1.0;
};

struct LatencyReport {
  std::map<std::string, StageLatency> stages;

  // {stage: {"ms": float, "speedup": float}}
  std::string to_json() const;
};

// Builds the report from already measured per-stage means.
LatencyReport make_latency_report(const std::map<std::string, double>& stage_ms,
                                  double baseline_ms);

using Stage = std::function<void(const Corpus&)>;
using Clock = std::function<std::chrono::nanoseconds()>;

std::chrono::nanoseconds steady_now();

// Per stage: one warm-up pass over the corpus, then the mean of `repeats`
// timed passes. Runs single-threaded on the calling thread.
std::map<std::string, double> time_stages(const std::map<std::string, Stage>& stages,
                                          const Corpus& corpus, int repeats,
                                          const Clock& clock = steady_now);

// Times the stages and reports speedups against `baseline_ms`, or against
// the stage named `baseline_stage` when baseline_ms is not positive.
LatencyReport bench_latency(const std::map<std::string, Stage>& stages, const Corpus& corpus,
                            int repeats, double baseline_ms,
                            const std::string& baseline_stage = {},
                            const Clock& clock = steady_now);

}  // namespace snr
