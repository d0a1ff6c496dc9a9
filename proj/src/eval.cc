#include "snr/eval.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

using nlohmann::json;

namespace {

void check_pairing(const std::vector<TokenSeq>& hyp, const std::vector<TokenSeq>& ref) {
  if (hyp.empty()) throw DomainError("no hypotheses to score");
  if (hyp.size() != ref.size())
    throw DomainError(std::to_string(hyp.size()) + " hypotheses for " +
                      std::to_string(ref.size()) + " references");
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(const TokenSeq& seq, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> out;
  if (seq.size() < n) return out;
  for (std::size_t i = 0; i + n <= seq.size(); ++i)
    ++out[std::vector<std::string>(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                   seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

}  // namespace

double bleu(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references,
            int max_n) {
  check_pairing(hypotheses, references);
  if (max_n < 1 || max_n > 4) throw DomainError("BLEU order must be 1..4");
  std::vector<double> matched(static_cast<std::size_t>(max_n), 0.0);
  std::vector<double> total(static_cast<std::size_t>(max_n), 0.0);
  double hyp_len = 0.0, ref_len = 0.0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    hyp_len += static_cast<double>(hypotheses[s].size());
    ref_len += static_cast<double>(references[s].size());
    for (std::size_t n = 1; n <= static_cast<std::size_t>(max_n); ++n) {
      const auto h = ngram_counts(hypotheses[s], n);
      const auto r = ngram_counts(references[s], n);
      for (const auto& [gram, c] : h) {
        total[n - 1] += static_cast<double>(c);
        auto it = r.find(gram);
        if (it != r.end()) matched[n - 1] += static_cast<double>(std::min(c, it->second));
      }
    }
  }
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    if (matched[n] == 0.0 || total[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / total[n]);
  }
  const double bp = hyp_len < ref_len ? std::exp(1.0 - ref_len / hyp_len) : 1.0;
  return 100.0 * bp * std::exp(log_sum / max_n);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const std::vector<TokenSeq>& hypotheses, const std::vector<TokenSeq>& references) {
  check_pairing(hypotheses, references);
  double sum = 0.0;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    const auto lcs = static_cast<double>(lcs_length(hypotheses[s], references[s]));
    if (lcs == 0.0) continue;
    const double p = lcs / static_cast<double>(hypotheses[s].size());
    const double r = lcs / static_cast<double>(references[s].size());
    sum += 2.0 * p * r / (p + r);
  }
  return 100.0 * sum / static_cast<double>(hypotheses.size());
}

std::string EvalReport::to_json() const {
  json j;
  j["bleu1"] = bleu1;
  j["bleu2"] = bleu2;
  j["bleu3"] = bleu3;
  j["bleu4"] = bleu4;
  j["rouge"] = rouge;
  j["n_examples"] = n_examples;
  return j.dump(1);
}

EvalReport evaluate(const std::vector<TokenSeq>& hypotheses,
                    const std::vector<TokenSeq>& references) {
  EvalReport r;
  r.bleu1 = bleu(hypotheses, references, 1);
  r.bleu2 = bleu(hypotheses, references, 2);
  r.bleu3 = bleu(hypotheses, references, 3);
  r.bleu4 = bleu(hypotheses, references, 4);
  r.rouge = rouge_l(hypotheses, references);
  r.n_examples = hypotheses.size();
  return r;
}

std::string LatencyReport::to_json() const {
  json j = json::object();
  for (const auto& [name, s] : stages) j[name] = {{"ms", s.ms}, {"speedup", s.speedup}};
  return j.dump(1);
}

LatencyReport make_latency_report(const std::map<std::string, double>& stage_ms,
                                  double baseline_ms) {
  if (!(baseline_ms > 0.0) || !std::isfinite(baseline_ms))
    throw DomainError("baseline latency must be positive");
  LatencyReport out;
  for (const auto& [name, ms] : stage_ms) {
    if (!(ms > 0.0) || !std::isfinite(ms))
      throw DomainError("latency of stage '" + name + "' must be positive");
    out.stages[name] = {ms, baseline_ms / ms};
  }
  return out;
}

std::chrono::nanoseconds steady_now() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now().time_since_epoch());
}

std::map<std::string, double> time_stages(const std::map<std::string, Stage>& stages,
                                          const Corpus& corpus, int repeats, const Clock& clock) {
  if (repeats < 3) throw DomainError("latency benchmark needs at least 3 repeats");
  std::map<std::string, double> out;
  for (const auto& [name, stage] : stages) {
    stage(corpus);
    const auto start = clock();
    for (int r = 0; r < repeats; ++r) stage(corpus);
    const auto elapsed = clock() - start;
    double ms = std::chrono::duration<double, std::milli>(elapsed).count() / repeats;
    // A pass faster than the clock resolution still counts as a positive latency.
    out[name] = std::max(ms, 1e-6);
  }
  return out;
}

LatencyReport bench_latency(const std::map<std::string, Stage>& stages, const Corpus& corpus,
                            int repeats, double baseline_ms, const std::string& baseline_stage,
                            const Clock& clock) {
  const auto ms = time_stages(stages, corpus, repeats, clock);
  double base = baseline_ms;
  if (!(base > 0.0)) {
    auto it = ms.find(baseline_stage);
    if (it == ms.end()) throw DomainError("no baseline latency and no stage '" + baseline_stage + "'");
    base = it->second;
  }
  return make_latency_report(ms, base);
}

}  // namespace snr
