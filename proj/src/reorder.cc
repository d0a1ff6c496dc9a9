#include "snr/reorder.h"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

using nlohmann::json;

ReorderMask::ReorderMask(std::span<const std::string> input) {
  for (const auto& tok : input) {
    auto it = std::find(tokens_.begin(), tokens_.end(), tok);
    if (it == tokens_.end()) {
      tokens_.push_back(tok);
      counts_.push_back(1);
    } else {
      ++counts_[static_cast<std::size_t>(it - tokens_.begin())];
    }
  }
  total_ = input.size();
}

std::size_t ReorderMask::remaining(std::string_view token) const {
  for (std::size_t k = 0; k < tokens_.size(); ++k)
    if (tokens_[k] == token) return counts_[k];
  return 0;
}

void ReorderMask::take(std::size_t k) {
  if (k >= counts_.size() || counts_[k] == 0)
    throw InvariantError("reorder mask has no copy of that token left");
  --counts_[k];
  --total_;
}

ClassBigramScorer::ClassBigramScorer(BrownClustering clustering,
                                     std::map<std::pair<int, int>, double> counts, double k)
    : clustering_(std::move(clustering)), counts_(std::move(counts)), k_(k) {
  if (!(k_ > 0.0) || !std::isfinite(k_))
    throw DomainError("transition smoothing k must be positive");
  for (const auto& [key, c] : counts_) context_totals_[key.first] += c;
}

double ClassBigramScorer::class_score(int previous_class, int candidate_class) const {
  const double support = static_cast<double>(clustering_.K + 1);
  auto it = counts_.find({previous_class, candidate_class});
  const double c = it == counts_.end() ? 0.0 : it->second;
  auto tot = context_totals_.find(previous_class);
  const double total = tot == context_totals_.end() ? 0.0 : tot->second;
  return std::log((c + k_) / (total + k_ * support));
}

double ClassBigramScorer::score(std::span<const std::string> history, std::string_view candidate,
                                std::size_t position) const {
  const int prev = position == 0 || history.empty() ? boundary_class()
                                                     : clustering_.class_of(history.back());
  return class_score(prev, clustering_.class_of(candidate));
}

ClassBigramScorer train_transition_model(const std::vector<SignOrderText>& sio_corpus,
                                         const BrownClustering& clustering, double k) {
  std::map<std::pair<int, int>, double> counts;
  const int boundary = clustering.K + 1;
  for (const auto& sio : sio_corpus) {
    int prev = boundary;
    for (const auto& tok : sio.tokens) {
      const int c = clustering.class_of(tok);
      counts[{prev, c}] += 1.0;
      prev = c;
    }
  }
  return ClassBigramScorer(clustering, std::move(counts), k);
}

std::vector<std::string> constrained_decode(const TransitionScorer& scorer,
                                            std::span<const std::string> input,
                                            const MaskObserver& observer) {
  if (input.empty()) throw DomainError("constrained decoding of an empty input");
  ReorderMask mask(input);
  std::vector<std::string> output;
  output.reserve(input.size());
  for (std::size_t pos = 0; pos < input.size(); ++pos) {
    std::size_t best = mask.tokens().size();
    double best_score = 0.0;
    for (std::size_t k = 0; k < mask.tokens().size(); ++k) {
      if (mask.count_at(k) == 0) continue;
      const double s = scorer.score(output, mask.tokens()[k], pos);
      if (!std::isfinite(s)) throw DomainError("transition scorer returned a non-finite score");
      if (best == mask.tokens().size() || s > best_score) {
        best = k;
        best_score = s;
      }
    }
    if (best == mask.tokens().size()) throw InvariantError("reorder mask exhausted early");
    mask.take(best);
    output.push_back(mask.tokens()[best]);
    if (observer) observer(pos, mask);
  }
  return output;
}

Mapping::Mapping(std::vector<std::size_t> perm) : perm_(std::move(perm)) {
  std::vector<char> seen(perm_.size(), 0);
  for (std::size_t p : perm_) {
    if (p >= perm_.size() || seen[p]) throw DomainError("mapping is not a bijection");
    seen[p] = 1;
  }
}

Mapping Mapping::identity(std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  return Mapping(std::move(perm));
}

Mapping extract_mapping(std::span<const std::string> input, std::span<const std::string> output) {
  if (input.size() != output.size())
    throw DomainError("output is not a permutation of the input (lengths differ)");
  std::vector<char> used(input.size(), 0);
  std::vector<std::size_t> perm;
  perm.reserve(output.size());
  for (const auto& tok : output) {
    std::size_t found = input.size();
    for (std::size_t i = 0; i < input.size(); ++i)
      if (!used[i] && input[i] == tok) {
        found = i;
        break;
      }
    if (found == input.size())
      throw DomainError("output token '" + tok + "' has no unused copy in the input");
    used[found] = 1;
    perm.push_back(found);
  }
  return Mapping(std::move(perm));
}

std::vector<std::string> apply_mapping(const Mapping& m, std::span<const std::string> seq) {
  if (seq.size() != m.size())
    throw DomainError("mapping of length " + std::to_string(m.size()) +
                      " applied to a sequence of length " + std::to_string(seq.size()));
  std::vector<std::string> out;
  out.reserve(seq.size());
  for (std::size_t src : m.perm()) out.push_back(seq[src]);
  return out;
}

std::vector<std::string> compose_translation(const SpoGloss& spo, const Mapping& m,
                                             bool strip_pads) {
  auto out = apply_mapping(m, spo.tokens);
  if (strip_pads) std::erase(out, std::string(kPadToken));
  return out;
}

std::string translation_record_to_json(const TranslationRecord& record) {
  json j;
  j["id"] = record.id;
  j["spo"] = record.spo;
  j["perm"] = record.perm;
  j["gloss"] = record.gloss;
  return j.dump();
}

std::vector<TranslationRecord> parse_translation_dump(std::string_view content) {
  std::vector<TranslationRecord> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      json j = json::parse(line);
      TranslationRecord r;
      r.id = j.at("id").get<std::string>();
      r.spo = j.at("spo").get<std::vector<std::string>>();
      r.perm = j.at("perm").get<std::vector<std::size_t>>();
      r.gloss = j.at("gloss").get<std::vector<std::string>>();
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad translation record: ") + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace snr
