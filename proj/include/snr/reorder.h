#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snr/align.h"
#include "snr/wordclass.h"

namespace snr {

// Remaining copies of each input token during constrained decoding. Tokens
// are kept in first-occurrence order of the input.
class ReorderMask {
 public:
  explicit ReorderMask(std::span<const std::string> input);

  std::size_t remaining(std::string_view token) const;
  std::size_t total() const { return total_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t count_at(std::size_t k) const { return counts_[k]; }
  void take(std::size_t k);

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> counts_;
  std::size_t total_ = 0;
};

class TransitionScorer {
 public:
  virtual ~TransitionScorer() = default;
  virtual double score(std::span<const std::string> history, std::string_view candidate,
                       std::size_t position) const = 0;
};

// log P(class(candidate) | class(previous output)), add-k smoothed over the
// K + 1 word classes; a boundary class conditions position 0.
class ClassBigramScorer : public TransitionScorer {
 public:
  ClassBigramScorer(BrownClustering clustering, std::map<std::pair<int, int>, double> counts, double k);

  double score(std::span<const std::string> history, std::string_view candidate,
               std::size_t position) const override;
  double class_score(int previous_class, int candidate_class) const;

  int boundary_class() const { return clustering_.K + 1; }

 private:
  BrownClustering clustering_;
  std::map<std::pair<int, int>, double> counts_;
  std::map<int, double> context_totals_;
  double k_;
};

ClassBigramScorer train_transition_model(const std::vector<SignOrderText>& sio_corpus,
                                         const BrownClustering& clustering, double k);

using MaskObserver = std::function<void(std::size_t step, const ReorderMask& mask)>;

// Greedy decoding restricted to the input multiset: every output position
// takes the best-scoring token with copies left (ties: earliest in input).
std::vector<std::string> constrained_decode(const TransitionScorer& scorer,
                                            std::span<const std::string> input,
                                            const MaskObserver& observer = {});

// Output position p takes input index perm[p].
class Mapping {
 public:
  Mapping() = default;
  explicit Mapping(std::vector<std::size_t> perm);

  static Mapping identity(std::size_t n);

  const std::vector<std::size_t>& perm() const { return perm_; }
  std::size_t size() const { return perm_.size(); }

  bool operator==(const Mapping&) const = default;

 private:
  std::vector<std::size_t> perm_;
};

// Stable: duplicate tokens match the smallest unused input index.
Mapping extract_mapping(std::span<const std::string> input, std::span<const std::string> output);

std::vector<std::string> apply_mapping(const Mapping& m, std::span<const std::string> seq);

std::vector<std::string> compose_translation(const SpoGloss& spo, const Mapping& m,
                                             bool strip_pads = true);

struct TranslationRecord {
  std::string id;
  std::vector<std::string> spo;
  std::vector<std::size_t> perm;
  std::vector<std::string> gloss;
};

// JSONL: {"id", "spo", "perm", "gloss"}
std::string translation_record_to_json(const TranslationRecord& record);
std::vector<TranslationRecord> parse_translation_dump(std::string_view content);

}  // namespace snr
