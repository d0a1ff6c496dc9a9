#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "snr/align.h"
#include "snr/corpus.h"

namespace snr {

// Probability per gloss-or-pad candidate. Sums to one.
using GlossDistribution = std::map<std::string, double>;

// Per-position gloss predictor: the output at one position never depends on
// the predictions made at other positions.
class SelectionScorer {
 public:
  virtual ~SelectionScorer() = default;
  virtual GlossDistribution score(const Sentence& sentence, std::size_t position) const = 0;
};

// Count-based word -> gloss-or-pad table with add-k smoothing over the
// candidates observed for the word plus the pad token.
class LexicalChoiceModel : public SelectionScorer {
 public:
  using CountTable = std::map<std::string, std::map<std::string, double>>;

  LexicalChoiceModel() = default;
  LexicalChoiceModel(CountTable table, double k);

  GlossDistribution score(const Sentence& sentence, std::size_t position) const override;
  GlossDistribution distribution(std::string_view word) const;
  double probability(std::string_view word, std::string_view gloss) const;

  const CountTable& table() const { return table_; }
  double smoothing() const { return k_; }

  std::string to_json() const;
  static LexicalChoiceModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static LexicalChoiceModel load(const std::filesystem::path& path);

 private:
  CountTable table_;
  double k_ = 0.0;
};

// Alignments keyed by example id.
using AlignmentIndex = std::unordered_map<std::string, OneToOneAlignment>;

LexicalChoiceModel train_lexical_model(const Corpus& corpus, const AlignmentIndex& alignments,
                                       double k = 0.0);

// Argmax per position. Ties go to the lexicographically smallest gloss with
// the pad token ranked after every gloss.
SpoGloss gs_decode(const SelectionScorer& scorer, const Sentence& sentence);

// Carried for a learned scorer; nothing in this library trains a network.
struct NeuralSelectionConfig {
  double dropout = 0.35;
  double reorder_dropout = 0.2;
  double learning_rate = 1e-4;
  double decrease_factor = 0.7;
  int patience = 5;
};

}  // namespace snr
