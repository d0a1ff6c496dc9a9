#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "snr/corpus.h"

namespace snr {

struct BrownOptions {
  int num_classes = 50;
  // Active cluster window; 0 means twice the number of classes.
  int window = 0;
  int min_count = 2;
};

struct MergeRecord {
  // Cluster ids are frequency ranks of the cluster's first word; the merged
  // cluster keeps the smaller id.
  int class_a = 0;
  int class_b = 0;
  double ami = 0.0;  // after the merge, over the active clusters
};

struct BrownClustering {
  int K = 0;
  std::map<std::string, int> assignment;
  std::vector<MergeRecord> merge_log;
  // Eligible words by frequency rank; index == initial cluster id.
  std::vector<std::string> ranked_words;

  // Unknown words (and the empty string) map to K.
  int class_of(std::string_view word) const;

  std::string to_json() const;
  static BrownClustering from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static BrownClustering load(const std::filesystem::path& path);
};

// Windowed agglomerative clustering on class bigrams. Sentence boundaries
// and below-threshold words form two fixed classes that take part in the
// statistics but are never merged.
BrownClustering train_brown(const std::vector<std::vector<std::string>>& sentences,
                            const BrownOptions& options);
BrownClustering train_brown(const Corpus& corpus, const BrownOptions& options);

// Fills Token::word_class on every text token.
Sentence annotate_classes(const Sentence& sentence, const BrownClustering& clustering);
Corpus annotate_classes(const Corpus& corpus, const BrownClustering& clustering);

}  // namespace snr
