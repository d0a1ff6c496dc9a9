#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "snr/corpus.h"

namespace snr {

struct PipelineConfig {
  std::filesystem::path work_dir = "work";
  std::map<Split, std::filesystem::path> corpus;
  CorpusFormat corpus_format = CorpusFormat::kJsonl;
  std::filesystem::path static_vectors;
  std::map<Split, std::filesystem::path> contextual;
  std::filesystem::path lemma_table;

  double alpha = 0.9;
  double threshold = 0.9;
  bool optimal_extraction = false;
  bool normalize_gloss = true;
  bool filter_many_to_one = true;

  double smoothing_k = 0.0;
  int brown_k = 50;
  int brown_min_count = 2;
  int preorder_iterations = 30;
  int preorder_beam = 20;
  double transition_k = 0.1;
  std::uint64_t seed = 1;

  // Throws DomainError naming the first offending key.
  void validate() const;
};

// Relative paths resolve against `base_dir`. Unknown keys are rejected.
PipelineConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace snr
