#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "snr/corpus.h"
#include "snr/embed.h"
#include "snr/matrix.h"

namespace snr {

enum class AlignmentSource { kStatic, kContextual, kCombined };

struct SoftAlignment {
  Matrix scores;  // G x W
  AlignmentSource source = AlignmentSource::kCombined;
};

struct AlignmentParams {
  // Static similarities at or below the threshold are dropped...
  double threshold = 0.9;
  // ...and the survivors are scaled by alpha before being added.
  double scale = 0.9;
  bool normalize = true;
};

// gloss index -> word index; total on glosses and injective.
struct OneToOneAlignment {
  std::vector<std::size_t> word_of_gloss;

  std::size_t num_glosses() const { return word_of_gloss.size(); }
  std::vector<std::pair<std::size_t, std::size_t>> pairs() const;

  bool operator==(const OneToOneAlignment&) const = default;
};

struct SpoGloss {
  std::vector<std::string> tokens;  // length W, '*' where no gloss aligns
};

struct SignOrderText {
  std::vector<std::string> tokens;
  std::vector<std::size_t> perm;  // output position -> source index
};

// Static-similarity matrix for an example; words or glosses missing from the
// table contribute zero. Gloss lookups fall back to the lowercased form.
Matrix static_alignment(const ParallelExample& example, const StaticEmbeddingTable& table,
                        bool normalize = true);

// scores = contextual + scale * [static > threshold] * static
Matrix combine_alignments(const Matrix& contextual, const Matrix& static_scores,
                          const AlignmentParams& params);

SoftAlignment build_soft_alignment(const ParallelExample& example,
                                   const StaticEmbeddingTable& static_table,
                                   const ContextualEmbeddingStore& store,
                                   const AlignmentParams& params = {});

enum class ExtractionMethod {
  kGreedy,   // repeatedly take the best remaining cell
  kOptimal,  // maximum-weight assignment (ablation)
};

OneToOneAlignment extract_one_to_one(const SoftAlignment& soft,
                                     ExtractionMethod method = ExtractionMethod::kGreedy);
OneToOneAlignment extract_one_to_one(const Matrix& scores,
                                     ExtractionMethod method = ExtractionMethod::kGreedy);

void validate_alignment(const ParallelExample& example, const OneToOneAlignment& a);

SpoGloss make_spo(const ParallelExample& example, const OneToOneAlignment& a);
SignOrderText make_sio(const ParallelExample& example, const OneToOneAlignment& a);

struct AlignmentRecord {
  std::string id;
  OneToOneAlignment alignment;
  SpoGloss spo;
  SignOrderText sio;
};

AlignmentRecord make_alignment_record(const ParallelExample& example, const OneToOneAlignment& a);

// JSONL: {"id", "pairs": [[g, w]...], "spo", "sio", "perm"}
std::string alignment_record_to_json(const AlignmentRecord& record);
std::vector<AlignmentRecord> parse_alignment_dump(std::string_view content);
std::vector<AlignmentRecord> load_alignment_dump(const std::filesystem::path& path);
void save_alignment_dump(const std::vector<AlignmentRecord>& records,
                         const std::filesystem::path& path);

}  // namespace snr
