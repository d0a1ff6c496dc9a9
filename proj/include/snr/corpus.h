#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace snr {

// Reserved gloss-side token for source words without a gloss.
inline constexpr std::string_view kPadToken = "*";

struct Token {
  std::string surface;
  std::optional<std::string> lemma;
  std::optional<std::string> pos;
  std::optional<int> word_class;

  Token() = default;
  explicit Token(std::string s) : surface(std::move(s)) {}
  Token(std::string s, std::string tag) : surface(std::move(s)), pos(std::move(tag)) {}

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;

  Sentence() = default;
  explicit Sentence(std::vector<Token> t) : tokens(std::move(t)) {}

  static Sentence from_words(const std::vector<std::string>& words);

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  const Token& operator[](std::size_t i) const { return tokens[i]; }
  Token& operator[](std::size_t i) { return tokens[i]; }

  std::vector<std::string> words() const;

  bool operator==(const Sentence&) const = default;
};

struct ParallelExample {
  std::string id;
  Sentence text;
  Sentence gloss;
};

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

enum class CorpusFormat { kJsonl, kTsv };

using Vocabulary = std::map<std::string, std::size_t>;

// Immutable after construction. Vocabularies are recomputed from the
// examples, so they always equal the type sets of the contents.
class Corpus {
 public:
  Corpus() = default;
  Corpus(Split split, std::vector<ParallelExample> examples);

  Split split() const { return split_; }
  const std::vector<ParallelExample>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const Vocabulary& text_vocab() const { return text_vocab_; }
  const Vocabulary& gloss_vocab() const { return gloss_vocab_; }

  const ParallelExample* find(std::string_view id) const;

 private:
  Split split_ = Split::kTrain;
  std::vector<ParallelExample> examples_;
  std::unordered_map<std::string, std::size_t> index_;
  Vocabulary text_vocab_;
  Vocabulary gloss_vocab_;
};

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   Split split = Split::kTrain);
Corpus parse_corpus(std::string_view content, CorpusFormat format,
                    Split split = Split::kTrain);

// JSONL, one record per line, in the same schema load_corpus reads.
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Strips a trailing variant designator (digits, then optional letters) from
// a digit-free alphabetic base: HAUS1A -> HAUS. Tokens that would lose
// their base are left alone.
std::string strip_variant(std::string_view gloss);
Sentence normalize_gloss(const Sentence& gloss);

// Splits tokens into lexicon words when a full decomposition into at least
// two parts exists. Matching is case-insensitive (ASCII), longest prefix
// first with backtracking; the parts keep the original spelling.
Sentence split_compounds(const Sentence& sentence,
                         const std::unordered_set<std::string>& lexicon);
std::optional<std::vector<std::string>> decompose(
    std::string_view word, const std::unordered_set<std::string>& lexicon);

std::pair<Corpus, Corpus> filter_many_to_one(const Corpus& corpus);

class Lemmatizer {
 public:
  virtual ~Lemmatizer() = default;
  virtual std::string lemma(std::string_view word) const { return std::string(word); }
};

// Form -> lemma table read from "form<TAB>lemma" lines; unknown forms map to
// themselves.
class TableLemmatizer : public Lemmatizer {
 public:
  explicit TableLemmatizer(std::unordered_map<std::string, std::string> table)
      : table_(std::move(table)) {}
  static TableLemmatizer load(const std::filesystem::path& path);

  std::string lemma(std::string_view word) const override;

 private:
  std::unordered_map<std::string, std::string> table_;
};

// Share of gloss types whose lowercased, variant-stripped lemma occurs in the
// lowercased, lemmatized text vocabulary.
double lexical_overlap(const Corpus& corpus, const Lemmatizer& lemmatizer = Lemmatizer{});

std::string ascii_lower(std::string_view s);

}  // namespace snr
