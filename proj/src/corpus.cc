#include "snr/corpus.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

using nlohmann::json;

namespace {

std::vector<std::string> split_spaces(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_tabs(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t tab = s.find('\t', start);
    if (tab == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, tab - start));
    start = tab + 1;
  }
}

Sentence make_sentence(const std::vector<std::string>& words, std::size_t line,
                       const char* side) {
  if (words.empty()) throw SchemaError("line " + std::to_string(line) + ": empty " + side);
  for (const auto& w : words)
    if (w.empty())
      throw SchemaError("line " + std::to_string(line) + ": empty token in " + side);
  return Sentence::from_words(words);
}

void attach_pos(Sentence& text, const std::vector<std::string>& pos, std::size_t line) {
  if (pos.size() != text.size())
    throw SchemaError("line " + std::to_string(line) + ": pos list has " +
                      std::to_string(pos.size()) + " tags for " + std::to_string(text.size()) +
                      " text tokens");
  for (std::size_t i = 0; i < pos.size(); ++i) text[i].pos = pos[i];
}

std::vector<std::string> string_array(const json& record, const char* key, std::size_t line) {
  auto it = record.find(key);
  if (it == record.end()) throw ParseError(std::string("missing field '") + key + "'", line);
  if (!it->is_array()) throw ParseError(std::string("field '") + key + "' is not a list", line);
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string())
      throw ParseError(std::string("field '") + key + "' has a non-string entry", line);
    out.push_back(v.get<std::string>());
  }
  return out;
}

ParallelExample parse_jsonl_record(std::string_view line_text, std::size_t line) {
  json record;
  try {
    record = json::parse(line_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!record.is_object()) throw ParseError("record is not an object", line);
  auto id = record.find("id");
  if (id == record.end() || !id->is_string()) throw ParseError("missing string field 'id'", line);

  ParallelExample ex;
  ex.id = id->get<std::string>();
  ex.text = make_sentence(string_array(record, "text", line), line, "text");
  ex.gloss = make_sentence(string_array(record, "gloss", line), line, "gloss");
  if (record.contains("pos") && !record["pos"].is_null())
    attach_pos(ex.text, string_array(record, "pos", line), line);
  return ex;
}

ParallelExample parse_tsv_record(std::string_view line_text, std::size_t line) {
  auto cols = split_tabs(line_text);
  if (cols.size() < 3 || cols.size() > 4)
    throw ParseError("expected 3 or 4 tab-separated columns, got " + std::to_string(cols.size()),
                     line);
  ParallelExample ex;
  ex.id = cols[0];
  if (ex.id.empty()) throw ParseError("empty id", line);
  ex.text = make_sentence(split_spaces(cols[1]), line, "text");
  ex.gloss = make_sentence(split_spaces(cols[2]), line, "gloss");
  if (cols.size() == 4) attach_pos(ex.text, split_spaces(cols[3]), line);
  return ex;
}

bool is_ascii_alpha(unsigned char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
// Bytes of multi-byte UTF-8 sequences count as letters (umlauts, eszett).
bool is_letter(unsigned char c) { return is_ascii_alpha(c) || c >= 0x80; }

}  // namespace

Sentence Sentence::from_words(const std::vector<std::string>& words) {
  Sentence s;
  s.tokens.reserve(words.size());
  for (const auto& w : words) s.tokens.emplace_back(w);
  return s;
}

std::vector<std::string> Sentence::words() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw DomainError("unknown split '" + std::string(name) + "'");
}

Corpus::Corpus(Split split, std::vector<ParallelExample> examples)
    : split_(split), examples_(std::move(examples)) {
  for (std::size_t i = 0; i < examples_.size(); ++i) {
    const auto& ex = examples_[i];
    if (!index_.emplace(ex.id, i).second)
      throw SchemaError("duplicate example id '" + ex.id + "'");
    for (const auto& t : ex.text.tokens) ++text_vocab_[t.surface];
    for (const auto& t : ex.gloss.tokens) ++gloss_vocab_[t.surface];
  }
}

const ParallelExample* Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &examples_[it->second];
}

Corpus parse_corpus(std::string_view content, CorpusFormat format, Split split) {
  std::vector<ParallelExample> examples;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    examples.push_back(format == CorpusFormat::kJsonl ? parse_jsonl_record(line, line_no)
                                                      : parse_tsv_record(line, line_no));
  }
  return Corpus(split, std::move(examples));
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), format, split);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& ex : corpus.examples()) {
    json record;
    record["id"] = ex.id;
    record["text"] = ex.text.words();
    record["gloss"] = ex.gloss.words();
    bool has_pos = !ex.text.empty() &&
                   std::all_of(ex.text.tokens.begin(), ex.text.tokens.end(),
                               [](const Token& t) { return t.pos.has_value(); });
    if (has_pos) {
      std::vector<std::string> pos;
      for (const auto& t : ex.text.tokens) pos.push_back(*t.pos);
      record["pos"] = pos;
    }
    out += record.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << serialize_corpus(corpus);
}

std::string strip_variant(std::string_view gloss) {
  std::size_t end = gloss.size();
  while (end > 0 && is_ascii_alpha(static_cast<unsigned char>(gloss[end - 1]))) --end;
  std::size_t digits_end = end;
  while (end > 0 && is_digit(static_cast<unsigned char>(gloss[end - 1]))) --end;
  if (end == digits_end || end == 0) return std::string(gloss);
  std::string_view base = gloss.substr(0, end);
  if (!is_letter(static_cast<unsigned char>(base.back()))) return std::string(gloss);
  if (std::any_of(base.begin(), base.end(),
                  [](char c) { return is_digit(static_cast<unsigned char>(c)); }))
    return std::string(gloss);
  return std::string(base);
}

Sentence normalize_gloss(const Sentence& gloss) {
  Sentence out = gloss;
  for (auto& t : out.tokens) t.surface = strip_variant(t.surface);
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::optional<std::vector<std::string>> decompose(
    std::string_view word, const std::unordered_set<std::string>& lexicon) {
  const std::string lower = ascii_lower(word);
  const std::size_t n = lower.size();
  // reachable[i]: suffix starting at i decomposes fully. Filled right to left
  // so the longest-first walk below never backtracks into a dead end.
  std::vector<char> reachable(n + 1, 0);
  reachable[n] = 1;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = n; j > i; --j) {
      if (reachable[j] && lexicon.count(lower.substr(i, j - i))) {
        reachable[i] = 1;
        break;
      }
    }
  }
  if (!reachable[0] || n == 0) return std::nullopt;

  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = n;
    // The first part must be a proper prefix: at least two parts.
    if (i == 0) j = n - 1;
    for (; j > i; --j)
      if (reachable[j] && lexicon.count(lower.substr(i, j - i))) break;
    if (j == i) return std::nullopt;
    parts.emplace_back(word.substr(i, j - i));
    i = j;
  }
  return parts;
}

Sentence split_compounds(const Sentence& sentence,
                         const std::unordered_set<std::string>& lexicon) {
  if (lexicon.empty()) throw DomainError("compound lexicon is empty");
  std::unordered_set<std::string> lowered;
  lowered.reserve(lexicon.size());
  for (const auto& w : lexicon) lowered.insert(ascii_lower(w));

  Sentence out;
  for (const auto& tok : sentence.tokens) {
    auto parts = decompose(tok.surface, lowered);
    if (!parts) {
      out.tokens.push_back(tok);
      continue;
    }
    for (auto& p : *parts) {
      Token t = tok;
      t.surface = std::move(p);
      t.lemma.reset();
      t.word_class.reset();
      out.tokens.push_back(std::move(t));
    }
  }
  return out;
}

std::pair<Corpus, Corpus> filter_many_to_one(const Corpus& corpus) {
  std::vector<ParallelExample> kept;
  std::vector<ParallelExample> dropped;
  for (const auto& ex : corpus.examples())
    (ex.text.size() >= ex.gloss.size() ? kept : dropped).push_back(ex);
  return {Corpus(corpus.split(), std::move(kept)), Corpus(corpus.split(), std::move(dropped))};
}

TableLemmatizer TableLemmatizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lemma table " + path.string());
  std::unordered_map<std::string, std::string> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
      throw ParseError("expected 'form<TAB>lemma'", line_no);
    table[ascii_lower(cols[0])] = ascii_lower(cols[1]);
  }
  return TableLemmatizer(std::move(table));
}

std::string TableLemmatizer::lemma(std::string_view word) const {
  auto it = table_.find(std::string(word));
  return it == table_.end() ? std::string(word) : it->second;
}

double lexical_overlap(const Corpus& corpus, const Lemmatizer& lemmatizer) {
  if (corpus.empty()) throw DomainError("lexical overlap of an empty corpus");
  std::unordered_set<std::string> text_lemmas;
  for (const auto& [word, count] : corpus.text_vocab())
    text_lemmas.insert(lemmatizer.lemma(ascii_lower(word)));
  std::size_t hits = 0;
  for (const auto& [gloss, count] : corpus.gloss_vocab())
    if (text_lemmas.count(lemmatizer.lemma(ascii_lower(strip_variant(gloss))))) ++hits;
  return static_cast<double>(hits) / static_cast<double>(corpus.gloss_vocab().size());
}

}  // namespace snr
