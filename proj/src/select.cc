#include "snr/select.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

using nlohmann::json;

LexicalChoiceModel::LexicalChoiceModel(CountTable table, double k)
    : table_(std::move(table)), k_(k) {
  if (!(k_ >= 0.0) || !std::isfinite(k_)) throw DomainError("smoothing k must be >= 0");
  for (const auto& [word, counts] : table_) {
    double total = 0.0;
    for (const auto& [gloss, c] : counts) {
      if (!(c >= 0.0) || !std::isfinite(c))
        throw DomainError("negative or non-finite count for '" + word + "'");
      total += c;
    }
    if (total < 1.0) throw DomainError("word '" + word + "' has total count below one");
  }
}

GlossDistribution LexicalChoiceModel::distribution(std::string_view word) const {
  auto it = table_.find(std::string(word));
  if (it == table_.end()) return {{std::string(kPadToken), 1.0}};
  GlossDistribution dist = it->second;
  dist.try_emplace(std::string(kPadToken), 0.0);
  double total = 0.0;
  for (const auto& [g, c] : dist) total += c;
  const double denom = total + k_ * static_cast<double>(dist.size());
  for (auto& [g, c] : dist) c = (c + k_) / denom;
  return dist;
}

double LexicalChoiceModel::probability(std::string_view word, std::string_view gloss) const {
  auto dist = distribution(word);
  auto it = dist.find(std::string(gloss));
  return it == dist.end() ? 0.0 : it->second;
}

GlossDistribution LexicalChoiceModel::score(const Sentence& sentence, std::size_t position) const {
  if (position >= sentence.size()) throw DomainError("position past the end of the sentence");
  return distribution(sentence[position].surface);
}

std::string LexicalChoiceModel::to_json() const {
  json j;
  j["k"] = k_;
  j["table"] = json::object();
  for (const auto& [word, counts] : table_) j["table"][word] = counts;
  return j.dump(1);
}

LexicalChoiceModel LexicalChoiceModel::from_json(std::string_view text) {
  try {
    json j = json::parse(text);
    return LexicalChoiceModel(j.at("table").get<CountTable>(), j.at("k").get<double>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad selection model: ") + e.what());
  }
}

void LexicalChoiceModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

LexicalChoiceModel LexicalChoiceModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open selection model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

LexicalChoiceModel train_lexical_model(const Corpus& corpus, const AlignmentIndex& alignments,
                                       double k) {
  LexicalChoiceModel::CountTable table;
  for (const auto& ex : corpus.examples()) {
    auto it = alignments.find(ex.id);
    if (it == alignments.end()) throw TrainingError("no alignment for example '" + ex.id + "'");
    const SpoGloss spo = make_spo(ex, it->second);
    for (std::size_t w = 0; w < ex.text.size(); ++w) table[ex.text[w].surface][spo.tokens[w]] += 1.0;
  }
  return LexicalChoiceModel(std::move(table), k);
}

SpoGloss gs_decode(const SelectionScorer& scorer, const Sentence& sentence) {
  SpoGloss out;
  out.tokens.reserve(sentence.size());
  for (std::size_t w = 0; w < sentence.size(); ++w) {
    const GlossDistribution dist = scorer.score(sentence, w);
    const std::string* best = nullptr;
    double best_p = -1.0;
    // std::map iterates glosses in lexicographic order; '>' keeps the first.
    for (const auto& [gloss, p] : dist) {
      if (gloss == kPadToken) continue;
      if (p > best_p) {
        best = &gloss;
        best_p = p;
      }
    }
    auto pad = dist.find(std::string(kPadToken));
    if (pad != dist.end() && pad->second > best_p) best = &pad->first;
    out.tokens.push_back(best ? *best : std::string(kPadToken));
  }
  return out;
}

}  // namespace snr
