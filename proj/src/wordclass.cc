#include "snr/wordclass.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

using nlohmann::json;

namespace {

// Dense class-bigram statistics over the active clusters plus the two fixed
// classes (boundary, unknown), which occupy slots 0 and 1.
class ClusterState {
 public:
  ClusterState(std::size_t num_words, double total_bigrams)
      : num_words_(num_words), total_(total_bigrams), unit_slot_(num_words + 2, kInactive) {
    unit_slot_[boundary_unit()] = 0;
    unit_slot_[unknown_unit()] = 1;
    ids_ = {-1, -1};
    counts_.assign(2, std::vector<double>(2, 0.0));
  }

  std::size_t boundary_unit() const { return num_words_; }
  std::size_t unknown_unit() const { return num_words_ + 1; }
  std::size_t size() const { return ids_.size(); }
  std::size_t mergeable() const { return ids_.size() - 2; }
  int id(std::size_t slot) const { return ids_[slot]; }

  // neighbours[u] lists (unit, count) for bigrams u -> unit.
  void add_word(std::size_t word, const std::vector<std::vector<std::pair<std::size_t, double>>>& out_edges,
                const std::vector<std::vector<std::pair<std::size_t, double>>>& in_edges) {
    const std::size_t slot = ids_.size();
    ids_.push_back(static_cast<int>(word));
    for (auto& row : counts_) row.push_back(0.0);
    counts_.emplace_back(slot + 1, 0.0);
    unit_slot_[word] = slot;
    for (auto [to, c] : out_edges[word]) {
      const std::size_t s = unit_slot_[to];
      if (s != kInactive) counts_[slot][s] += c;
    }
    for (auto [from, c] : in_edges[word]) {
      if (from == word) continue;  // self-bigrams counted once above
      const std::size_t s = unit_slot_[from];
      if (s != kInactive) counts_[s][slot] += c;
    }
    refresh();
  }

  // Merges slot b into slot a (a < b).
  void merge(std::size_t a, std::size_t b) {
    const std::size_t n = size();
    for (std::size_t d = 0; d < n; ++d) counts_[a][d] += counts_[b][d];
    for (std::size_t c = 0; c < n; ++c) counts_[c][a] += counts_[c][b];
    counts_.erase(counts_.begin() + static_cast<std::ptrdiff_t>(b));
    for (auto& row : counts_) row.erase(row.begin() + static_cast<std::ptrdiff_t>(b));
    ids_.erase(ids_.begin() + static_cast<std::ptrdiff_t>(b));
    for (auto& s : unit_slot_) {
      if (s == kInactive) continue;
      if (s == b)
        s = a;
      else if (s > b)
        --s;
    }
    refresh();
  }

  void add_fixed_count(std::size_t from, std::size_t to, double c) {
    counts_[from][to] += c;
    refresh();
  }

  double ami() const { return ami_; }

  // AMI after merging slots a and b, from cached terms in O(size).
  double ami_after_merge(std::size_t a, std::size_t b) const {
    const std::size_t n = size();
    double removed = row_q_[a] + row_q_[b] + col_q_[a] + col_q_[b] -
                     (q_[a][a] + q_[a][b] + q_[b][a] + q_[b][b]);
    const double left_m = left_[a] + left_[b];
    const double right_m = right_[a] + right_[b];
    double added = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      if (d == a || d == b) continue;
      added += term(counts_[a][d] + counts_[b][d], left_m, right_[d]);
      added += term(counts_[d][a] + counts_[d][b], left_[d], right_m);
    }
    added += term(counts_[a][a] + counts_[a][b] + counts_[b][a] + counts_[b][b], left_m, right_m);
    return ami_ - removed + added;
  }

  std::vector<std::size_t> slot_of_word() const {
    return {unit_slot_.begin(), unit_slot_.begin() + static_cast<std::ptrdiff_t>(num_words_)};
  }

  static constexpr std::size_t kInactive = static_cast<std::size_t>(-1);

 private:
  double term(double n, double left, double right) const {
    if (n <= 0.0) return 0.0;
    return n / total_ * std::log(n * total_ / (left * right));
  }

  void refresh() {
    const std::size_t n = size();
    left_.assign(n, 0.0);
    right_.assign(n, 0.0);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t d = 0; d < n; ++d) {
        left_[c] += counts_[c][d];
        right_[d] += counts_[c][d];
      }
    q_.assign(n, std::vector<double>(n, 0.0));
    row_q_.assign(n, 0.0);
    col_q_.assign(n, 0.0);
    ami_ = 0.0;
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t d = 0; d < n; ++d) {
        const double v = term(counts_[c][d], left_[c], right_[d]);
        q_[c][d] = v;
        row_q_[c] += v;
        col_q_[d] += v;
        ami_ += v;
      }
  }

  std::size_t num_words_;
  double total_;
  std::vector<std::size_t> unit_slot_;
  std::vector<int> ids_;
  std::vector<std::vector<double>> counts_;
  std::vector<double> left_, right_, row_q_, col_q_;
  std::vector<std::vector<double>> q_;
  double ami_ = 0.0;
};

}  // namespace

int BrownClustering::class_of(std::string_view word) const {
  auto it = assignment.find(std::string(word));
  return it == assignment.end() ? K : it->second;
}

std::string BrownClustering::to_json() const {
  json j;
  j["K"] = K;
  j["assignment"] = assignment;
  return j.dump(1);
}

BrownClustering BrownClustering::from_json(std::string_view text) {
  BrownClustering out;
  try {
    json j = json::parse(text);
    out.K = j.at("K").get<int>();
    out.assignment = j.at("assignment").get<std::map<std::string, int>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad classes file: ") + e.what());
  }
  if (out.K < 1) throw FormatError("classes file has K < 1");
  for (const auto& [w, c] : out.assignment)
    if (c < 0 || c >= out.K) throw FormatError("class id out of range for '" + w + "'");
  return out;
}

void BrownClustering::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

BrownClustering BrownClustering::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open classes file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

BrownClustering train_brown(const std::vector<std::vector<std::string>>& sentences,
                            const BrownOptions& options) {
  const int K = options.num_classes;
  if (K < 2) throw DomainError("Brown clustering needs at least 2 classes");

  std::unordered_map<std::string, std::size_t> first_seen;
  std::vector<std::string> vocab;
  std::vector<std::size_t> freq;
  for (const auto& sent : sentences)
    for (const auto& w : sent) {
      auto [it, inserted] = first_seen.emplace(w, vocab.size());
      if (inserted) {
        vocab.push_back(w);
        freq.push_back(0);
      }
      ++freq[it->second];
    }

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < vocab.size(); ++i)
    if (freq[i] >= static_cast<std::size_t>(std::max(options.min_count, 1))) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return freq[a] > freq[b]; });
  const std::size_t n = order.size();
  if (n < static_cast<std::size_t>(K))
    throw DomainError("only " + std::to_string(n) + " words meet min_count, need " +
                      std::to_string(K));

  BrownClustering out;
  out.K = K;
  std::unordered_map<std::string, std::size_t> rank;
  for (std::size_t r = 0; r < n; ++r) {
    out.ranked_words.push_back(vocab[order[r]]);
    rank.emplace(vocab[order[r]], r);
  }

  // Units: ranks 0..n-1, then boundary, then unknown.
  const std::size_t boundary = n;
  const std::size_t unknown = n + 1;
  auto unit = [&](const std::string& w) {
    auto it = rank.find(w);
    return it == rank.end() ? unknown : it->second;
  };
  std::map<std::pair<std::size_t, std::size_t>, double> bigrams;
  double total = 0.0;
  for (const auto& sent : sentences) {
    if (sent.empty()) continue;
    std::size_t prev = boundary;
    for (const auto& w : sent) {
      const std::size_t u = unit(w);
      bigrams[{prev, u}] += 1.0;
      prev = u;
    }
    bigrams[{prev, boundary}] += 1.0;
    total += static_cast<double>(sent.size() + 1);
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> out_edges(n + 2), in_edges(n + 2);
  for (const auto& [key, c] : bigrams) {
    out_edges[key.first].emplace_back(key.second, c);
    in_edges[key.second].emplace_back(key.first, c);
  }

  ClusterState state(n, total);
  for (auto [to, c] : out_edges[boundary])
    if (to >= n) state.add_fixed_count(0, to == boundary ? 0 : 1, c);
  for (auto [to, c] : out_edges[unknown])
    if (to >= n) state.add_fixed_count(1, to == boundary ? 0 : 1, c);

  const std::size_t window =
      std::max<std::size_t>(options.window > 0 ? static_cast<std::size_t>(options.window)
                                               : 2 * static_cast<std::size_t>(K),
                            static_cast<std::size_t>(K));
  std::size_t next = 0;
  while (next < n && next < window) state.add_word(next++, out_edges, in_edges);

  auto merge_best = [&] {
    std::size_t best_a = 0, best_b = 0;
    double best = -std::numeric_limits<double>::infinity();
    // Slots are kept in ascending id order, so scanning (a, b) pairs in slot
    // order visits smaller id pairs first; only a clear improvement moves on.
    for (std::size_t a = 2; a < state.size(); ++a)
      for (std::size_t b = a + 1; b < state.size(); ++b) {
        const double v = state.ami_after_merge(a, b);
        if (best_b == 0 || v > best + 1e-12 * std::max(1.0, std::abs(best))) {
          best = v;
          best_a = a;
          best_b = b;
        }
      }
    const int id_a = state.id(best_a);
    const int id_b = state.id(best_b);
    state.merge(best_a, best_b);
    out.merge_log.push_back({id_a, id_b, state.ami()});
  };

  for (;;) {
    if (next < n) {
      state.add_word(next++, out_edges, in_edges);
      merge_best();
    } else if (state.mergeable() > static_cast<std::size_t>(K)) {
      merge_best();
    } else {
      break;
    }
  }

  const auto slots = state.slot_of_word();
  for (std::size_t r = 0; r < n; ++r)
    out.assignment[out.ranked_words[r]] = static_cast<int>(slots[r]) - 2;
  return out;
}

BrownClustering train_brown(const Corpus& corpus, const BrownOptions& options) {
  std::vector<std::vector<std::string>> sentences;
  sentences.reserve(corpus.size());
  for (const auto& ex : corpus.examples()) sentences.push_back(ex.text.words());
  return train_brown(sentences, options);
}

Sentence annotate_classes(const Sentence& sentence, const BrownClustering& clustering) {
  Sentence out = sentence;
  for (auto& t : out.tokens) t.word_class = clustering.class_of(t.surface);
  return out;
}

Corpus annotate_classes(const Corpus& corpus, const BrownClustering& clustering) {
  std::vector<ParallelExample> examples = corpus.examples();
  for (auto& ex : examples) ex.text = annotate_classes(ex.text, clustering);
  return Corpus(corpus.split(), std::move(examples));
}

}  // namespace snr
