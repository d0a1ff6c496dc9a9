#include "snr/align.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

using nlohmann::json;

std::vector<std::pair<std::size_t, std::size_t>> OneToOneAlignment::pairs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(word_of_gloss.size());
  for (std::size_t g = 0; g < word_of_gloss.size(); ++g) out.emplace_back(g, word_of_gloss[g]);
  return out;
}

Matrix static_alignment(const ParallelExample& example, const StaticEmbeddingTable& table,
                        bool normalize) {
  const std::size_t dim = table.dim();
  const std::size_t G = example.gloss.size();
  const std::size_t W = example.text.size();
  // Absent rows stay zero and therefore score zero against everything.
  Matrix gloss_vecs(G, dim);
  Matrix text_vecs(W, dim);
  auto fill = [&](Matrix& m, std::size_t r, const std::string& word, bool lower_fallback) {
    auto vec = table.lookup(word);
    if (!vec && lower_fallback) vec = table.lookup(ascii_lower(word));
    if (!vec) return;
    std::copy(vec->begin(), vec->end(), m.row(r).begin());
  };
  for (std::size_t g = 0; g < G; ++g) fill(gloss_vecs, g, example.gloss[g].surface, true);
  for (std::size_t w = 0; w < W; ++w) fill(text_vecs, w, example.text[w].surface, false);
  return similarity_matrix(gloss_vecs, text_vecs, normalize);
}

Matrix combine_alignments(const Matrix& contextual, const Matrix& static_scores,
                          const AlignmentParams& params) {
  if (contextual.rows() != static_scores.rows() || contextual.cols() != static_scores.cols())
    throw DomainError("alignment matrices differ in shape");
  Matrix out = contextual;
  for (std::size_t g = 0; g < out.rows(); ++g)
    for (std::size_t w = 0; w < out.cols(); ++w) {
      const double s = static_scores(g, w);
      if (s > params.threshold) out(g, w) += params.scale * s;
    }
  return out;
}

SoftAlignment build_soft_alignment(const ParallelExample& example,
                                   const StaticEmbeddingTable& static_table,
                                   const ContextualEmbeddingStore& store,
                                   const AlignmentParams& params) {
  if (!(params.scale > 0.0 && params.scale <= 1.0))
    throw DomainError("alignment scale must lie in (0, 1]");
  const Matrix* text_ctx = store.find(example.id, Side::kText);
  if (!text_ctx) throw LookupError("no contextual vectors for (" + example.id + ", text)");
  const Matrix* gloss_ctx = store.find(example.id, Side::kGloss);
  if (!gloss_ctx) throw LookupError("no contextual vectors for (" + example.id + ", gloss)");
  if (text_ctx->rows() != example.text.size())
    throw FormatError("contextual text vectors for '" + example.id + "' have " +
                      std::to_string(text_ctx->rows()) + " rows for " +
                      std::to_string(example.text.size()) + " tokens");
  if (gloss_ctx->rows() != example.gloss.size())
    throw FormatError("contextual gloss vectors for '" + example.id + "' have " +
                      std::to_string(gloss_ctx->rows()) + " rows for " +
                      std::to_string(example.gloss.size()) + " tokens");

  const Matrix contextual = similarity_matrix(*gloss_ctx, *text_ctx, params.normalize);
  const Matrix stat = static_alignment(example, static_table, params.normalize);
  return {combine_alignments(contextual, stat, params), AlignmentSource::kCombined};
}

namespace {

OneToOneAlignment extract_greedy(const Matrix& scores) {
  const std::size_t G = scores.rows();
  const std::size_t W = scores.cols();
  std::vector<std::size_t> cells(G * W);
  std::iota(cells.begin(), cells.end(), std::size_t{0});
  // Row-major index order already encodes the (smaller g, smaller w) tie-break.
  std::stable_sort(cells.begin(), cells.end(), [&](std::size_t a, std::size_t b) {
    return scores(a / W, a % W) > scores(b / W, b % W);
  });

  constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
  OneToOneAlignment out{std::vector<std::size_t>(G, kUnset)};
  std::vector<char> word_used(W, 0);
  std::size_t assigned = 0;
  for (std::size_t cell : cells) {
    const std::size_t g = cell / W;
    const std::size_t w = cell % W;
    if (out.word_of_gloss[g] != kUnset || word_used[w]) continue;
    out.word_of_gloss[g] = w;
    word_used[w] = 1;
    if (++assigned == G) break;
  }
  return out;
}

// Hungarian algorithm on cost = -score (rows <= cols), potentials form.
OneToOneAlignment extract_optimal(const Matrix& scores) {
  const std::size_t n = scores.rows();
  const std::size_t m = scores.cols();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = -scores(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  OneToOneAlignment out{std::vector<std::size_t>(n, 0)};
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) out.word_of_gloss[p[j] - 1] = j - 1;
  return out;
}

}  // namespace

OneToOneAlignment extract_one_to_one(const Matrix& scores, ExtractionMethod method) {
  if (scores.rows() > scores.cols())
    throw DomainError("cannot align " + std::to_string(scores.rows()) + " glosses one-to-one to " +
                      std::to_string(scores.cols()) + " words");
  for (std::size_t g = 0; g < scores.rows(); ++g)
    for (double s : scores.row(g))
      if (!std::isfinite(s)) throw DomainError("non-finite alignment score");
  if (scores.rows() == 0) return {};
  return method == ExtractionMethod::kGreedy ? extract_greedy(scores) : extract_optimal(scores);
}

OneToOneAlignment extract_one_to_one(const SoftAlignment& soft, ExtractionMethod method) {
  return extract_one_to_one(soft.scores, method);
}

void validate_alignment(const ParallelExample& example, const OneToOneAlignment& a) {
  const std::size_t W = example.text.size();
  if (a.num_glosses() != example.gloss.size())
    throw DomainError("alignment for '" + example.id + "' covers " +
                      std::to_string(a.num_glosses()) + " of " +
                      std::to_string(example.gloss.size()) + " glosses");
  std::vector<char> used(W, 0);
  for (std::size_t w : a.word_of_gloss) {
    if (w >= W) throw DomainError("alignment for '" + example.id + "' points past the text");
    if (used[w]) throw DomainError("alignment for '" + example.id + "' is not injective");
    used[w] = 1;
  }
}

SpoGloss make_spo(const ParallelExample& example, const OneToOneAlignment& a) {
  validate_alignment(example, a);
  SpoGloss spo{std::vector<std::string>(example.text.size(), std::string(kPadToken))};
  for (std::size_t g = 0; g < a.num_glosses(); ++g)
    spo.tokens[a.word_of_gloss[g]] = example.gloss[g].surface;
  return spo;
}

SignOrderText make_sio(const ParallelExample& example, const OneToOneAlignment& a) {
  validate_alignment(example, a);
  const std::size_t W = example.text.size();
  SignOrderText sio;
  sio.perm.reserve(W);
  std::vector<char> aligned(W, 0);
  for (std::size_t w : a.word_of_gloss) {
    sio.perm.push_back(w);
    aligned[w] = 1;
  }
  for (std::size_t w = 0; w < W; ++w)
    if (!aligned[w]) sio.perm.push_back(w);
  sio.tokens.reserve(W);
  for (std::size_t src : sio.perm) sio.tokens.push_back(example.text[src].surface);
  return sio;
}

AlignmentRecord make_alignment_record(const ParallelExample& example, const OneToOneAlignment& a) {
  return {example.id, a, make_spo(example, a), make_sio(example, a)};
}

std::string alignment_record_to_json(const AlignmentRecord& record) {
  json j;
  j["id"] = record.id;
  json pairs = json::array();
  for (auto [g, w] : record.alignment.pairs()) pairs.push_back({g, w});
  j["pairs"] = pairs;
  j["spo"] = record.spo.tokens;
  j["sio"] = record.sio.tokens;
  j["perm"] = record.sio.perm;
  return j.dump();
}

std::vector<AlignmentRecord> parse_alignment_dump(std::string_view content) {
  std::vector<AlignmentRecord> out;
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
      AlignmentRecord rec;
      rec.id = j.at("id").get<std::string>();
      auto pairs = j.at("pairs").get<std::vector<std::pair<std::size_t, std::size_t>>>();
      rec.alignment.word_of_gloss.assign(pairs.size(), 0);
      std::vector<char> seen(pairs.size(), 0);
      for (auto [g, w] : pairs) {
        if (g >= pairs.size() || seen[g]) throw ParseError("gloss indices are not 0..G-1", line_no);
        seen[g] = 1;
        rec.alignment.word_of_gloss[g] = w;
      }
      rec.spo.tokens = j.at("spo").get<std::vector<std::string>>();
      rec.sio.tokens = j.at("sio").get<std::vector<std::string>>();
      rec.sio.perm = j.at("perm").get<std::vector<std::size_t>>();
      if (rec.spo.tokens.size() != rec.sio.perm.size() ||
          rec.sio.tokens.size() != rec.sio.perm.size())
        throw ParseError("spo, sio and perm lengths differ", line_no);
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad alignment record: ") + e.what(), line_no);
    }
  }
  return out;
}

std::vector<AlignmentRecord> load_alignment_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open alignment dump " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_alignment_dump(buf.str());
}

void save_alignment_dump(const std::vector<AlignmentRecord>& records,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << alignment_record_to_json(r) << '\n';
}

}  // namespace snr
