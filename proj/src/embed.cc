#include "snr/embed.h"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_double(std::string_view s, double& value) {
  std::string buf(s);
  char* end = nullptr;
  errno = 0;
  value = std::strtod(buf.c_str(), &end);
  return end == buf.c_str() + buf.size() && errno == 0 && std::isfinite(value);
}

bool parse_size(std::string_view s, std::size_t& value) {
  if (s.empty()) return false;
  value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return true;
}

std::string at_line(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

}  // namespace

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw DomainError("ragged matrix rows");
    for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

StaticEmbeddingTable::StaticEmbeddingTable(
    std::size_t dim, std::unordered_map<std::string, std::vector<double>> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim_ == 0) throw FormatError("embedding dimension must be positive");
  if (entries_.empty()) throw FormatError("embedding table has no words");
  for (const auto& [word, vec] : entries_) {
    if (vec.size() != dim_) throw FormatError("vector for '" + word + "' has wrong dimension");
    for (double v : vec)
      if (!std::isfinite(v)) throw FormatError("non-finite component for '" + word + "'");
  }
}

std::optional<std::span<const double>> StaticEmbeddingTable::lookup(std::string_view word) const {
  auto it = entries_.find(std::string(word));
  if (it == entries_.end()) return std::nullopt;
  return std::span<const double>(it->second);
}

StaticTableLoad parse_static_table(std::string_view content) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  auto next_line = [&](std::string_view& line) {
    while (start < content.size()) {
      std::size_t end = content.find('\n', start);
      if (end == std::string_view::npos) end = content.size();
      line = content.substr(start, end - start);
      start = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!fields(line).empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw FormatError("empty vector file");
  auto header = fields(line);
  std::size_t declared = 0;
  std::size_t dim = 0;
  if (header.size() != 2 || !parse_size(header[0], declared) || !parse_size(header[1], dim))
    throw FormatError(at_line(line_no, "header must be '<vocab_count> <dim>'"));
  if (dim == 0) throw FormatError(at_line(line_no, "dimension must be positive"));

  std::unordered_map<std::string, std::vector<double>> entries;
  StaticTableLoad result;
  std::size_t rows = 0;
  while (next_line(line)) {
    auto cols = fields(line);
    if (cols.size() != dim + 1)
      throw FormatError(at_line(line_no, "expected " + std::to_string(dim) + " components, got " +
                                             std::to_string(cols.size() - 1)));
    std::vector<double> vec(dim);
    for (std::size_t i = 0; i < dim; ++i)
      if (!parse_double(cols[i + 1], vec[i]))
        throw FormatError(at_line(line_no, "non-numeric component '" + std::string(cols[i + 1]) +
                                               "'"));
    ++rows;
    auto [it, inserted] = entries.insert_or_assign(std::string(cols[0]), std::move(vec));
    if (!inserted) ++result.duplicates;
  }
  if (rows != declared)
    throw FormatError("header declares " + std::to_string(declared) + " rows, found " +
                      std::to_string(rows));
  result.table = StaticEmbeddingTable(dim, std::move(entries));
  return result;
}

StaticTableLoad load_static_table(const std::filesystem::path& path) {
  return parse_static_table(read_file(path));
}

std::string_view side_name(Side side) { return side == Side::kText ? "text" : "gloss"; }

const Matrix* ContextualEmbeddingStore::find(std::string_view id, Side side) const {
  auto it = records_.find({std::string(id), side});
  return it == records_.end() ? nullptr : &it->second;
}

void ContextualEmbeddingStore::insert(std::string id, Side side, Matrix vectors) {
  if (vectors.rows() == 0 || vectors.cols() == 0)
    throw FormatError("empty vectors for (" + id + ", " + std::string(side_name(side)) + ")");
  if (dim_ == 0) dim_ = vectors.cols();
  if (vectors.cols() != dim_)
    throw FormatError("record (" + id + ", " + std::string(side_name(side)) + ") has dim " +
                      std::to_string(vectors.cols()) + ", store has " + std::to_string(dim_));
  std::string key_id = id;
  if (!records_.emplace(std::make_pair(std::move(key_id), side), std::move(vectors)).second)
    throw FormatError("duplicate record (" + id + ", " + std::string(side_name(side)) + ")");
}

ContextualEmbeddingStore parse_contextual_store(std::string_view content) {
  using nlohmann::json;
  ContextualEmbeddingStore store;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(at_line(line_no, std::string("malformed JSON: ") + e.what()));
    }
    if (!record.is_object() || !record.contains("id") || !record["id"].is_string() ||
        !record.contains("side") || !record["side"].is_string() || !record.contains("vectors") ||
        !record["vectors"].is_array())
      throw FormatError(at_line(line_no, "record needs string 'id', 'side' and list 'vectors'"));
    const std::string side_str = record["side"].get<std::string>();
    Side side;
    if (side_str == "text")
      side = Side::kText;
    else if (side_str == "gloss")
      side = Side::kGloss;
    else
      throw FormatError(at_line(line_no, "side must be 'text' or 'gloss'"));

    std::vector<std::vector<double>> rows;
    for (const auto& row : record["vectors"]) {
      if (!row.is_array()) throw FormatError(at_line(line_no, "vector rows must be lists"));
      std::vector<double> vec;
      for (const auto& v : row) {
        if (!v.is_number()) throw FormatError(at_line(line_no, "non-numeric component"));
        double d = v.get<double>();
        if (!std::isfinite(d)) throw FormatError(at_line(line_no, "non-finite component"));
        vec.push_back(d);
      }
      if (!rows.empty() && vec.size() != rows.front().size())
        throw FormatError(at_line(line_no, "rows of differing dimension"));
      rows.push_back(std::move(vec));
    }
    try {
      store.insert(record["id"].get<std::string>(), side, Matrix::from_rows(rows));
    } catch (const FormatError& e) {
      throw FormatError(at_line(line_no, e.what()));
    }
  }
  return store;
}

ContextualEmbeddingStore load_contextual_store(const std::filesystem::path& path) {
  return parse_contextual_store(read_file(path));
}

Matrix similarity_matrix(const Matrix& gloss_vectors, const Matrix& text_vectors, bool normalize) {
  if (gloss_vectors.rows() == 0 || text_vectors.rows() == 0)
    throw DomainError("similarity of an empty sequence");
  if (gloss_vectors.cols() != text_vectors.cols())
    throw DomainError("embedding dimensions differ: " + std::to_string(gloss_vectors.cols()) +
                      " vs " + std::to_string(text_vectors.cols()));

  auto norms = [&](const Matrix& m) {
    std::vector<double> out(m.rows(), 1.0);
    if (!normalize) return out;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      double sq = 0.0;
      for (double v : m.row(r)) sq += v * v;
      out[r] = std::sqrt(sq);
    }
    return out;
  };
  const auto gn = norms(gloss_vectors);
  const auto tn = norms(text_vectors);

  Matrix sim(gloss_vectors.rows(), text_vectors.rows());
  for (std::size_t g = 0; g < gloss_vectors.rows(); ++g) {
    auto gr = gloss_vectors.row(g);
    for (std::size_t w = 0; w < text_vectors.rows(); ++w) {
      if (gn[g] == 0.0 || tn[w] == 0.0) continue;
      auto tr = text_vectors.row(w);
      double dot = 0.0;
      for (std::size_t k = 0; k < gr.size(); ++k) dot += gr[k] * tr[k];
      double value = dot / (gn[g] * tn[w]);
      if (normalize) value = std::clamp(value, -1.0, 1.0);
      sim(g, w) = value;
    }
  }
  return sim;
}

}  // namespace snr
