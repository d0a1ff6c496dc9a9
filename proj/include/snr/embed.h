#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "snr/matrix.h"

namespace snr {

class StaticEmbeddingTable {
 public:
  StaticEmbeddingTable() = default;
  StaticEmbeddingTable(std::size_t dim, std::unordered_map<std::string, std::vector<double>> entries);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }

  // Out-of-vocabulary words are absent, never a zero vector.
  std::optional<std::span<const double>> lookup(std::string_view word) const;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

struct StaticTableLoad {
  StaticEmbeddingTable table;
  std::size_t duplicates = 0;
};

// Text vector format: "<count> <dim>" header, then "<word> v1 ... vdim".
// Duplicate words: the last row wins and is counted.
StaticTableLoad load_static_table(const std::filesystem::path& path);
StaticTableLoad parse_static_table(std::string_view content);

enum class Side { kText, kGloss };

std::string_view side_name(Side side);

class ContextualEmbeddingStore {
 public:
  ContextualEmbeddingStore() = default;

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }

  const Matrix* find(std::string_view id, Side side) const;

  // Throws FormatError on a dimension clash or a duplicate key.
  void insert(std::string id, Side side, Matrix vectors);

 private:
  std::size_t dim_ = 0;
  std::map<std::pair<std::string, Side>, Matrix> records_;
};

// JSONL: {"id": str, "side": "text"|"gloss", "vectors": [[float x E] x len]}.
ContextualEmbeddingStore load_contextual_store(const std::filesystem::path& path);
ContextualEmbeddingStore parse_contextual_store(std::string_view content);

// G x W matrix of row-pair dot products between gloss and text vectors. With
// normalize set, rows are scaled to unit length first; zero rows score 0.
Matrix similarity_matrix(const Matrix& gloss_vectors, const Matrix& text_vectors,
                         bool normalize = true);

}  // namespace snr
