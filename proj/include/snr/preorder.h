#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snr/corpus.h"

namespace snr {

enum class NodeLabel : std::uint8_t { kStraight, kInverted, kTerminal };

// Label of the node above a decision; the root has none.
enum class ParentLabel : std::uint8_t { kRoot, kStraight, kInverted };

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
  std::size_t length() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct BtgNode {
  Span span;
  NodeLabel label = NodeLabel::kTerminal;
  int left = -1;  // indices into BtgTree::nodes; -1 for terminals
  int right = -1;
};

// Binary reordering tree; nodes[0] is the root.
struct BtgTree {
  std::vector<BtgNode> nodes;

  const BtgNode& root() const { return nodes.front(); }
  std::size_t length() const { return nodes.empty() ? 0 : nodes.front().span.end; }

  // Convenience builders for tests and tools.
  static BtgTree terminal(Span span);
  static BtgTree join(NodeLabel label, const BtgTree& left, const BtgTree& right);
};

// Throws DomainError unless the tree is a well-formed bracketing of [0, W).
void validate_tree(const BtgTree& tree);

// Terminal: span in source order; straight: left then right; inverted:
// right then left. Entry p is the source index placed at position p.
std::vector<std::size_t> tree_to_permutation(const BtgTree& tree);

// Fraction of position pairs ordered the same way by both permutations.
double kendall_tau(std::span<const std::size_t> perm, std::span<const std::size_t> target);

// Pairs (a < b) of source indices whose relative order the two
// permutations agree on.
std::size_t concordant_pairs(std::span<const std::size_t> perm,
                             std::span<const std::size_t> target);

class PreorderModel {
 public:
  using Weights = std::map<std::string, double, std::less<>>;

  PreorderModel() = default;
  PreorderModel(Weights weights, int beam_width, int iterations);

  double weight(std::string_view feature) const;
  const Weights& weights() const { return weights_; }
  Weights& mutable_weights() { return weights_; }
  int beam_width() const { return beam_width_; }
  int iterations() const { return iterations_; }

  std::string to_json() const;
  static PreorderModel from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static PreorderModel load(const std::filesystem::path& path);

 private:
  Weights weights_;
  int beam_width_ = 20;
  int iterations_ = 30;
};

// Feature strings "<template>:<values>" fired by one decision. `split` is
// ignored for terminals. Throws FeatureError when a token in the span lacks
// a POS tag or word class.
void decision_features(const Sentence& sentence, Span span, ParentLabel parent, NodeLabel label,
                       std::size_t split, std::vector<std::string>& out);

// Every decision of a tree, with multiplicity.
std::vector<std::string> tree_features(const Sentence& sentence, const BtgTree& tree);
double score_tree(const PreorderModel& model, const Sentence& sentence, const BtgTree& tree);

// Throws FeatureError naming the first token without POS or class.
void check_annotations(const Sentence& sentence);

struct ParseResult {
  BtgTree tree;
  double score = 0.0;
};

// Top-down beam search. Ties prefer the earlier split, straight over
// inverted, and terminal last, compared decision by decision in pre-order.
ParseResult parse_btg(const PreorderModel& model, const Sentence& sentence, std::size_t beam);

// Highest-accuracy reachable tree against `target` (max concordant pairs,
// CKY over spans); among equally accurate trees the highest model score and
// then the canonical tie-break win.
ParseResult oracle_tree(const PreorderModel& model, const Sentence& sentence,
                        std::span<const std::size_t> target);

struct PreorderTrainOptions {
  int iterations = 30;
  int beam = 20;
  std::uint64_t seed = 1;
  bool average = true;
};

struct PreorderTrainStats {
  std::vector<double> epoch_mean_tau;  // decoded vs target, before updates
  std::size_t updates = 0;
};

// Averaged structured perceptron on (sentence, target permutation) pairs.
PreorderModel train_preorder(const std::vector<Sentence>& sentences,
                             const std::vector<std::vector<std::size_t>>& targets,
                             const PreorderTrainOptions& options,
                             PreorderTrainStats* stats = nullptr);

struct PreorderResult {
  Sentence reordered;
  std::vector<std::size_t> perm;
};

PreorderResult apply_preorder(const PreorderModel& model, const Sentence& sentence);

}  // namespace snr
