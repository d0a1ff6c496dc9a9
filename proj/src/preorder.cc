#include "snr/preorder.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "snr/error.h"

namespace snr {

using nlohmann::json;

namespace {

constexpr std::uint32_t kTerminalCode = std::numeric_limits<std::uint32_t>::max();

std::uint32_t decision_code(NodeLabel label, std::size_t split) {
  if (label == NodeLabel::kTerminal) return kTerminalCode;
  return static_cast<std::uint32_t>(2 * split + (label == NodeLabel::kInverted ? 1 : 0));
}

char label_char(NodeLabel label) {
  switch (label) {
    case NodeLabel::kStraight: return 'S';
    case NodeLabel::kInverted: return 'I';
    case NodeLabel::kTerminal: return 'T';
  }
  return 'T';
}

char parent_char(ParentLabel parent) {
  switch (parent) {
    case ParentLabel::kRoot: return 'R';
    case ParentLabel::kStraight: return 'S';
    case ParentLabel::kInverted: return 'I';
  }
  return 'R';
}

ParentLabel as_parent(NodeLabel label) {
  return label == NodeLabel::kInverted ? ParentLabel::kInverted : ParentLabel::kStraight;
}

const char* length_bucket(std::size_t n) {
  if (n <= 1) return "1";
  if (n == 2) return "2";
  if (n == 3) return "3";
  if (n == 4) return "4";
  if (n <= 6) return "5-6";
  if (n <= 10) return "7-10";
  return "11+";
}

std::string describe(const Sentence& s, std::size_t i) {
  return "token " + std::to_string(i) + " ('" + s[i].surface + "')";
}

// Per-sentence string forms of the token annotations.
struct Annotations {
  std::vector<std::string> pos;
  std::vector<std::string> cls;

  explicit Annotations(const Sentence& s) {
    pos.reserve(s.size());
    cls.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].pos) throw FeatureError(describe(s, i) + " has no POS tag");
      if (!s[i].word_class) throw FeatureError(describe(s, i) + " has no word class");
      pos.push_back(*s[i].pos);
      cls.push_back(std::to_string(*s[i].word_class));
    }
  }
};

// Emits the feature strings of one decision through `emit`.
template <typename Emit>
void for_each_feature(const Annotations& a, Span span, ParentLabel parent, NodeLabel label,
                      std::size_t split, std::string& buf, Emit&& emit) {
  const char x = label_char(label);
  auto start = [&](const char* name) {
    buf.clear();
    buf += x;
    buf += '.';
    buf += name;
    buf += ':';
  };
  auto bar = [&] { buf += '|'; };
  const std::size_t i = span.begin;
  const std::size_t last = span.end - 1;

  start("bias");
  emit(buf);
  start("par");
  buf += parent_char(parent);
  emit(buf);
  start("len");
  buf += length_bucket(span.length());
  emit(buf);
  start("spos");
  buf += a.pos[i];
  bar();
  buf += a.pos[last];
  emit(buf);
  start("scls");
  buf += a.cls[i];
  bar();
  buf += a.cls[last];
  emit(buf);
  if (label == NodeLabel::kTerminal) return;

  const std::size_t l = split - 1;
  const std::size_t r = split;
  start("bpos");
  buf += a.pos[l];
  bar();
  buf += a.pos[r];
  emit(buf);
  start("bcls");
  buf += a.cls[l];
  bar();
  buf += a.cls[r];
  emit(buf);
  start("lpos");
  buf += a.pos[l];
  emit(buf);
  start("rpos");
  buf += a.pos[r];
  emit(buf);
  start("lcls");
  buf += a.cls[l];
  emit(buf);
  start("rcls");
  buf += a.cls[r];
  emit(buf);
  start("lspan");
  buf += a.pos[i];
  bar();
  buf += a.pos[l];
  emit(buf);
  start("rspan");
  buf += a.pos[r];
  bar();
  buf += a.pos[last];
  emit(buf);
  start("bpos.par");
  buf += a.pos[l];
  bar();
  buf += a.pos[r];
  bar();
  buf += parent_char(parent);
  emit(buf);
}

// Memoised decision scores for one sentence under one set of weights.
class DecisionScorer {
 public:
  DecisionScorer(const PreorderModel& model, const Sentence& sentence)
      : model_(model), ann_(sentence), n_(sentence.size()) {}

  std::size_t size() const { return n_; }

  double operator()(Span span, ParentLabel parent, NodeLabel label, std::size_t split) {
    const std::uint64_t key =
        ((((static_cast<std::uint64_t>(span.begin) * (n_ + 1) + span.end) * (n_ + 1) +
           (label == NodeLabel::kTerminal ? 0 : split)) *
              3 +
          static_cast<std::uint64_t>(label)) *
             3 +
         static_cast<std::uint64_t>(parent));
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    double total = 0.0;
    for_each_feature(ann_, span, parent, label, split, buf_,
                     [&](const std::string& f) { total += model_.weight(f); });
    memo_.emplace(key, total);
    return total;
  }

 private:
  const PreorderModel& model_;
  Annotations ann_;
  std::size_t n_;
  std::string buf_;
  std::unordered_map<std::uint64_t, double> memo_;
};

void collect_tree_decisions(const BtgTree& tree, int node, ParentLabel parent,
                            const std::function<void(Span, ParentLabel, NodeLabel, std::size_t)>& fn) {
  const BtgNode& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.label == NodeLabel::kTerminal) {
    fn(n.span, parent, n.label, 0);
    return;
  }
  const std::size_t split = tree.nodes[static_cast<std::size_t>(n.left)].span.end;
  fn(n.span, parent, n.label, split);
  collect_tree_decisions(tree, n.left, as_parent(n.label), fn);
  collect_tree_decisions(tree, n.right, as_parent(n.label), fn);
}

void yield(const BtgTree& tree, int node, std::vector<std::size_t>& out) {
  const BtgNode& n = tree.nodes[static_cast<std::size_t>(node)];
  switch (n.label) {
    case NodeLabel::kTerminal:
      for (std::size_t k = n.span.begin; k < n.span.end; ++k) out.push_back(k);
      break;
    case NodeLabel::kStraight:
      yield(tree, n.left, out);
      yield(tree, n.right, out);
      break;
    case NodeLabel::kInverted:
      yield(tree, n.right, out);
      yield(tree, n.left, out);
      break;
  }
}

void check_tree_node(const BtgTree& tree, int node, Span expected, std::size_t& visited) {
  if (node < 0 || static_cast<std::size_t>(node) >= tree.nodes.size())
    throw DomainError("tree child index out of range");
  ++visited;
  const BtgNode& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.span != expected || n.span.length() == 0) throw DomainError("tree spans do not nest");
  if (n.label == NodeLabel::kTerminal) {
    if (n.left != -1 || n.right != -1) throw DomainError("terminal node has children");
    return;
  }
  if (n.left < 0 || n.right < 0) throw DomainError("branching node lacks a child");
  const auto& left = tree.nodes.at(static_cast<std::size_t>(n.left));
  const std::size_t m = left.span.end;
  if (m <= n.span.begin || m >= n.span.end) throw DomainError("split point outside the span");
  check_tree_node(tree, n.left, {n.span.begin, m}, visited);
  check_tree_node(tree, n.right, {m, n.span.end}, visited);
}

std::vector<std::size_t> positions_of(std::span<const std::size_t> perm) {
  std::vector<std::size_t> pos(perm.size(), perm.size());
  for (std::size_t p = 0; p < perm.size(); ++p) {
    if (perm[p] >= perm.size() || pos[perm[p]] != perm.size())
      throw DomainError("not a permutation");
    pos[perm[p]] = p;
  }
  return pos;
}

}  // namespace

BtgTree BtgTree::terminal(Span span) {
  BtgTree t;
  t.nodes.push_back({span, NodeLabel::kTerminal, -1, -1});
  return t;
}

BtgTree BtgTree::join(NodeLabel label, const BtgTree& left, const BtgTree& right) {
  if (label == NodeLabel::kTerminal) throw DomainError("join needs straight or inverted");
  BtgTree t;
  t.nodes.push_back({{left.root().span.begin, right.root().span.end}, label, -1, -1});
  auto append = [&](const BtgTree& sub) {
    const int offset = static_cast<int>(t.nodes.size());
    for (BtgNode n : sub.nodes) {
      if (n.left >= 0) n.left += offset;
      if (n.right >= 0) n.right += offset;
      t.nodes.push_back(n);
    }
    return offset;
  };
  t.nodes[0].left = append(left);
  t.nodes[0].right = append(right);
  return t;
}

void validate_tree(const BtgTree& tree) {
  if (tree.nodes.empty()) throw DomainError("empty tree");
  if (tree.root().span.begin != 0) throw DomainError("root span must start at 0");
  std::size_t visited = 0;
  check_tree_node(tree, 0, tree.root().span, visited);
  if (visited != tree.nodes.size()) throw DomainError("tree has unreachable nodes");
}

std::vector<std::size_t> tree_to_permutation(const BtgTree& tree) {
  validate_tree(tree);
  std::vector<std::size_t> out;
  out.reserve(tree.length());
  yield(tree, 0, out);
  return out;
}

std::size_t concordant_pairs(std::span<const std::size_t> perm,
                             std::span<const std::size_t> target) {
  if (perm.size() != target.size())
    throw DomainError("permutation lengths differ: " + std::to_string(perm.size()) + " vs " +
                      std::to_string(target.size()));
  const auto pp = positions_of(perm);
  const auto tp = positions_of(target);
  std::size_t concordant = 0;
  for (std::size_t a = 0; a < pp.size(); ++a)
    for (std::size_t b = a + 1; b < pp.size(); ++b)
      if ((pp[a] < pp[b]) == (tp[a] < tp[b])) ++concordant;
  return concordant;
}

double kendall_tau(std::span<const std::size_t> perm, std::span<const std::size_t> target) {
  const std::size_t c = concordant_pairs(perm, target);
  const std::size_t n = perm.size();
  if (n <= 1) return 1.0;
  return static_cast<double>(c) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

PreorderModel::PreorderModel(Weights weights, int beam_width, int iterations)
    : weights_(std::move(weights)), beam_width_(beam_width), iterations_(iterations) {
  if (beam_width_ < 1) throw DomainError("beam width must be at least 1");
  if (iterations_ < 0) throw DomainError("iterations must be non-negative");
  for (const auto& [f, w] : weights_)
    if (!std::isfinite(w)) throw DomainError("non-finite weight for '" + f + "'");
}

double PreorderModel::weight(std::string_view feature) const {
  auto it = weights_.find(feature);
  return it == weights_.end() ? 0.0 : it->second;
}

std::string PreorderModel::to_json() const {
  json j;
  j["beam"] = beam_width_;
  j["iterations"] = iterations_;
  j["weights"] = json::object();
  for (const auto& [f, w] : weights_) j["weights"][f] = w;
  return j.dump(1);
}

PreorderModel PreorderModel::from_json(std::string_view text) {
  try {
    json j = json::parse(text);
    Weights w;
    for (auto& [f, v] : j.at("weights").items()) w.emplace(f, v.get<double>());
    return PreorderModel(std::move(w), j.at("beam").get<int>(), j.at("iterations").get<int>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad preorder model: ") + e.what());
  }
}

void PreorderModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json() << '\n';
}

PreorderModel PreorderModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open preorder model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void check_annotations(const Sentence& sentence) { Annotations check(sentence); }

void decision_features(const Sentence& sentence, Span span, ParentLabel parent, NodeLabel label,
                       std::size_t split, std::vector<std::string>& out) {
  Annotations ann(sentence);
  if (span.end > sentence.size() || span.length() == 0) throw DomainError("span out of range");
  if (label != NodeLabel::kTerminal && (split <= span.begin || split >= span.end))
    throw DomainError("split outside the span");
  std::string buf;
  for_each_feature(ann, span, parent, label, split, buf,
                   [&](const std::string& f) { out.push_back(f); });
}

std::vector<std::string> tree_features(const Sentence& sentence, const BtgTree& tree) {
  validate_tree(tree);
  if (tree.length() != sentence.size()) throw DomainError("tree does not cover the sentence");
  Annotations ann(sentence);
  std::vector<std::string> out;
  std::string buf;
  collect_tree_decisions(tree, 0, ParentLabel::kRoot,
                         [&](Span span, ParentLabel parent, NodeLabel label, std::size_t split) {
                           for_each_feature(ann, span, parent, label, split, buf,
                                            [&](const std::string& f) { out.push_back(f); });
                         });
  return out;
}

double score_tree(const PreorderModel& model, const Sentence& sentence, const BtgTree& tree) {
  double total = 0.0;
  for (const auto& f : tree_features(sentence, tree)) total += model.weight(f);
  return total;
}

namespace {

struct OpenSpan {
  std::uint32_t begin;
  std::uint32_t end;
  ParentLabel parent;
  int node;
};

struct Hypothesis {
  double score = 0.0;
  std::vector<std::uint32_t> decisions;
  std::vector<OpenSpan> agenda;  // back() is expanded next
  std::vector<BtgNode> nodes;
};

struct Candidate {
  double score;
  std::size_t parent_rank;  // lexicographic rank of the parent's decisions
  std::size_t parent;
  std::uint32_t code;
  std::uint32_t split;
  NodeLabel label;
};

bool lex_less(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

Hypothesis extend(const Hypothesis& h, const Candidate& c) {
  Hypothesis out;
  out.score = c.score;
  out.decisions = h.decisions;
  out.decisions.push_back(c.code);
  out.agenda = h.agenda;
  out.nodes = h.nodes;
  const OpenSpan open = out.agenda.back();
  out.agenda.pop_back();
  BtgNode& node = out.nodes[static_cast<std::size_t>(open.node)];
  node.label = c.label;
  if (c.label == NodeLabel::kTerminal) return out;
  const int left = static_cast<int>(out.nodes.size());
  const int right = left + 1;
  out.nodes[static_cast<std::size_t>(open.node)].left = left;
  out.nodes[static_cast<std::size_t>(open.node)].right = right;
  out.nodes.push_back({{open.begin, c.split}, NodeLabel::kTerminal, -1, -1});
  out.nodes.push_back({{c.split, open.end}, NodeLabel::kTerminal, -1, -1});
  const ParentLabel p = as_parent(c.label);
  out.agenda.push_back({c.split, open.end, p, right});
  out.agenda.push_back({open.begin, c.split, p, left});
  return out;
}

std::vector<std::uint32_t> agenda_key(const Hypothesis& h, const Candidate& c) {
  std::vector<std::uint32_t> key;
  key.reserve(3 * (h.agenda.size() + 1));
  for (std::size_t k = 0; k + 1 < h.agenda.size(); ++k) {
    key.push_back(h.agenda[k].begin);
    key.push_back(h.agenda[k].end);
    key.push_back(static_cast<std::uint32_t>(h.agenda[k].parent));
  }
  if (c.label != NodeLabel::kTerminal) {
    const OpenSpan& open = h.agenda.back();
    const auto p = static_cast<std::uint32_t>(as_parent(c.label));
    key.insert(key.end(), {c.split, open.end, p, open.begin, c.split, p});
  }
  return key;
}

}  // namespace

ParseResult parse_btg(const PreorderModel& model, const Sentence& sentence, std::size_t beam) {
  if (beam < 1) throw DomainError("beam must be at least 1");
  if (sentence.empty()) throw DomainError("cannot parse an empty sentence");
  DecisionScorer scorer(model, sentence);
  const auto n = static_cast<std::uint32_t>(sentence.size());

  Hypothesis init;
  init.nodes.push_back({{0, n}, NodeLabel::kTerminal, -1, -1});
  init.agenda.push_back({0, n, ParentLabel::kRoot, 0});
  std::vector<Hypothesis> current;
  current.push_back(std::move(init));

  bool have_best = false;
  Hypothesis best;

  while (!current.empty()) {
    std::vector<std::size_t> by_lex(current.size());
    std::iota(by_lex.begin(), by_lex.end(), std::size_t{0});
    std::sort(by_lex.begin(), by_lex.end(), [&](std::size_t a, std::size_t b) {
      return lex_less(current[a].decisions, current[b].decisions);
    });
    std::vector<std::size_t> lex_rank(current.size());
    for (std::size_t r = 0; r < by_lex.size(); ++r) lex_rank[by_lex[r]] = r;

    std::vector<Candidate> open_cands;
    for (std::size_t h = 0; h < current.size(); ++h) {
      const Hypothesis& hyp = current[h];
      const OpenSpan& top = hyp.agenda.back();
      const Span span{top.begin, top.end};
      for (std::uint32_t m = top.begin + 1; m < top.end; ++m)
        for (NodeLabel label : {NodeLabel::kStraight, NodeLabel::kInverted})
          open_cands.push_back({hyp.score + scorer(span, top.parent, label, m), lex_rank[h], h,
                                decision_code(label, m), m, label});
      Candidate term{hyp.score + scorer(span, top.parent, NodeLabel::kTerminal, 0), lex_rank[h], h,
                     kTerminalCode, 0, NodeLabel::kTerminal};
      if (hyp.agenda.size() == 1) {
        if (!have_best || term.score > best.score ||
            (term.score == best.score && [&] {
              auto d = hyp.decisions;
              d.push_back(kTerminalCode);
              return lex_less(d, best.decisions);
            }())) {
          best = extend(hyp, term);
          have_best = true;
        }
      } else {
        open_cands.push_back(term);
      }
    }

    std::sort(open_cands.begin(), open_cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent_rank != b.parent_rank) return a.parent_rank < b.parent_rank;
      return a.code < b.code;
    });

    std::vector<Hypothesis> next;
    std::set<std::vector<std::uint32_t>> seen;
    for (const Candidate& c : open_cands) {
      if (next.size() >= beam) break;
      if (!seen.insert(agenda_key(current[c.parent], c)).second) continue;
      next.push_back(extend(current[c.parent], c));
    }
    current = std::move(next);
  }

  ParseResult result;
  result.tree.nodes = std::move(best.nodes);
  result.score = best.score;
  return result;
}

ParseResult oracle_tree(const PreorderModel& model, const Sentence& sentence,
                        std::span<const std::size_t> target) {
  const std::size_t n = sentence.size();
  if (target.size() != n) throw DomainError("target length differs from the sentence");
  if (n == 0) throw DomainError("cannot parse an empty sentence");
  const auto tp = positions_of(target);
  DecisionScorer scorer(model, sentence);

  // prefix[x][y] = #{a < x, b < y : tp[a] < tp[b]}
  std::vector<std::vector<long>> prefix(n + 1, std::vector<long>(n + 1, 0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      prefix[a + 1][b + 1] =
          prefix[a][b + 1] + prefix[a + 1][b] - prefix[a][b] + (tp[a] < tp[b] ? 1 : 0);
  auto rect = [&](std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
    return prefix[a1][b1] - prefix[a0][b1] - prefix[a1][b0] + prefix[a0][b0];
  };

  struct Cell {
    long concordant = -1;
    double score = 0.0;
    NodeLabel label = NodeLabel::kTerminal;
    std::size_t split = 0;
  };
  // cells[(i * (n + 1) + j) * 3 + parent]
  std::vector<Cell> cells((n + 1) * (n + 1) * 3);
  std::vector<long> kept_in_order((n + 1) * (n + 1), 0);
  auto at = [&](std::size_t i, std::size_t j, ParentLabel p) -> Cell& {
    return cells[(i * (n + 1) + j) * 3 + static_cast<std::size_t>(p)];
  };

  for (std::size_t len = 1; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      const long in_order =
          len == 1 ? 0 : kept_in_order[i * (n + 1) + j - 1] + rect(i, j - 1, j - 1, j);
      kept_in_order[i * (n + 1) + j] = in_order;
      for (ParentLabel p : {ParentLabel::kRoot, ParentLabel::kStraight, ParentLabel::kInverted}) {
        if (p == ParentLabel::kRoot && (i != 0 || j != n)) continue;
        Cell best;
        auto consider = [&](long conc, double score, NodeLabel label, std::size_t split) {
          if (conc > best.concordant || (conc == best.concordant && score > best.score))
            best = {conc, score, label, split};
        };
        for (std::size_t m = i + 1; m < j; ++m) {
          const long straight = rect(i, m, m, j);
          const long cross = static_cast<long>((m - i) * (j - m));
          for (NodeLabel label : {NodeLabel::kStraight, NodeLabel::kInverted}) {
            const ParentLabel cp = as_parent(label);
            const Cell& l = at(i, m, cp);
            const Cell& r = at(m, j, cp);
            const long conc = l.concordant + r.concordant +
                              (label == NodeLabel::kStraight ? straight : cross - straight);
            consider(conc, l.score + r.score + scorer({i, j}, p, label, m), label, m);
          }
        }
        consider(in_order, scorer({i, j}, p, NodeLabel::kTerminal, 0), NodeLabel::kTerminal, 0);
        at(i, j, p) = best;
      }
    }
  }

  ParseResult result;
  std::function<int(std::size_t, std::size_t, ParentLabel)> build =
      [&](std::size_t i, std::size_t j, ParentLabel p) -> int {
    const Cell& c = at(i, j, p);
    const int idx = static_cast<int>(result.tree.nodes.size());
    result.tree.nodes.push_back({{i, j}, c.label, -1, -1});
    if (c.label == NodeLabel::kTerminal) return idx;
    const int left = build(i, c.split, as_parent(c.label));
    const int right = build(c.split, j, as_parent(c.label));
    result.tree.nodes[static_cast<std::size_t>(idx)].left = left;
    result.tree.nodes[static_cast<std::size_t>(idx)].right = right;
    return idx;
  };
  build(0, n, ParentLabel::kRoot);
  result.score = at(0, n, ParentLabel::kRoot).score;
  return result;
}

namespace {

// Averaged perceptron bookkeeping: avg = w - acc / steps.
class WeightAccumulator {
 public:
  void update(PreorderModel::Weights& weights, const std::string& f, double delta,
              std::size_t step) {
    weights[f] += delta;
    accum_[f] += static_cast<double>(step) * delta;
  }

  PreorderModel::Weights averaged(const PreorderModel::Weights& weights, std::size_t steps) const {
    PreorderModel::Weights out;
    for (const auto& [f, w] : weights) {
      auto it = accum_.find(f);
      const double a = w - (it == accum_.end() ? 0.0 : it->second) / static_cast<double>(steps);
      if (a != 0.0) out.emplace(f, a);
    }
    return out;
  }

 private:
  std::map<std::string, double, std::less<>> accum_;
};

void shuffle_indices(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  // Fisher-Yates on raw engine output, so the order is the same everywhere.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    std::swap(order[i - 1], order[r % bound]);
  }
}

}  // namespace

PreorderModel train_preorder(const std::vector<Sentence>& sentences,
                             const std::vector<std::vector<std::size_t>>& targets,
                             const PreorderTrainOptions& options, PreorderTrainStats* stats) {
  if (sentences.size() != targets.size())
    throw DomainError("need one target permutation per sentence");
  if (options.beam < 1) throw DomainError("beam must be at least 1");
  if (options.iterations < 0) throw DomainError("iterations must be non-negative");
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    if (sentences[k].empty()) throw DomainError("empty training sentence");
    if (targets[k].size() != sentences[k].size())
      throw DomainError("target " + std::to_string(k) + " has the wrong length");
    positions_of(targets[k]);
    check_annotations(sentences[k]);
  }

  PreorderModel current({}, options.beam, options.iterations);
  WeightAccumulator accumulator;
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 1;
  std::size_t updates = 0;

  for (int epoch = 0; epoch < options.iterations; ++epoch) {
    shuffle_indices(order, rng);
    double tau_sum = 0.0;
    for (std::size_t k : order) {
      const ParseResult decoded = parse_btg(current, sentences[k], static_cast<std::size_t>(options.beam));
      const auto decoded_perm = tree_to_permutation(decoded.tree);
      const std::size_t decoded_conc = concordant_pairs(decoded_perm, targets[k]);
      tau_sum += kendall_tau(decoded_perm, targets[k]);

      const ParseResult oracle = oracle_tree(current, sentences[k], targets[k]);
      const std::size_t oracle_conc =
          concordant_pairs(tree_to_permutation(oracle.tree), targets[k]);
      if (decoded_conc < oracle_conc) {
        std::map<std::string, double> delta;
        for (const auto& f : tree_features(sentences[k], oracle.tree)) delta[f] += 1.0;
        for (const auto& f : tree_features(sentences[k], decoded.tree)) delta[f] -= 1.0;
        for (const auto& [f, d] : delta)
          if (d != 0.0) accumulator.update(current.mutable_weights(), f, d, step);
        ++updates;
      }
      ++step;
    }
    if (stats && !sentences.empty())
      stats->epoch_mean_tau.push_back(tau_sum / static_cast<double>(sentences.size()));
  }
  if (stats) stats->updates = updates;

  PreorderModel::Weights final_weights;
  if (options.average) {
    final_weights = accumulator.averaged(current.weights(), step);
  } else {
    for (const auto& [f, w] : current.weights())
      if (w != 0.0) final_weights.emplace(f, w);
  }
  return PreorderModel(std::move(final_weights), options.beam, options.iterations);
}

PreorderResult apply_preorder(const PreorderModel& model, const Sentence& sentence) {
  const ParseResult parsed =
      parse_btg(model, sentence, static_cast<std::size_t>(model.beam_width()));
  PreorderResult out;
  out.perm = tree_to_permutation(parsed.tree);
  for (std::size_t src : out.perm) out.reordered.tokens.push_back(sentence[src]);
  return out;
}

}  // namespace snr
