#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "snr/error.h"
#include "snr/preorder.h"
#include "support/oracles.h"
#include "support/synthetic.h"

namespace snr {
namespace {

using Perm = std::vector<std::size_t>;

Sentence tagged(const std::vector<std::pair<std::string, int>>& toks) {
  Sentence s;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    Token t("t" + std::to_string(i), toks[i].first);
    t.word_class = toks[i].second;
    s.tokens.push_back(t);
  }
  return s;
}

Sentence random_sentence(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::pair<std::string, int>> toks;
  for (std::size_t i = 0; i < n; ++i)
    toks.emplace_back(rng() % 2 ? "A" : "B", static_cast<int>(rng() % 2));
  return tagged(toks);
}

PreorderModel random_model(std::mt19937_64& rng, const Sentence& s) {
  std::normal_distribution<double> nd;
  PreorderModel::Weights w;
  for (const auto& t : testing::enumerate_trees(s.size()))
    for (const auto& f : tree_features(s, t)) w.try_emplace(f, nd(rng));
  return PreorderModel(std::move(w), 20, 30);
}

using testing::enumerate_trees;

TEST(Permutation, Examples) {
  const auto t0 = BtgTree::terminal({0, 1});
  const auto t02 = BtgTree::terminal({0, 2});
  EXPECT_EQ(tree_to_permutation(BtgTree::join(NodeLabel::kStraight, t02, BtgTree::terminal({2, 3}))),
            (Perm{0, 1, 2}));
  EXPECT_EQ(tree_to_permutation(BtgTree::join(NodeLabel::kInverted, t0, BtgTree::terminal({1, 3}))),
            (Perm{1, 2, 0}));
  const auto inner = BtgTree::join(NodeLabel::kInverted, BtgTree::terminal({1, 2}),
                                   BtgTree::terminal({2, 4}));
  EXPECT_EQ(tree_to_permutation(BtgTree::join(NodeLabel::kStraight, t0, inner)),
            (Perm{0, 2, 3, 1}));
}

TEST(Permutation, AlwaysABijection) {
  for (std::size_t W = 1; W <= 5; ++W)
    for (const auto& t : enumerate_trees(W)) {
      auto p = tree_to_permutation(t);
      std::sort(p.begin(), p.end());
      Perm id(W);
      std::iota(id.begin(), id.end(), std::size_t{0});
      EXPECT_EQ(p, id);
    }
}

TEST(Permutation, MalformedTreesRejected) {
  BtgTree bad;
  bad.nodes.push_back({{0, 3}, NodeLabel::kStraight, 1, 2});
  bad.nodes.push_back({{0, 1}, NodeLabel::kTerminal, -1, -1});
  bad.nodes.push_back({{2, 3}, NodeLabel::kTerminal, -1, -1});
  EXPECT_THROW(validate_tree(bad), DomainError);
  EXPECT_THROW(tree_to_permutation(BtgTree{}), DomainError);
}

TEST(Reachability, TwentyTwoOfTwentyFourAtLengthFour) {
  EXPECT_EQ(enumerate_trees(4).size(), 71u);
  const auto reach = testing::reachable_permutations(4);
  EXPECT_EQ(reach.size(), 22u);
  EXPECT_FALSE(reach.count({1, 3, 0, 2}));
  EXPECT_FALSE(reach.count({2, 0, 3, 1}));
}

TEST(Kendall, Examples) {
  EXPECT_DOUBLE_EQ(kendall_tau(Perm{0, 1, 2, 3}, Perm{0, 1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(kendall_tau(Perm{2, 1, 0}, Perm{0, 1, 2}), 0.0);
  EXPECT_DOUBLE_EQ(kendall_tau(Perm{2, 3, 0, 1, 4}, Perm{0, 1, 2, 3, 4}), 0.6);
  EXPECT_DOUBLE_EQ(kendall_tau(Perm{0}, Perm{0}), 1.0);
  EXPECT_THROW(kendall_tau(Perm{0, 1}, Perm{0}), DomainError);
  EXPECT_THROW(kendall_tau(Perm{0, 0}, Perm{0, 1}), DomainError);
}

TEST(Kendall, SymmetricAndMatchesBruteForce) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng() % 8;
    Perm a(n), b(n);
    std::iota(a.begin(), a.end(), std::size_t{0});
    b = a;
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    EXPECT_DOUBLE_EQ(kendall_tau(a, b), kendall_tau(b, a));
    EXPECT_DOUBLE_EQ(kendall_tau(a, a), 1.0);
    EXPECT_EQ(concordant_pairs(a, b), testing::brute_concordant(a, b));
  }
}

TEST(Features, MissingAnnotationNamesToken) {
  Sentence s = tagged({{"A", 0}, {"B", 1}});
  s.tokens[1].word_class.reset();
  try {
    parse_btg(PreorderModel{}, s, 4);
    FAIL();
  } catch (const FeatureError& e) {
    EXPECT_NE(std::string(e.what()).find("token 1"), std::string::npos) << e.what();
  }
  s.tokens[1].word_class = 1;
  s.tokens[0].pos.reset();
  EXPECT_THROW(check_annotations(s), FeatureError);
}

TEST(Features, Templates) {
  const Sentence s = tagged({{"A", 0}, {"B", 1}, {"C", 2}});
  std::vector<std::string> f;
  decision_features(s, {0, 3}, ParentLabel::kRoot, NodeLabel::kInverted, 1, f);
  const std::set<std::string> got(f.begin(), f.end());
  for (const char* want : {"I.bias:", "I.par:R", "I.len:3", "I.spos:A|C", "I.scls:0|2",
                           "I.bpos:A|B", "I.bcls:0|1", "I.lpos:A", "I.rpos:B", "I.lcls:0",
                           "I.rcls:1", "I.lspan:A|A", "I.rspan:B|C", "I.bpos.par:A|B|R"})
    EXPECT_TRUE(got.count(want)) << want;
  f.clear();
  decision_features(s, {1, 3}, ParentLabel::kStraight, NodeLabel::kTerminal, 0, f);
  EXPECT_EQ(f.size(), 5u);
}

TEST(Parse, SingleToken) {
  const auto r = parse_btg(PreorderModel{}, tagged({{"A", 0}}), 1);
  ASSERT_EQ(r.tree.nodes.size(), 1u);
  EXPECT_EQ(r.tree.root().label, NodeLabel::kTerminal);
}

TEST(Parse, HandSetWeightsInvertBeforeVerbClass) {
  const Sentence s = tagged({{"N", 0}, {"N", 1}, {"V", 2}});
  const PreorderModel m({{"I.rcls:0", -1.0}, {"I.rcls:1", -1.0}, {"I.rcls:2", 1.0}}, 20, 30);
  const auto r = parse_btg(m, s, 20);
  const auto expected = BtgTree::join(
      NodeLabel::kStraight, BtgTree::terminal({0, 1}),
      BtgTree::join(NodeLabel::kInverted, BtgTree::terminal({1, 2}), BtgTree::terminal({2, 3})));
  EXPECT_EQ(tree_to_permutation(r.tree), tree_to_permutation(expected));
  EXPECT_EQ(r.tree.root().label, NodeLabel::kStraight);
  EXPECT_EQ(r.tree.nodes[static_cast<std::size_t>(r.tree.root().left)].span, (Span{0, 1}));
  EXPECT_DOUBLE_EQ(r.score, 1.0);
}

TEST(Parse, ZeroWeightsGiveIdentity) {
  std::mt19937_64 rng(1);
  for (std::size_t n = 1; n <= 7; ++n) {
    const auto s = random_sentence(rng, n);
    Perm id(n);
    std::iota(id.begin(), id.end(), std::size_t{0});
    EXPECT_EQ(tree_to_permutation(parse_btg(PreorderModel{}, s, 20).tree), id);
  }
}

TEST(Parse, WideBeamIsExactAndNarrowBeamNoBetter) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = 1 + rng() % 4;
    const auto s = random_sentence(rng, n);
    const auto m = random_model(rng, s);
    const double best = testing::best_tree_score(m, s);
    const auto wide = parse_btg(m, s, 22);
    const auto narrow = parse_btg(m, s, 1);
    EXPECT_NEAR(wide.score, best, 1e-9);
    EXPECT_NEAR(score_tree(m, s, wide.tree), wide.score, 1e-9);
    EXPECT_NEAR(score_tree(m, s, narrow.tree), narrow.score, 1e-9);
    EXPECT_LE(narrow.score, wide.score + 1e-12);
  }
}

TEST(Oracle, MaximizesConcordance) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 150; ++t) {
    const std::size_t n = 1 + rng() % 5;
    const auto s = random_sentence(rng, n);
    Perm target(n);
    std::iota(target.begin(), target.end(), std::size_t{0});
    std::shuffle(target.begin(), target.end(), rng);
    const auto m = random_model(rng, s);
    const auto o = oracle_tree(m, s, target);
    validate_tree(o.tree);
    const auto conc = concordant_pairs(tree_to_permutation(o.tree), target);
    EXPECT_EQ(conc, testing::best_reachable_concordance(target));
    // Among equally accurate trees the model score decides.
    double best = -1e300;
    for (const auto& tr : enumerate_trees(n))
      if (concordant_pairs(tree_to_permutation(tr), target) == conc)
        best = std::max(best, score_tree(m, s, tr));
    EXPECT_NEAR(o.score, best, 1e-9);
  }
}

TEST(Oracle, ReachableTargetIsExactUnreachableIsNot) {
  std::mt19937_64 rng(2);
  const auto s = random_sentence(rng, 4);
  for (const auto& tr : enumerate_trees(4)) {
    const auto p = tree_to_permutation(tr);
    EXPECT_EQ(tree_to_permutation(oracle_tree(PreorderModel{}, s, p).tree), p);
  }
  EXPECT_NE(tree_to_permutation(oracle_tree(PreorderModel{}, s, Perm{1, 3, 0, 2}).tree),
            (Perm{1, 3, 0, 2}));
}

TEST(Train, IdentityTargetsStayIdentity) {
  std::mt19937_64 rng(5);
  std::vector<Sentence> sents;
  std::vector<Perm> targets;
  for (int i = 0; i < 40; ++i) {
    sents.push_back(random_sentence(rng, 1 + rng() % 6));
    Perm id(sents.back().size());
    std::iota(id.begin(), id.end(), std::size_t{0});
    targets.push_back(id);
  }
  PreorderTrainOptions opts;
  opts.iterations = 5;
  PreorderTrainStats stats;
  const auto m = train_preorder(sents, targets, opts, &stats);
  EXPECT_EQ(stats.updates, 0u);
  EXPECT_EQ(stats.epoch_mean_tau.size(), 5u);
  for (std::size_t i = 0; i < sents.size(); ++i)
    EXPECT_EQ(apply_preorder(m, sents[i]).perm, targets[i]);
}

TEST(Train, ZeroIterationsGivesEmptyModel) {
  const auto sample = testing::make_sov_sample(10, 3);
  std::vector<Sentence> sents = sample.sentences;
  for (auto& s : sents)
    for (auto& t : s.tokens) t.word_class = 0;
  PreorderTrainOptions opts;
  opts.iterations = 0;
  const auto m = train_preorder(sents, sample.targets, opts);
  EXPECT_TRUE(m.weights().empty());
  const auto r = apply_preorder(m, sents[0]);
  EXPECT_EQ(r.reordered, sents[0]);
}

TEST(Train, LearnsSovToSvo) {
  auto train = testing::make_sov_sample(150, 1);
  auto test = testing::make_sov_sample(40, 2);
  for (auto* sample : {&train, &test})
    for (auto& s : sample->sentences)
      for (auto& t : s.tokens) t.word_class = 0;
  PreorderTrainOptions opts;
  opts.iterations = 10;
  const auto m = train_preorder(train.sentences, train.targets, opts);
  double tau = 0.0;
  for (std::size_t i = 0; i < test.sentences.size(); ++i)
    tau += kendall_tau(apply_preorder(m, test.sentences[i]).perm, test.targets[i]);
  EXPECT_GE(tau / static_cast<double>(test.sentences.size()), 0.95);

  Sentence sov;
  for (const char* tag : {"S", "O", "V"}) {
    Token t(std::string("w") + tag, tag);
    t.word_class = 0;
    sov.tokens.push_back(t);
  }
  const auto r = apply_preorder(m, sov);
  EXPECT_EQ(r.perm, (Perm{0, 2, 1}));
  EXPECT_EQ(r.reordered.words(), (std::vector<std::string>{"wS", "wV", "wO"}));
}

TEST(Train, SameSeedSameModel) {
  auto sample = testing::make_sov_sample(40, 4);
  for (auto& s : sample.sentences)
    for (auto& t : s.tokens) t.word_class = 1;
  PreorderTrainOptions opts;
  opts.iterations = 3;
  const auto a = train_preorder(sample.sentences, sample.targets, opts);
  const auto b = train_preorder(sample.sentences, sample.targets, opts);
  EXPECT_EQ(a.to_json(), b.to_json());
}

TEST(Model, JsonRoundTrip) {
  const PreorderModel m({{"I.rcls:2", 1.5}, {"S.bias:", -0.25}}, 7, 3);
  const auto back = PreorderModel::from_json(m.to_json());
  EXPECT_EQ(back.weights(), m.weights());
  EXPECT_EQ(back.beam_width(), 7);
  EXPECT_EQ(back.iterations(), 3);
  EXPECT_EQ(back.weight("missing"), 0.0);
  EXPECT_THROW(PreorderModel::from_json(R"({"beam":0,"iterations":1,"weights":{}})"), DataError);
}

}  // namespace
}  // namespace snr
