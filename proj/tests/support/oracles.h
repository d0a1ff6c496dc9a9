#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "snr/matrix.h"
#include "snr/preorder.h"

namespace snr::testing {

// Greedy extraction by re-scanning the whole remaining matrix each step.
std::vector<std::size_t> greedy_rescan(const Matrix& scores);

// Best total score over all injective gloss -> word maps.
double best_assignment_score(const Matrix& scores);

double assignment_score(const Matrix& scores, const std::vector<std::size_t>& word_of_gloss);

// Every BTG tree over [0, W), including multi-token terminals.
std::vector<BtgTree> enumerate_trees(std::size_t W);

std::set<std::vector<std::size_t>> reachable_permutations(std::size_t W);

std::size_t brute_concordant(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Highest model score over all trees.
double best_tree_score(const PreorderModel& model, const Sentence& sentence);

// Most concordant pairs with `target` over all trees.
std::size_t best_reachable_concordance(std::span<const std::size_t> target);

// Class-bigram average mutual information with sentence boundaries as an
// extra class. `cls` maps every word of the sentences to a class label.
double class_ami(const std::vector<std::vector<std::string>>& sentences,
                 const std::map<std::string, int>& cls);

// Every partition of `words` into exactly k blocks, as class labels.
std::vector<std::map<std::string, int>> partitions(const std::vector<std::string>& words,
                                                   std::size_t k);

}  // namespace snr::testing
