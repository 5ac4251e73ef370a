#pragma once

#include "serml/corpus.hpp"

#include <cstdint>
#include <vector>

namespace serml::synthetic {

// Two item categories with disjoint review vocabularies. Items come in
// groups of four (two per category) that share one identical set of users,
// so interactions alone cannot tell a group's categories apart. Users rate
// items of their preferred category 4-5 and the others 1-2.
struct SyntheticSpec {
  int users = 50;
  int groups = 5;
  int groups_per_user = 1;
  int sentences = 3;
  int words_per_sentence = 6;
  // Share of users who prefer the second category.
  double prefer_second = 0.0;
  // Probability that a category word is replaced by one of the other
  // category; 0 keeps the vocabularies disjoint.
  double word_noise = 0.0;
  bool swap_categories = false;  // relabel: the first two items of a group become category B
  corpus::SplitRatios ratios{1.0, 0.0, 0.0};
  std::uint64_t seed = 1;
};

struct SyntheticCorpus {
  std::vector<corpus::Interaction> interactions;
  // Indexed by item number (item id "i%03d").
  std::vector<int> item_group;
  std::vector<int> item_category;  // 0 or 1
  std::vector<int> user_preference;
};

SyntheticCorpus generate(const SyntheticSpec& spec);

// Indexes the corpus without k-core filtering; every token is kept.
corpus::Dataset to_dataset(const SyntheticCorpus& corpus, const SyntheticSpec& spec);

}  // namespace serml::synthetic
