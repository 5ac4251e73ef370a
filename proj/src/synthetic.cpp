#include "serml/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <stdexcept>
#include <string_view>

namespace serml::synthetic {
namespace {

constexpr std::array<std::string_view, 10> kCategoryWords[2] = {
    {"crisp", "bright", "acoustic", "strings", "tuner", "fretboard", "maple", "resonant", "capo", "chord"},
    {"battery", "charger", "screen", "cable", "wireless", "pixel", "firmware", "bluetooth", "adapter", "port"},
};
constexpr std::array<std::string_view, 6> kPositive = {"great", "love", "excellent", "perfect", "happy", "solid"};
constexpr std::array<std::string_view, 6> kNegative = {"awful", "broken", "poor", "hate", "cheap", "returned"};
constexpr std::array<std::string_view, 6> kFiller = {"the", "it", "this", "was", "and", "really"};

std::string format_id(char prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%03d", prefix, i);
  return buf;
}

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& words, Rng& rng) {
  return words[uniform_index(rng, N)];
}

std::string review(int category, int rating, const SyntheticSpec& spec, Rng& rng) {
  std::string text;
  for (int s = 0; s < spec.sentences; ++s) {
    for (int w = 0; w < spec.words_per_sentence; ++w) {
      std::string_view word;
      const int slot = (w + s) % 3;
      if (slot == 0) {
        word = rating >= 4 ? pick(kPositive, rng) : pick(kNegative, rng);
      } else if (slot == 1) {
        const bool flip = spec.word_noise > 0.0 && uniform01(rng) < spec.word_noise;
        word = pick(kCategoryWords[flip ? 1 - category : category], rng);
      } else {
        word = pick(kFiller, rng);
      }
      if (w > 0) {
        text += ' ';
      }
      text += word;
    }
    text += s % 2 == 0 ? ". " : "! ";
  }
  return text;
}

}  // namespace

SyntheticCorpus generate(const SyntheticSpec& spec) {
  if (spec.users < spec.groups || spec.groups < 1 || spec.groups_per_user < 1 || spec.groups_per_user > spec.groups ||
      spec.sentences < 1 || spec.words_per_sentence < 1) {
    throw std::invalid_argument("invalid synthetic spec");
  }
  SyntheticCorpus out;
  const int n_items = 4 * spec.groups;
  for (int i = 0; i < n_items; ++i) {
    out.item_group.push_back(i / 4);
    const int cat = (i % 4) / 2;
    out.item_category.push_back(spec.swap_categories ? 1 - cat : cat);
  }

  Rng rng(derive_seed(spec.seed, 0x5e17));
  std::vector<std::vector<int>> group_users(static_cast<std::size_t>(spec.groups));
  for (int u = 0; u < spec.users; ++u) {
    out.user_preference.push_back(uniform01(rng) < spec.prefer_second ? 1 : 0);
    // Round-robin keeps group sizes balanced; extra groups are random.
    std::vector<int> mine{u % spec.groups};
    while (static_cast<int>(mine.size()) < spec.groups_per_user) {
      const int g = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(spec.groups)));
      if (std::find(mine.begin(), mine.end(), g) == mine.end()) {
        mine.push_back(g);
      }
    }
    for (int g : mine) {
      group_users[static_cast<std::size_t>(g)].push_back(u);
    }
  }

  for (int g = 0; g < spec.groups; ++g) {
    for (int u : group_users[static_cast<std::size_t>(g)]) {
      for (int k = 0; k < 4; ++k) {
        const int item = 4 * g + k;
        const int cat = out.item_category[static_cast<std::size_t>(item)];
        const bool liked = cat == out.user_preference[static_cast<std::size_t>(u)];
        const int rating = liked ? 4 + static_cast<int>(uniform_index(rng, 2))
                                 : 1 + static_cast<int>(uniform_index(rng, 2));
        out.interactions.push_back(
            {format_id('u', u), format_id('i', item), rating, review(cat, rating, spec, rng), corpus::Split::kTrain});
      }
    }
  }
  corpus::split_interactions(out.interactions, spec.ratios, derive_seed(spec.seed, 0x5e18));
  return out;
}

corpus::Dataset to_dataset(const SyntheticCorpus& corpus, const SyntheticSpec& spec) {
  corpus::PrepareOptions opt;
  opt.kcore_user = 0;
  opt.kcore_item = 0;
  opt.ratios = spec.ratios;
  opt.seed = spec.seed;
  opt.min_freq = 1;
  return corpus::index_dataset(corpus.interactions, opt);
}

}  // namespace serml::synthetic
