#include "serml/corpus.hpp"
#include "serml/log.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

using namespace serml;
using namespace serml::corpus;

namespace {

struct CaptureWarnings {
  std::vector<std::string> lines;
  WarningSink previous;
  CaptureWarnings() {
    previous = set_warning_sink([this](const std::string& w) { lines.push_back(w); });
  }
  ~CaptureWarnings() { set_warning_sink(previous); }
};

Interaction ix(std::string u, std::string v, int rating = 5, std::string review = "ok.") {
  return {std::move(u), std::move(v), rating, std::move(review), Split::kTrain};
}

// Deletes one under-threshold entity at a time until none is left.
std::set<std::pair<std::string, std::string>> kcore_oracle(std::vector<Interaction> data, int ku, int kv) {
  for (bool changed = true; changed;) {
    changed = false;
    std::map<std::string, int> users, items;
    for (const auto& x : data) {
      ++users[x.user_id];
      ++items[x.item_id];
    }
    for (const auto& [u, n] : users) {
      if (n < ku) {
        std::erase_if(data, [&](const Interaction& x) { return x.user_id == u; });
        changed = true;
        break;
      }
    }
    if (changed) {
      continue;
    }
    for (const auto& [v, n] : items) {
      if (n < kv) {
        std::erase_if(data, [&](const Interaction& x) { return x.item_id == v; });
        changed = true;
        break;
      }
    }
  }
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& x : data) {
    out.insert({x.user_id, x.item_id});
  }
  return out;
}

}  // namespace

TEST(Ingest, ParsesWellFormedLines) {
  std::istringstream in(
      R"({"user_id":"a","item_id":"x","rating":5,"review_text":"Great. Really."})"
      "\n"
      R"({"user_id":"b","item_id":"y","rating":1,"review_text":"bad"})"
      "\n"
      R"({"user_id":"c","item_id":"x","rating":3.0,"review_text":""})"
      "\n");
  const auto rep = ingest_jsonl(in);
  ASSERT_EQ(rep.interactions.size(), 3u);
  EXPECT_EQ(rep.malformed, 0u);
  EXPECT_EQ(rep.empty_reviews, 1u);
  EXPECT_EQ(rep.interactions[0].rating, 5);
  EXPECT_EQ(rep.interactions[1].rating, 1);
  EXPECT_EQ(rep.interactions[2].rating, 3);
  EXPECT_EQ(rep.interactions[0].review, "Great. Really.");
}

TEST(Ingest, SkipsMissingRatingWithWarning) {
  CaptureWarnings warnings;
  std::istringstream in(
      R"({"user_id":"a","item_id":"x","rating":4,"review_text":"fine"})"
      "\n"
      R"({"user_id":"a","item_id":"y","review_text":"no rating"})"
      "\n"
      R"({"user_id":"b","item_id":"x","rating":2,"review_text":"meh"})"
      "\n");
  const auto rep = ingest_jsonl(in);
  EXPECT_EQ(rep.interactions.size(), 2u);
  EXPECT_EQ(rep.malformed, 1u);
  EXPECT_EQ(warnings.lines.size(), 1u);
}

TEST(Ingest, RejectsGarbageAndOutOfRange) {
  CaptureWarnings warnings;
  std::istringstream in(
      "not json\n"
      R"({"user_id":"a","item_id":"x","rating":7,"review_text":"x"})"
      "\n"
      R"({"user_id":"a","item_id":"x","rating":2.5,"review_text":"x"})"
      "\n"
      R"({"user_id":"a","rating":2,"review_text":"x"})"
      "\n");
  const auto rep = ingest_jsonl(in);
  EXPECT_TRUE(rep.interactions.empty());
  EXPECT_EQ(rep.malformed, 4u);
}

TEST(Ingest, UnreadableFileThrows) {
  EXPECT_THROW(ingest_jsonl(std::filesystem::path("/nonexistent/reviews.jsonl")), std::runtime_error);
}

TEST(KCore, ThresholdOneIsIdentity) {
  std::vector<Interaction> data{ix("a", "x"), ix("b", "y"), ix("b", "x")};
  EXPECT_EQ(kcore_filter(data, 1, 1).size(), 3u);
}

TEST(KCore, StarGraphCascadesToEmpty) {
  CaptureWarnings warnings;
  std::vector<Interaction> data;
  for (int i = 0; i < 5; ++i) {
    data.push_back(ix("hub", "item" + std::to_string(i)));
  }
  EXPECT_TRUE(kcore_filter(data, 1, 2).empty());
  EXPECT_EQ(warnings.lines.size(), 1u);
}

TEST(KCore, GridMatchesIterativeDeletionOracle) {
  // 10 x 10 grid; users 0-2 keep only 4 items each, and item 9 loses
  // enough users to fall below the threshold too.
  std::vector<Interaction> data;
  for (int u = 0; u < 10; ++u) {
    for (int v = 0; v < 10; ++v) {
      const bool thin_user = u < 3 && v >= 4;
      const bool thin_item = v == 9 && u >= 3 && u < 8;
      if (!thin_user && !thin_item) {
        data.push_back(ix("u" + std::to_string(u), "v" + std::to_string(v)));
      }
    }
  }
  const auto kept = kcore_filter(data, 5, 5);
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& x : kept) {
    got.insert({x.user_id, x.item_id});
    EXPECT_NE(x.user_id, "u0");
    EXPECT_NE(x.item_id, "v9");
  }
  EXPECT_EQ(got, kcore_oracle(data, 5, 5));
  EXPECT_EQ(kcore_filter(kept, 5, 5).size(), kept.size());
}

TEST(KCore, RandomGraphsMatchOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Interaction> data;
    for (int u = 0; u < 15; ++u) {
      for (int v = 0; v < 15; ++v) {
        if (uniform01(rng) < 0.3) {
          data.push_back(ix("u" + std::to_string(u), "v" + std::to_string(v)));
        }
      }
    }
    CaptureWarnings quiet;
    const auto kept = kcore_filter(data, 3, 4);
    std::set<std::pair<std::string, std::string>> got;
    for (const auto& x : kept) {
      got.insert({x.user_id, x.item_id});
    }
    EXPECT_EQ(got, kcore_oracle(data, 3, 4)) << "trial " << trial;
  }
}

TEST(Split, RatiosAndDeterminism) {
  std::vector<Interaction> data;
  for (int u = 0; u < 20; ++u) {
    for (int v = 0; v < 50; ++v) {
      data.push_back(ix("u" + std::to_string(u), "v" + std::to_string(v)));
    }
  }
  auto a = data;
  auto b = data;
  split_interactions(a, {}, 11);
  split_interactions(b, {}, 11);
  std::array<int, 3> counts{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].split, b[i].split);
    ++counts[static_cast<int>(a[i].split)];
  }
  // 1000 Bernoulli draws: within 4 sd of 800/100/100.
  EXPECT_NEAR(counts[0], 800, 4 * std::sqrt(1000 * 0.8 * 0.2));
  EXPECT_NEAR(counts[1], 100, 4 * std::sqrt(1000 * 0.1 * 0.9));
  EXPECT_NEAR(counts[2], 100, 4 * std::sqrt(1000 * 0.1 * 0.9));
}

TEST(Split, UnseenUsersAndItemsMoveToTrain) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::vector<Interaction> data{ix("lonely", "x")};
    for (int u = 0; u < 10; ++u) {
      for (int v = 0; v < 6; ++v) {
        data.push_back(ix("u" + std::to_string(u), "v" + std::to_string(v)));
      }
    }
    data.push_back(ix("u1", "rare"));
    data.push_back(ix("u1", "v2"));  // duplicate pair follows its first occurrence
    split_interactions(data, {0.5, 0.25, 0.25}, seed);
    EXPECT_EQ(data.front().split, Split::kTrain);
    EXPECT_EQ(data[data.size() - 2].split, Split::kTrain);
    EXPECT_EQ(data.back().split, data[1 * 6 + 2 + 1].split);

    std::set<std::string> train_users, train_items;
    std::set<std::pair<std::string, std::string>> train_pairs;
    for (const auto& x : data) {
      if (x.split == Split::kTrain) {
        train_users.insert(x.user_id);
        train_items.insert(x.item_id);
        train_pairs.insert({x.user_id, x.item_id});
      }
    }
    for (const auto& x : data) {
      if (x.split != Split::kTrain) {
        EXPECT_TRUE(train_users.contains(x.user_id));
        EXPECT_TRUE(train_items.contains(x.item_id));
        EXPECT_FALSE(train_pairs.contains({x.user_id, x.item_id}));
      }
    }
  }
}

TEST(Split, BadRatiosThrow) {
  std::vector<Interaction> data{ix("a", "x")};
  EXPECT_THROW(split_interactions(data, {0.5, 0.5, 0.5}, 1), std::invalid_argument);
}

TEST(Tokenize, SegmentsOnTerminalPunctuation) {
  const auto sentences = segment("Great movie. Loved it.");
  ASSERT_EQ(sentences.size(), 2u);
  EXPECT_EQ(sentences[0], (std::vector<std::string>{"great", "movie"}));
  EXPECT_EQ(sentences[1], (std::vector<std::string>{"loved", "it"}));
  EXPECT_EQ(segment("Wow!! Really?  no end").size(), 3u);
  EXPECT_TRUE(segment("").empty());
  EXPECT_TRUE(segment(" ... !! ").empty());
  EXPECT_EQ(segment("Don't stop")[0][0], "don't");
}

TEST(Tokenize, VocabularyOrderAndUnknowns) {
  const std::vector<std::string> reviews{"b a a. c b a", "a d"};
  const auto vocab = Vocabulary::build(reviews, 2, {});
  ASSERT_EQ(vocab.size(), 4u);  // pad, unk, a (4), b (2)
  EXPECT_EQ(vocab.token(2), "a");
  EXPECT_EQ(vocab.token(3), "b");
  EXPECT_EQ(vocab.id("c"), Vocabulary::kUnk);
  EXPECT_EQ(vocab.id("zebra"), Vocabulary::kUnk);

  const auto doc = tokenize("Great movie. Loved it.", vocab);
  ASSERT_EQ(doc.num_sentences(), 2);
  EXPECT_EQ(doc.sentence_lengths(), (std::vector<int>{2, 2}));
  EXPECT_EQ(doc.sentences[0][0], Vocabulary::kUnk);
  EXPECT_TRUE(tokenize("", vocab).empty());
}

TEST(Tokenize, CapsTruncate) {
  std::string text;
  for (int i = 0; i < 40; ++i) {
    text += "one two three four five six seven. ";
  }
  const auto vocab = Vocabulary::build(std::vector<std::string>{text}, 1, TextCaps{30, 5});
  const auto doc = tokenize(text, vocab);
  EXPECT_EQ(doc.num_sentences(), 30);
  for (int n : doc.sentence_lengths()) {
    EXPECT_EQ(n, 5);
  }
  EXPECT_EQ(tokenize(text, vocab).sentences, doc.sentences);
}

TEST(Sampler, ForcedAndExhaustedPools) {
  const NegativeSampler sampler(5, {{0, 1, 2, 3}, {}});
  Rng rng(1);
  EXPECT_EQ(sampler.sample(0, 1, rng), (std::vector<std::int32_t>{4}));
  EXPECT_EQ(sampler.sample(0, 500, rng).size(), 1u);

  std::vector<std::int32_t> seen(50);
  std::iota(seen.begin(), seen.end(), 0);
  const NegativeSampler big(500, {seen});
  const auto all = big.sample(0, 500, rng);
  EXPECT_EQ(all.size(), 450u);
  EXPECT_EQ(std::set<std::int32_t>(all.begin(), all.end()).size(), 450u);
  EXPECT_THROW(sampler.sample(7, 1, rng), std::out_of_range);
}

TEST(Sampler, NeverReturnsExcludedAndIsDistinct) {
  std::vector<std::int32_t> excluded;
  for (int i = 0; i < 100; i += 3) {
    excluded.push_back(i);
  }
  const NegativeSampler sampler(100, {excluded});
  Rng rng(3);
  for (std::size_t n : {1u, 5u, 20u, 40u, 66u}) {
    const auto s = sampler.sample(0, n, rng);
    EXPECT_EQ(s.size(), std::min<std::size_t>(n, 66));
    EXPECT_EQ(std::set<std::int32_t>(s.begin(), s.end()).size(), s.size());
    for (auto v : s) {
      EXPECT_FALSE(sampler.is_excluded(0, v));
      EXPECT_NE(v % 3, 0);
    }
  }
}

TEST(Sampler, UniformChiSquare) {
  // 10^5 draws of one item from a 50-item pool, and 10^4 draws of 10
  // without replacement; both must look uniform (chi-square, 49 dof).
  const NegativeSampler sampler(60, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}});
  for (std::size_t n : {1u, 10u}) {
    Rng rng(17 + n);
    std::vector<double> counts(60, 0.0);
    const int draws = n == 1 ? 100000 : 10000;
    for (int t = 0; t < draws; ++t) {
      for (auto v : sampler.sample(0, n, rng)) {
        counts[static_cast<std::size_t>(v)] += 1.0;
      }
    }
    const double expected = static_cast<double>(draws) * n / 50.0;
    double chi2 = 0.0;
    for (int v = 10; v < 60; ++v) {
      chi2 += (counts[v] - expected) * (counts[v] - expected) / expected;
    }
    for (int v = 0; v < 10; ++v) {
      EXPECT_EQ(counts[v], 0.0);
    }
    // mean 49, sd sqrt(98); 3 sd upper bound
    EXPECT_LT(chi2, 49.0 + 3.0 * std::sqrt(98.0)) << "n=" << n;
  }
}

TEST(Dataset, PrepareSaveLoadRoundTrip) {
  std::vector<Interaction> raw;
  Rng rng(2);
  for (int u = 0; u < 12; ++u) {
    for (int v = 0; v < 12; ++v) {
      if ((u + v) % 3 != 0) {
        raw.push_back(ix("user" + std::to_string(u), "item" + std::to_string(v), 1 + (u * v) % 5,
                         "Sound is great. Strings " + std::to_string(v % 4) + " buzz!"));
      }
    }
  }
  PrepareOptions opt;
  opt.seed = 9;
  opt.min_freq = 1;
  const auto data = prepare(raw, opt);
  EXPECT_EQ(data.n_users(), 12u);
  EXPECT_TRUE(std::is_sorted(data.users.begin(), data.users.end()));

  const auto dir = std::filesystem::temp_directory_path() / "serml_dataset_roundtrip";
  std::filesystem::remove_all(dir);
  save_dataset(data, dir);
  const auto loaded = load_dataset(dir);
  EXPECT_EQ(loaded.users, data.users);
  EXPECT_EQ(loaded.items, data.items);
  EXPECT_EQ(loaded.vocab.size(), data.vocab.size());
  for (int s = 0; s < 3; ++s) {
    ASSERT_EQ(loaded.splits[s].size(), data.splits[s].size());
    for (std::size_t i = 0; i < data.splits[s].size(); ++i) {
      EXPECT_EQ(loaded.splits[s][i].user, data.splits[s][i].user);
      EXPECT_EQ(loaded.splits[s][i].item, data.splits[s][i].item);
      EXPECT_EQ(loaded.splits[s][i].rating, data.splits[s][i].rating);
      EXPECT_EQ(loaded.splits[s][i].doc.sentences, data.splits[s][i].doc.sentences);
    }
  }
  EXPECT_EQ(loaded.manifest_json(), data.manifest_json());
  EXPECT_THROW(data.user_index("nobody"), std::out_of_range);
  std::filesystem::remove_all(dir);
}
