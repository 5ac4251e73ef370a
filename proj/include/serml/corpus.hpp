#pragma once

#include "serml/random.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace serml::corpus {

enum class Split : std::uint8_t { kTrain = 0, kValid = 1, kTest = 2 };

std::string_view split_name(Split s);

struct Interaction {
  std::string user_id;
  std::string item_id;
  int rating = 0;
  std::string review;
  Split split = Split::kTrain;
};

struct IngestReport {
  std::vector<Interaction> interactions;
  std::size_t malformed = 0;      // lines skipped
  std::size_t empty_reviews = 0;  // kept, but flagged
};

// Reads line-delimited JSON records with fields user_id, item_id, rating,
// review_text. Records missing a field, or with a rating outside
// [1, r_max], are skipped with a warning. Throws std::runtime_error if the
// file cannot be opened.
IngestReport ingest_jsonl(const std::filesystem::path& path, int r_max = 5);
IngestReport ingest_jsonl(std::istream& in, int r_max = 5);

// Iteratively drops users with fewer than k_user interactions and items with
// fewer than k_item interactions until nothing changes.
std::vector<Interaction> kcore_filter(std::vector<Interaction> data, int k_user, int k_item);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

// Per-interaction random assignment. Valid/test interactions whose user or
// item never occurs in train are moved to train; duplicate (user, item)
// pairs all follow the split of their first occurrence.
void split_interactions(std::vector<Interaction>& data, SplitRatios ratios, std::uint64_t seed);

struct DatasetStats {
  std::size_t n_users = 0;
  std::size_t n_items = 0;
  std::size_t n_interactions = 0;
  double density = 0.0;
  std::unordered_map<std::string, std::size_t> per_user;
  std::unordered_map<std::string, std::size_t> per_item;
};

DatasetStats compute_stats(std::span<const Interaction> data);

struct TextCaps {
  int max_sentences = 30;
  int max_words = 50;
};

class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;

  Vocabulary() : Vocabulary(std::vector<std::string>{}, TextCaps{}) {}
  // `tokens` lists the regular tokens; ids are assigned from 2 in order.
  Vocabulary(std::vector<std::string> tokens, TextCaps caps);

  // Counts tokens over `reviews`, keeps those seen at least min_freq times,
  // ordered by descending frequency then lexicographically.
  static Vocabulary build(std::span<const std::string> reviews, int min_freq, TextCaps caps);

  std::int32_t id(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return id_to_token_.size(); }
  const TextCaps& caps() const { return caps_; }
  std::span<const std::string> tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
  TextCaps caps_;
};

// Sentences of token ids. Rows may carry trailing kPad entries, and trailing
// rows may be entirely padding; both are ignored by the encoder.
struct TokenizedDoc {
  std::vector<std::vector<std::int32_t>> sentences;

  int num_sentences() const;
  // Length of the non-pad prefix of sentence i.
  int sentence_length(std::size_t i) const;
  std::vector<int> sentence_lengths() const;
  bool empty() const { return num_sentences() == 0; }
};

// Lowercased word tokens per sentence; sentences end on '.', '!' or '?'.
std::vector<std::vector<std::string>> segment(std::string_view review);

TokenizedDoc tokenize(std::string_view review, const Vocabulary& vocab);

// Uniform negative sampling without replacement from all items minus a
// per-user excluded set.
class NegativeSampler {
 public:
  NegativeSampler(std::size_t n_items, std::vector<std::vector<std::int32_t>> excluded);

  // Returns min(n, pool) distinct items. Throws std::out_of_range for an
  // unknown user.
  std::vector<std::int32_t> sample(std::int32_t user, std::size_t n, Rng& rng) const;
  std::size_t pool_size(std::int32_t user) const;
  bool is_excluded(std::int32_t user, std::int32_t item) const;
  std::size_t n_items() const { return n_items_; }

 private:
  const std::vector<std::int32_t>& excluded(std::int32_t user) const;

  std::size_t n_items_;
  std::vector<std::vector<std::int32_t>> excluded_;  // sorted, unique
};

// Indexed record of a prepared dataset.
struct Record {
  std::int32_t user = 0;
  std::int32_t item = 0;
  int rating = 0;
  TokenizedDoc doc;
};

struct PrepareOptions {
  int kcore_user = 5;
  int kcore_item = 5;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  int min_freq = 2;
  TextCaps caps;
  int r_max = 5;
};

struct Dataset {
  std::vector<std::string> users;  // index -> id, ascending
  std::vector<std::string> items;
  Vocabulary vocab;
  std::array<std::vector<Record>, 3> splits;
  int r_max = 5;
  std::uint64_t seed = 0;
  int kcore = 0;
  int min_freq = 2;

  const std::vector<Record>& split(Split s) const { return splits[static_cast<int>(s)]; }
  std::vector<Record>& split(Split s) { return splits[static_cast<int>(s)]; }
  std::size_t n_users() const { return users.size(); }
  std::size_t n_items() const { return items.size(); }

  std::int32_t user_index(std::string_view id) const;  // throws std::out_of_range
  std::int32_t item_index(std::string_view id) const;

  // Sorted positive items per user over the given splits.
  std::vector<std::vector<std::int32_t>> positives(std::span<const Split> which) const;
  std::vector<std::vector<std::int32_t>> train_positives() const;
  std::vector<std::vector<std::int32_t>> all_positives() const;

  // Compact JSON summary recorded by `prepare` and copied into checkpoints.
  std::string manifest_json() const;
};

// kcore -> split -> index -> vocabulary (train only) -> tokenize.
Dataset prepare(std::vector<Interaction> raw, const PrepareOptions& options);

// Builds a dataset from interactions whose split field is already set.
Dataset index_dataset(std::span<const Interaction> data, const PrepareOptions& options);

// Directory layout: manifest.json, users.txt, items.txt, vocab.txt and
// {train,valid,test}.bin.
void save_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace serml::corpus
