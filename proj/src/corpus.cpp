#include "serml/corpus.hpp"

#include "serml/log.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace serml::corpus {

using nlohmann::json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValid:
      return "valid";
    case Split::kTest:
      return "test";
  }
  return "?";
}

namespace {

bool read_id(const json& record, const char* key, std::string& out) {
  auto it = record.find(key);
  if (it == record.end()) {
    return false;
  }
  if (it->is_string()) {
    out = it->get<std::string>();
  } else if (it->is_number_integer()) {
    out = std::to_string(it->get<long long>());
  } else {
    return false;
  }
  return !out.empty();
}

bool read_rating(const json& record, int& out) {
  auto it = record.find("rating");
  if (it == record.end() || !it->is_number()) {
    return false;
  }
  const double value = it->get<double>();
  if (!std::isfinite(value) || value != std::floor(value)) {
    return false;
  }
  out = static_cast<int>(value);
  return true;
}

}  // namespace

IngestReport ingest_jsonl(const std::filesystem::path& path, int r_max) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  return ingest_jsonl(in, r_max);
}

IngestReport ingest_jsonl(std::istream& in, int r_max) {
  IngestReport report;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    auto skip = [&](const std::string& why) {
      ++report.malformed;
      warn("line " + std::to_string(line_no) + ": " + why + ", record skipped");
    };
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded() || !record.is_object()) {
      skip("not a JSON object");
      continue;
    }
    Interaction x;
    if (!read_id(record, "user_id", x.user_id)) {
      skip("missing user_id");
      continue;
    }
    if (!read_id(record, "item_id", x.item_id)) {
      skip("missing item_id");
      continue;
    }
    if (!read_rating(record, x.rating)) {
      skip("missing or non-integer rating");
      continue;
    }
    if (x.rating < 1 || x.rating > r_max) {
      skip("rating " + std::to_string(x.rating) + " outside [1, " + std::to_string(r_max) + "]");
      continue;
    }
    auto review = record.find("review_text");
    if (review == record.end() || !review->is_string()) {
      skip("missing review_text");
      continue;
    }
    x.review = review->get<std::string>();
    if (x.review.empty()) {
      ++report.empty_reviews;
    }
    report.interactions.push_back(std::move(x));
  }
  return report;
}

std::vector<Interaction> kcore_filter(std::vector<Interaction> data, int k_user, int k_item) {
  if (k_user < 1 || k_item < 1) {
    throw std::invalid_argument("kcore thresholds must be >= 1");
  }
  for (;;) {
    std::unordered_map<std::string, std::size_t> users;
    std::unordered_map<std::string, std::size_t> items;
    for (const auto& x : data) {
      ++users[x.user_id];
      ++items[x.item_id];
    }
    const auto before = data.size();
    std::erase_if(data, [&](const Interaction& x) {
      return users[x.user_id] < static_cast<std::size_t>(k_user) ||
             items[x.item_id] < static_cast<std::size_t>(k_item);
    });
    if (data.size() == before) {
      break;
    }
  }
  if (data.empty()) {
    warn("k-core filter removed every interaction");
  }
  return data;
}

void split_interactions(std::vector<Interaction>& data, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must be non-negative and sum to 1");
  }
  Rng rng(derive_seed(seed, 0x5011));
  std::map<std::pair<std::string, std::string>, std::size_t> first_of_pair;
  std::vector<std::size_t> leaders;  // first occurrence of each pair, in file order
  std::vector<std::size_t> leader_of(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, inserted] = first_of_pair.try_emplace({data[i].user_id, data[i].item_id}, i);
    leader_of[i] = it->second;
    if (inserted) {
      leaders.push_back(i);
      const double u = uniform01(rng);
      data[i].split = u < ratios.train                   ? Split::kTrain
                      : u < ratios.train + ratios.valid ? Split::kValid
                                                         : Split::kTest;
    }
  }

  std::unordered_set<std::string> train_users;
  std::unordered_set<std::string> train_items;
  for (auto i : leaders) {
    if (data[i].split == Split::kTrain) {
      train_users.insert(data[i].user_id);
      train_items.insert(data[i].item_id);
    }
  }
  for (auto i : leaders) {
    auto& x = data[i];
    if (x.split != Split::kTrain &&
        (!train_users.contains(x.user_id) || !train_items.contains(x.item_id))) {
      x.split = Split::kTrain;
      train_users.insert(x.user_id);
      train_items.insert(x.item_id);
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].split = data[leader_of[i]].split;
  }
}

DatasetStats compute_stats(std::span<const Interaction> data) {
  DatasetStats stats;
  for (const auto& x : data) {
    ++stats.per_user[x.user_id];
    ++stats.per_item[x.item_id];
  }
  stats.n_users = stats.per_user.size();
  stats.n_items = stats.per_item.size();
  stats.n_interactions = data.size();
  if (stats.n_users > 0 && stats.n_items > 0) {
    stats.density = static_cast<double>(stats.n_interactions) /
                    (static_cast<double>(stats.n_users) * static_cast<double>(stats.n_items));
  }
  return stats;
}

std::int32_t Dataset::user_index(std::string_view id) const {
  auto it = std::lower_bound(users.begin(), users.end(), id);
  if (it == users.end() || *it != id) {
    throw std::out_of_range("unknown user '" + std::string(id) + "'");
  }
  return static_cast<std::int32_t>(it - users.begin());
}

std::int32_t Dataset::item_index(std::string_view id) const {
  auto it = std::lower_bound(items.begin(), items.end(), id);
  if (it == items.end() || *it != id) {
    throw std::out_of_range("unknown item '" + std::string(id) + "'");
  }
  return static_cast<std::int32_t>(it - items.begin());
}

std::vector<std::vector<std::int32_t>> Dataset::positives(std::span<const Split> which) const {
  std::vector<std::vector<std::int32_t>> out(users.size());
  for (auto s : which) {
    for (const auto& r : split(s)) {
      out[static_cast<std::size_t>(r.user)].push_back(r.item);
    }
  }
  for (auto& items_of_user : out) {
    std::sort(items_of_user.begin(), items_of_user.end());
    items_of_user.erase(std::unique(items_of_user.begin(), items_of_user.end()), items_of_user.end());
  }
  return out;
}

std::vector<std::vector<std::int32_t>> Dataset::train_positives() const {
  const Split which[] = {Split::kTrain};
  return positives(which);
}

std::vector<std::vector<std::int32_t>> Dataset::all_positives() const {
  const Split which[] = {Split::kTrain, Split::kValid, Split::kTest};
  return positives(which);
}

std::string Dataset::manifest_json() const {
  json j;
  j["format_version"] = 1;
  j["seed"] = seed;
  j["kcore"] = kcore;
  j["r_max"] = r_max;
  j["min_freq"] = min_freq;
  j["vocab_size"] = vocab.size();
  j["max_sentences"] = vocab.caps().max_sentences;
  j["max_words"] = vocab.caps().max_words;
  j["n_users"] = users.size();
  j["n_items"] = items.size();
  j["counts"] = {{"train", split(Split::kTrain).size()},
                 {"valid", split(Split::kValid).size()},
                 {"test", split(Split::kTest).size()}};
  return j.dump();
}

Dataset index_dataset(std::span<const Interaction> data, const PrepareOptions& options) {
  Dataset out;
  out.r_max = options.r_max;
  out.seed = options.seed;
  out.kcore = options.kcore_user;
  out.min_freq = options.min_freq;

  std::set<std::string> users;
  std::set<std::string> items;
  std::vector<std::string> train_reviews;
  for (const auto& x : data) {
    users.insert(x.user_id);
    items.insert(x.item_id);
    if (x.split == Split::kTrain) {
      train_reviews.push_back(x.review);
    }
  }
  out.users.assign(users.begin(), users.end());
  out.items.assign(items.begin(), items.end());
  out.vocab = Vocabulary::build(train_reviews, options.min_freq, options.caps);

  for (const auto& x : data) {
    if (x.rating < 1 || x.rating > options.r_max) {
      throw std::invalid_argument("rating outside [1, r_max] for user " + x.user_id);
    }
    Record r;
    r.user = out.user_index(x.user_id);
    r.item = out.item_index(x.item_id);
    r.rating = x.rating;
    r.doc = tokenize(x.review, out.vocab);
    out.split(x.split).push_back(std::move(r));
  }
  return out;
}

Dataset prepare(std::vector<Interaction> raw, const PrepareOptions& options) {
  auto filtered = kcore_filter(std::move(raw), options.kcore_user, options.kcore_item);
  split_interactions(filtered, options.ratios, options.seed);
  return index_dataset(filtered, options);
}

}  // namespace serml::corpus
