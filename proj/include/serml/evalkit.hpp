#pragma once

#include "serml/corpus.hpp"
#include "serml/model.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace serml::evalkit {

// 1[rank <= n]
double hit_at(int rank, int n);
// 1 / log2(rank + 1) when rank <= n, else 0
double ndcg_at(int rank, int n);

// 1-based rank of the positive among the candidates: one plus the number of
// negatives that score higher, plus tied negatives with a smaller item index.
int rank_of(double pos_score, std::int32_t pos_item, std::span<const double> neg_scores,
            std::span<const std::int32_t> neg_items);

struct RankingResult {
  std::vector<int> ranks;  // one per evaluated interaction, in split order

  double hit(int n) const;
  double ndcg(int n) const;
  std::size_t size() const { return ranks.size(); }
};

// Must be safe to call concurrently.
using PairScorer = std::function<double(std::int32_t user, std::int32_t item)>;

// Each record is ranked against n_neg items drawn from the sampler's pool
// for that user. Interaction i draws from the stream derive_seed(seed, i), so
// results do not depend on the thread count. Lists shorter than n_neg use
// the whole pool, with a warning unless `warn_short` is false.
RankingResult rank_eval(const PairScorer& scorer, std::span<const corpus::Record> records,
                        const corpus::NegativeSampler& sampler, int n_neg, std::uint64_t seed,
                        unsigned threads = 0, bool warn_short = true);

// Negatives exclude every known positive of the user across all splits.
RankingResult rank_eval(const Model& model, const corpus::Dataset& data, corpus::Split split, int n_neg,
                        std::uint64_t seed, unsigned threads = 0);

// sqrt(mean((pred - truth)^2)). Throws std::invalid_argument on empty or
// mismatched input.
double rmse(std::span<const double> predicted, std::span<const double> truth);
double rmse(const Model& model, std::span<const corpus::Record> records);

struct CaseReport {
  std::int32_t user = 0;
  std::vector<std::int32_t> items;
  Matrix relation_distance;  // ||r_{u,v} - r_{u,k}||^2
  Matrix item_distance;      // ||beta_v - beta_k||^2
  std::vector<double> scores;
  std::vector<std::size_t> order;  // positions into `items`, best first
};

// Throws std::invalid_argument for fewer than two items and
// std::out_of_range for unknown indices.
CaseReport case_analysis(const Model& model, std::int32_t user, std::span<const std::int32_t> items);
CaseReport case_analysis(const Model& model, const corpus::Dataset& data, const std::string& user,
                         std::span<const std::string> items);

// Plain-text table; `labels` names the items in report order (indices when
// empty).
std::string format_case_report(const CaseReport& report, std::span<const std::string> labels = {});

}  // namespace serml::evalkit
