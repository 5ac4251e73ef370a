#include "serml/evalkit.hpp"

#include "serml/log.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace serml::evalkit {

double hit_at(int rank, int n) {
  return rank >= 1 && rank <= n ? 1.0 : 0.0;
}

double ndcg_at(int rank, int n) {
  return rank >= 1 && rank <= n ? 1.0 / std::log2(rank + 1.0) : 0.0;
}

int rank_of(double pos_score, std::int32_t pos_item, std::span<const double> neg_scores,
            std::span<const std::int32_t> neg_items) {
  int rank = 1;
  for (std::size_t i = 0; i < neg_scores.size(); ++i) {
    if (neg_scores[i] > pos_score || (neg_scores[i] == pos_score && neg_items[i] < pos_item)) {
      ++rank;
    }
  }
  return rank;
}

double RankingResult::hit(int n) const {
  if (ranks.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (int r : ranks) {
    sum += hit_at(r, n);
  }
  return sum / static_cast<double>(ranks.size());
}

double RankingResult::ndcg(int n) const {
  if (ranks.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (int r : ranks) {
    sum += ndcg_at(r, n);
  }
  return sum / static_cast<double>(ranks.size());
}

RankingResult rank_eval(const PairScorer& scorer, std::span<const corpus::Record> records,
                        const corpus::NegativeSampler& sampler, int n_neg, std::uint64_t seed, unsigned threads,
                        bool warn_short) {
  if (n_neg < 0) {
    throw std::invalid_argument("n_neg must be >= 0");
  }
  RankingResult result;
  result.ranks.assign(records.size(), 0);
  std::atomic<std::size_t> short_pools{0};

  auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores;
    for (std::size_t i = begin; i < end; ++i) {
      const auto& r = records[i];
      Rng rng(derive_seed(seed, i));
      const auto negs = sampler.sample(r.user, static_cast<std::size_t>(n_neg), rng);
      if (negs.size() < static_cast<std::size_t>(n_neg)) {
        short_pools.fetch_add(1, std::memory_order_relaxed);
      }
      scores.resize(negs.size());
      for (std::size_t k = 0; k < negs.size(); ++k) {
        scores[k] = scorer(r.user, negs[k]);
      }
      result.ranks[i] = rank_of(scorer(r.user, r.item), r.item, scores, negs);
    }
  };

  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(records.size(), 1)));
  if (threads <= 1) {
    work(0, records.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (records.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const auto begin = std::min(records.size(), t * chunk);
      const auto end = std::min(records.size(), begin + chunk);
      pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) {
      th.join();
    }
  }
  if (const auto n = short_pools.load(); n > 0 && warn_short) {
    warn(std::to_string(n) + " evaluation lists had fewer than " + std::to_string(n_neg) +
         " candidate negatives; the full pool was used");
  }
  return result;
}

RankingResult rank_eval(const Model& model, const corpus::Dataset& data, corpus::Split split, int n_neg,
                        std::uint64_t seed, unsigned threads) {
  const corpus::NegativeSampler sampler(data.n_items(), data.all_positives());
  const PairScorer scorer = [&model](std::int32_t u, std::int32_t v) { return model.score(u, v); };
  return rank_eval(scorer, data.split(split), sampler, n_neg, seed, threads);
}

double rmse(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.empty() || predicted.size() != truth.size()) {
    throw std::invalid_argument("rmse needs equally sized, non-empty inputs");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - truth[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(predicted.size()));
}

double rmse(const Model& model, std::span<const corpus::Record> records) {
  if (records.empty()) {
    throw std::invalid_argument("rmse on an empty split");
  }
  std::vector<double> pred;
  std::vector<double> truth;
  pred.reserve(records.size());
  truth.reserve(records.size());
  for (const auto& r : records) {
    pred.push_back(predict_rating(model, r.user, r.item));
    truth.push_back(r.rating);
  }
  return rmse(pred, truth);
}

CaseReport case_analysis(const Model& model, std::int32_t user, std::span<const std::int32_t> items) {
  if (items.size() < 2) {
    throw std::invalid_argument("case analysis needs at least two items");
  }
  CaseReport rep;
  rep.user = user;
  rep.items.assign(items.begin(), items.end());
  const auto n = static_cast<Eigen::Index>(items.size());
  const Vector u = model.user(user);
  std::vector<Vector> rel;
  std::vector<Vector> vec;
  for (auto v : items) {
    vec.push_back(model.item(v));
    rel.push_back(relinduce::induce(u, vec.back(), model.induction));
    rep.scores.push_back(metric::score(u, rel.back(), vec.back()));
  }
  rep.relation_distance = Matrix::Zero(n, n);
  rep.item_distance = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i + 1; k < n; ++k) {
      const auto a = static_cast<std::size_t>(i);
      const auto b = static_cast<std::size_t>(k);
      rep.relation_distance(i, k) = rep.relation_distance(k, i) = (rel[a] - rel[b]).squaredNorm();
      rep.item_distance(i, k) = rep.item_distance(k, i) = (vec[a] - vec[b]).squaredNorm();
    }
  }
  rep.order.resize(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    rep.order[i] = i;
  }
  std::stable_sort(rep.order.begin(), rep.order.end(), [&](std::size_t a, std::size_t b) {
    return rep.scores[a] != rep.scores[b] ? rep.scores[a] > rep.scores[b] : rep.items[a] < rep.items[b];
  });
  return rep;
}

CaseReport case_analysis(const Model& model, const corpus::Dataset& data, const std::string& user,
                         std::span<const std::string> items) {
  std::vector<std::int32_t> idx;
  for (const auto& id : items) {
    idx.push_back(data.item_index(id));
  }
  return case_analysis(model, data.user_index(user), idx);
}

std::string format_case_report(const CaseReport& report, std::span<const std::string> labels) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < report.items.size(); ++i) {
    names.push_back(i < labels.size() ? labels[i] : std::to_string(report.items[i]));
  }
  std::size_t width = 13;
  for (const auto& s : names) {
    width = std::max(width, s.size() + 2);
  }
  std::ostringstream out;
  out << std::setprecision(6);
  auto table = [&](const char* title, const Matrix& m) {
    out << title << '\n' << std::setw(static_cast<int>(width)) << "";
    for (const auto& s : names) {
      out << std::setw(static_cast<int>(width)) << s;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      out << std::setw(static_cast<int>(width)) << names[static_cast<std::size_t>(i)];
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        out << std::setw(static_cast<int>(width)) << m(i, k);
      }
      out << '\n';
    }
  };
  table("relation distance", report.relation_distance);
  out << '\n';
  table("item distance", report.item_distance);
  out << "\nscores (best first)\n";
  for (auto i : report.order) {
    out << std::setw(static_cast<int>(width)) << names[i] << "  " << report.scores[i] << '\n';
  }
  return out.str();
}

}  // namespace serml::evalkit
