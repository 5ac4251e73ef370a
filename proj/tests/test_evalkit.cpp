#include "serml/evalkit.hpp"

#include "serml/experiments.hpp"
#include "serml/log.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace serml;
using namespace serml::evalkit;

namespace {

struct CaptureWarnings {
  std::vector<std::string> lines;
  WarningSink previous;
  CaptureWarnings() {
    previous = set_warning_sink([this](const std::string& w) { lines.push_back(w); });
  }
  ~CaptureWarnings() { set_warning_sink(previous); }
};

Model random_model(relinduce::InductionKind kind, std::size_t users, std::size_t items, std::uint64_t seed) {
  ModelConfig c = desk_profile();
  c.d = 6;
  c.K = 4;
  c.m = 3;
  c.induction = kind;
  c.seed = seed;
  c.init_mean = 0.0;
  c.init_var = 0.2;
  c.init_uniform = 0.5;
  return Model::initialize(c, users, items, 5, 5);
}

std::vector<corpus::Record> records_for(std::size_t users, std::size_t items, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<corpus::Record> out;
  for (std::size_t i = 0; i < n; ++i) {
    corpus::Record r;
    r.user = static_cast<std::int32_t>(uniform_index(rng, users));
    r.item = static_cast<std::int32_t>(uniform_index(rng, items));
    r.rating = 1 + static_cast<int>(uniform_index(rng, 5));
    out.push_back(r);
  }
  return out;
}

corpus::NegativeSampler sampler_for(std::size_t users, std::size_t items, std::span<const corpus::Record> recs) {
  std::vector<std::vector<std::int32_t>> pos(users);
  for (const auto& r : recs) pos[static_cast<std::size_t>(r.user)].push_back(r.item);
  for (auto& p : pos) {
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
  }
  return corpus::NegativeSampler(items, pos);
}

}  // namespace

TEST(Metrics, HitAndNdcgExamples) {
  EXPECT_EQ(hit_at(1, 5), 1.0);
  EXPECT_EQ(hit_at(5, 5), 1.0);
  EXPECT_EQ(hit_at(6, 5), 0.0);
  EXPECT_EQ(ndcg_at(1, 10), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at(3, 10), 0.5);
  EXPECT_DOUBLE_EQ(ndcg_at(7, 10), 1.0 / 3.0);
  EXPECT_EQ(ndcg_at(11, 10), 0.0);
  RankingResult r{{1, 3, 11, 2}};
  EXPECT_DOUBLE_EQ(r.hit(10), 0.75);
  EXPECT_DOUBLE_EQ(r.ndcg(10), (1.0 + 0.5 + 1.0 / std::log2(3.0)) / 4.0);
}

TEST(Metrics, NdcgNeverExceedsHitAndGrowsWithCutoff) {
  for (int rank = 1; rank <= 60; ++rank) {
    for (int n = 1; n <= 50; ++n) {
      EXPECT_LE(ndcg_at(rank, n), hit_at(rank, n));
      EXPECT_LE(ndcg_at(rank, n), ndcg_at(rank, n + 1));
      EXPECT_LE(hit_at(rank, n), hit_at(rank, n + 1));
      EXPECT_GE(ndcg_at(rank, n), ndcg_at(rank + 1, n));
    }
  }
}

TEST(Metrics, RankCountsHigherAndEarlierTies) {
  const std::vector<double> scores{0.9, 0.5, 0.5, 0.1};
  const std::vector<std::int32_t> items{10, 3, 7, 1};
  EXPECT_EQ(rank_of(0.5, 5, scores, items), 3);  // 0.9 above, item 3 ties first
  EXPECT_EQ(rank_of(0.5, 2, scores, items), 2);
  EXPECT_EQ(rank_of(0.95, 5, scores, items), 1);
  EXPECT_EQ(rank_of(0.0, 5, scores, items), 5);
}

TEST(Rmse, ExamplesAndOracle) {
  const std::vector<double> three{3.0, 3.0}, truth{1.0, 5.0};
  EXPECT_DOUBLE_EQ(rmse(three, truth), 2.0);
  EXPECT_EQ(rmse(truth, truth), 0.0);
  const std::vector<double> none;
  EXPECT_THROW(rmse(none, none), std::invalid_argument);
  EXPECT_THROW(rmse(three, std::vector<double>{1.0}), std::invalid_argument);
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(13), b(13);
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = uniform(rng, 1, 5);
      b[i] = uniform(rng, 1, 5);
      sum += (a[i] - b[i]) * (a[i] - b[i]);
    }
    EXPECT_NEAR(rmse(a, b), std::sqrt(sum / 13.0), 1e-12);
  }
}

TEST(CaseAnalysis, DistancesMatchDirectComputation) {
  const auto m = random_model(relinduce::InductionKind::kMemory, 3, 8, 2);
  const std::vector<std::int32_t> items{5, 1, 6, 2};
  const auto rep = case_analysis(m, 1, items);
  ASSERT_EQ(rep.relation_distance.rows(), 4);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    EXPECT_EQ(rep.relation_distance(ii, ii), 0.0);
    EXPECT_EQ(rep.item_distance(ii, ii), 0.0);
    EXPECT_NEAR(rep.scores[i], m.score(1, items[i]), 1e-15);
    for (std::size_t j = 0; j < items.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      double rel = 0.0, item = 0.0;
      const Vector ri = m.relation(1, items[i]), rj = m.relation(1, items[j]);
      for (int k = 0; k < 6; ++k) {
        rel += (ri[k] - rj[k]) * (ri[k] - rj[k]);
        const double dv = m.tables.items(items[i], k) - m.tables.items(items[j], k);
        item += dv * dv;
      }
      EXPECT_NEAR(rep.relation_distance(ii, jj), rel, 1e-10);
      EXPECT_NEAR(rep.item_distance(ii, jj), item, 1e-10);
      EXPECT_EQ(rep.relation_distance(ii, jj), rep.relation_distance(jj, ii));
    }
  }
  for (std::size_t k = 1; k < rep.order.size(); ++k) {
    EXPECT_GE(rep.scores[rep.order[k - 1]], rep.scores[rep.order[k]]);
  }
  EXPECT_FALSE(format_case_report(rep).empty());
}

TEST(CaseAnalysis, AntipodalItemsAreFourApart) {
  auto m = random_model(relinduce::InductionKind::kElementWise, 1, 2, 3);
  m.tables.items.setZero();
  m.tables.items(0, 0) = 1.0;
  m.tables.items(1, 0) = -1.0;
  const std::vector<std::int32_t> items{0, 1};
  EXPECT_DOUBLE_EQ(case_analysis(m, 0, items).item_distance(0, 1), 4.0);
  const std::vector<std::int32_t> one{0};
  EXPECT_THROW(case_analysis(m, 0, one), std::invalid_argument);
  const std::vector<std::int32_t> bad{0, 9};
  EXPECT_THROW(case_analysis(m, 0, bad), std::out_of_range);
}

TEST(RankEval, SeededAndThreadIndependent) {
  const auto m = random_model(relinduce::InductionKind::kMlp2, 20, 300, 4);
  const auto recs = records_for(20, 300, 200, 5);
  const auto sampler = sampler_for(20, 300, recs);
  const PairScorer scorer = [&m](std::int32_t u, std::int32_t v) { return m.score(u, v); };
  const auto a = rank_eval(scorer, recs, sampler, 100, 9, 1);
  const auto b = rank_eval(scorer, recs, sampler, 100, 9, 4);
  const auto c = rank_eval(scorer, recs, sampler, 100, 9, 3);
  EXPECT_EQ(a.ranks, b.ranks);
  EXPECT_EQ(a.ranks, c.ranks);
  const auto other = rank_eval(scorer, recs, sampler, 100, 10, 1);
  EXPECT_NE(a.ranks, other.ranks);
}

TEST(RankEval, WholePoolMatchesExhaustiveRanking) {
  CaptureWarnings warnings;
  const auto m = random_model(relinduce::InductionKind::kMemory, 6, 40, 6);
  const auto recs = records_for(6, 40, 30, 7);
  const auto sampler = sampler_for(6, 40, recs);
  const PairScorer scorer = [&m](std::int32_t u, std::int32_t v) { return m.score(u, v); };
  const auto res = rank_eval(scorer, recs, sampler, 1000, 1, 2);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    const double s = m.score(r.user, r.item);
    int rank = 1;
    for (std::int32_t v = 0; v < 40; ++v) {
      if (sampler.is_excluded(r.user, v)) continue;
      const double t = m.score(r.user, v);
      rank += (t > s || (t == s && v < r.item)) ? 1 : 0;
    }
    EXPECT_EQ(res.ranks[i], rank);
  }
  EXPECT_FALSE(warnings.lines.empty());
  const std::size_t before = warnings.lines.size();
  rank_eval(scorer, recs, sampler, 1000, 1, 2, false);
  EXPECT_EQ(warnings.lines.size(), before);
}

TEST(RankEval, ConstantScorerRanksByIndex) {
  const auto recs = records_for(4, 50, 20, 8);
  const auto sampler = sampler_for(4, 50, recs);
  const PairScorer flat = [](std::int32_t, std::int32_t) { return 0.0; };
  const auto res = rank_eval(flat, recs, sampler, 49, 2, 1, false);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    int smaller = 0;
    for (std::int32_t v = 0; v < recs[i].item; ++v) smaller += sampler.is_excluded(recs[i].user, v) ? 0 : 1;
    EXPECT_EQ(res.ranks[i], 1 + smaller);
  }
}

TEST(Separation, RatioAndNullOnKnownLayouts) {
  // Group of four: two items at +e1, two at -e1.
  RowMatrix items = RowMatrix::Zero(4, 2);
  items(0, 0) = items(1, 0) = 1.0;
  items(2, 0) = items(3, 0) = -1.0;
  items(1, 1) = 0.1;
  items(3, 1) = 0.1;
  const std::vector<int> group{0, 0, 0, 0}, category{0, 0, 1, 1};
  const auto s = experiments::separation_ratio(items, group, category);
  EXPECT_NEAR(s.intra, 0.01, 1e-12);
  EXPECT_NEAR(s.inter, (4.0 + 4.01 + 4.01 + 4.0) / 4.0, 1e-12);

  Rng rng(3);
  RowMatrix noise(400, 5);
  std::vector<int> groups(400);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = normal(rng, 0.0, 1.0);
  for (int i = 0; i < 400; ++i) groups[static_cast<std::size_t>(i)] = i / 4;
  const auto null = experiments::separation_null(noise, groups, 100, 4);
  EXPECT_EQ(null.draws, 100);
  EXPECT_NEAR(null.mean, 1.0, 0.1);
  EXPECT_GT(null.sd, 0.0);
}

#ifdef SERML_CLI
namespace {

int run(const std::string& args, const std::filesystem::path& out = {}) {
  std::string cmd = std::string(SERML_CLI) + " " + args;
  cmd += " > " + (out.empty() ? std::string("/dev/null") : out.string());
  cmd += " 2>/dev/null";
  return std::system(cmd.c_str());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Cli, EndToEndPipeline) {
  const auto dir = std::filesystem::temp_directory_path() / ("serml_cli_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto d = dir.string();
  ASSERT_EQ(run("synth --users 20 --groups 5 --groups-per-user 2 --prefer-second 0.5 --out " + d + "/raw.jsonl"), 0);
  ASSERT_EQ(run("prepare --input " + d + "/raw.jsonl --out " + d + "/data --kcore 2 --min-freq 1 --ratios 0.8,0.1,0.1"), 0);
  ASSERT_EQ(run("train --data " + d + "/data --out " + d + "/run --desk --set epochs=2 --set rating_head=true"), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "run" / "checkpoint.bin"));
  std::istringstream log(slurp(dir / "run" / "train_log.jsonl"));
  int lines = 0;
  for (std::string line; std::getline(log, line); ++lines) {
    EXPECT_TRUE(nlohmann::json::parse(line).contains("L_C"));
  }
  EXPECT_EQ(lines, 2);

  ASSERT_EQ(run("evaluate --checkpoint " + d + "/run --data " + d + "/data --n-neg 20", dir / "eval.json"), 0);
  const auto metrics = nlohmann::json::parse(slurp(dir / "eval.json"));
  for (const char* key : {"ndcg@5", "ndcg@10", "h@5", "h@10"}) {
    ASSERT_TRUE(metrics.contains(key)) << key;
    EXPECT_GE(metrics[key].get<double>(), 0.0);
    EXPECT_LE(metrics[key].get<double>(), 1.0);
  }
  ASSERT_EQ(run("evaluate --checkpoint " + d + "/run/checkpoint.bin --data " + d + "/data --task rating",
                dir / "rating.json"),
            0);
  EXPECT_TRUE(nlohmann::json::parse(slurp(dir / "rating.json")).contains("rmse"));

  ASSERT_EQ(run("case-analysis --checkpoint " + d + "/run --data " + d + "/data --user u000 --items i000,i001,i002",
                dir / "case.txt"),
            0);
  EXPECT_NE(slurp(dir / "case.txt").find("i001"), std::string::npos);

  ASSERT_EQ(run("ablate --data " + d + "/data --desk --set epochs=1 --strategies element_wise,memory --out " + d +
                "/ablate.csv"),
            0);
  std::istringstream csv(slurp(dir / "ablate.csv"));
  std::string header, row;
  std::getline(csv, header);
  EXPECT_EQ(header, experiments::csv_header());
  int rows = 0;
  while (std::getline(csv, row)) {
    ++rows;
    EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
  }
  EXPECT_EQ(rows, 2);

  EXPECT_NE(run("evaluate --checkpoint " + d + "/missing --data " + d + "/data"), 0);
  EXPECT_NE(run("train --data " + d + "/data --out " + d + "/bad --set no_such_key=1"), 0);
  std::filesystem::remove_all(dir);
}
#endif
