#include "serml/experiments.hpp"

#include "serml/evalkit.hpp"
#include "serml/trainer.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace serml::experiments {
namespace {

// Item rows of each group, in row order.
std::map<int, std::vector<int>> members(std::span<const int> group) {
  std::map<int, std::vector<int>> out;
  for (std::size_t i = 0; i < group.size(); ++i) {
    out[group[i]].push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace

double train_hit_at(const Model& model, const corpus::Dataset& data, int n) {
  const corpus::NegativeSampler sampler(data.n_items(), data.all_positives());
  const evalkit::PairScorer scorer = [&model](std::int32_t u, std::int32_t v) { return model.score(u, v); };
  return evalkit::rank_eval(scorer, data.split(corpus::Split::kTrain), sampler,
                            static_cast<int>(data.n_items()), 0, 1, false)
      .hit(n);
}

SeparationStats separation_ratio(const RowMatrix& items, std::span<const int> group, std::span<const int> category) {
  if (group.size() != static_cast<std::size_t>(items.rows()) || category.size() != group.size()) {
    throw std::invalid_argument("separation_ratio: label count does not match the item table");
  }
  double inter = 0.0;
  double intra = 0.0;
  int n_inter = 0;
  int n_intra = 0;
  for (const auto& [g, rows] : members(group)) {
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        const double dist = (items.row(rows[a]) - items.row(rows[b])).squaredNorm();
        if (category[static_cast<std::size_t>(rows[a])] == category[static_cast<std::size_t>(rows[b])]) {
          intra += dist;
          ++n_intra;
        } else {
          inter += dist;
          ++n_inter;
        }
      }
    }
  }
  if (n_inter == 0 || n_intra == 0) {
    throw std::invalid_argument("separation_ratio: need both intra- and inter-category pairs");
  }
  SeparationStats s;
  s.inter = inter / n_inter;
  s.intra = intra / n_intra;
  s.ratio = s.inter / s.intra;
  return s;
}

NullDistribution separation_null(const RowMatrix& items, std::span<const int> group, int draws, std::uint64_t seed) {
  Rng rng(seed);
  const auto groups = members(group);
  std::vector<int> labels(group.size(), 0);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int t = 0; t < draws; ++t) {
    for (const auto& [g, rows] : groups) {
      auto shuffled = rows;
      serml::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t k = 0; k < shuffled.size(); ++k) {
        labels[static_cast<std::size_t>(shuffled[k])] = 2 * k < shuffled.size() ? 0 : 1;
      }
    }
    const double r = separation_ratio(items, group, labels).ratio;
    sum += r;
    sum_sq += r * r;
  }
  NullDistribution n;
  n.draws = draws;
  if (draws > 0) {
    n.mean = sum / draws;
    n.sd = draws > 1 ? std::sqrt(std::max(0.0, (sum_sq - draws * n.mean * n.mean) / (draws - 1))) : 0.0;
  }
  return n;
}

bool SeparationReport::baseline_within_noise() const {
  return std::abs(baseline.stats.ratio - baseline.null.mean) <= 3.0 * baseline.null.sd;
}

SeparationReport semantic_separation_experiment(const ModelConfig& config, const synthetic::SyntheticSpec& spec,
                                                int null_draws, std::ostream* log) {
  auto gen_spec = spec;
  gen_spec.ratios = {1.0, 0.0, 0.0};
  const auto corpus = synthetic::generate(gen_spec);
  const auto data = synthetic::to_dataset(corpus, gen_spec);
  if (data.n_items() != corpus.item_group.size()) {
    throw std::logic_error("synthetic corpus lost items during indexing");
  }

  auto run = [&](double gamma) {
    ModelConfig c = config;
    c.gamma = gamma;
    TrainOptions opt;
    opt.validate = false;
    opt.log = log;
    const auto result = train(c, data, opt);
    if (result.diverged) {
      throw std::runtime_error("separation run diverged: " + result.divergence_reason);
    }
    const auto& items = result.best.model.tables.items;
    SeparationRun out;
    out.gamma = gamma;
    out.stats = separation_ratio(items, corpus.item_group, corpus.item_category);
    out.null = separation_null(items, corpus.item_group, null_draws, derive_seed(config.seed, 0x9011));
    out.train_h5 = train_hit_at(result.best.model, data, 5);
    return out;
  };

  SeparationReport report;
  report.semantic = run(config.gamma > 0.0 ? config.gamma : 1.0);
  report.baseline = run(0.0);
  return report;
}

ExperimentRow run_setting(const ModelConfig& config, const corpus::Dataset& data) {
  const auto start = std::chrono::steady_clock::now();
  const auto result = train(config, data);
  ExperimentRow row;
  row.induction = std::string(relinduce::to_string(config.induction));
  row.gamma = config.gamma;
  row.best_epoch = result.best.epoch;
  const auto& model = result.best.model;
  if (!data.split(corpus::Split::kValid).empty()) {
    row.valid_ndcg10 =
        evalkit::rank_eval(model, data, corpus::Split::kValid, config.eval_neg, config.eval_seed).ndcg(10);
  }
  if (!data.split(corpus::Split::kTest).empty()) {
    const auto test = evalkit::rank_eval(model, data, corpus::Split::kTest, config.eval_neg, config.eval_seed);
    row.test_ndcg5 = test.ndcg(5);
    row.test_ndcg10 = test.ndcg(10);
    row.test_h5 = test.hit(5);
    row.test_h10 = test.hit(10);
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

const char* csv_header() {
  return "induction,gamma,best_epoch,valid_ndcg10,test_ndcg5,test_ndcg10,test_h5,test_h10,seconds";
}

std::string csv_row(const ExperimentRow& row) {
  std::ostringstream out;
  out.precision(6);
  out << row.induction << ',' << row.gamma << ',' << row.best_epoch << ',' << row.valid_ndcg10 << ','
      << row.test_ndcg5 << ',' << row.test_ndcg10 << ',' << row.test_h5 << ',' << row.test_h10 << ','
      << row.seconds;
  return out.str();
}

std::vector<ExperimentRow> ablate(const ModelConfig& config, const corpus::Dataset& data,
                                  std::span<const relinduce::InductionKind> strategies, std::ostream* csv) {
  if (csv != nullptr) {
    *csv << csv_header() << '\n';
  }
  std::vector<ExperimentRow> rows;
  for (auto kind : strategies) {
    ModelConfig c = config;
    c.induction = kind;
    rows.push_back(run_setting(c, data));
    if (csv != nullptr) {
      *csv << csv_row(rows.back()) << '\n' << std::flush;
    }
  }
  return rows;
}

std::vector<ExperimentRow> sweep(const ModelConfig& config, const corpus::Dataset& data,
                                 std::span<const double> gammas, std::ostream* csv) {
  if (csv != nullptr) {
    *csv << csv_header() << '\n';
  }
  std::vector<ExperimentRow> rows;
  for (double g : gammas) {
    ModelConfig c = config;
    c.gamma = g;
    rows.push_back(run_setting(c, data));
    if (csv != nullptr) {
      *csv << csv_row(rows.back()) << '\n' << std::flush;
    }
  }
  return rows;
}

}  // namespace serml::experiments

namespace serml::experiments {

GradCheckReport tiny_grad_check(relinduce::InductionKind kind, std::uint64_t seed, int coords_per_tensor) {
  synthetic::SyntheticSpec spec;
  spec.users = 4;
  spec.groups = 2;
  spec.sentences = 2;
  spec.words_per_sentence = 4;
  spec.seed = seed;
  const auto data = synthetic::to_dataset(synthetic::generate(spec), spec);

  ModelConfig c;
  c.d = 4;
  c.H = 4;
  c.K = 3;
  c.A = 3;
  c.m = 3;
  c.induction = kind;
  c.rating_head = true;
  c.seed = seed;
  c.init_uniform = 0.5;
  c.init_mean = 0.0;
  c.init_var = 0.25;
  Model model = Model::initialize(c, data.n_users(), data.n_items(), data.vocab.size(), data.r_max);
  model.rating_head << 0.7, 2.5;

  const auto& train = data.split(corpus::Split::kTrain);
  const std::size_t take = std::min<std::size_t>(train.size(), 6);
  const corpus::NegativeSampler sampler(data.n_items(), data.train_positives());
  Rng rng(derive_seed(seed, 0x6c));
  const auto batch = make_batch(std::span(train).subspan(0, take), sampler, 2, rng);

  GradCheckOptions opt;
  opt.coords_per_tensor = coords_per_tensor;
  opt.seed = seed;
  return grad_check(model, batch, opt);
}

}  // namespace serml::experiments
