#pragma once

#include "serml/config.hpp"
#include "serml/corpus.hpp"
#include "serml/synthetic.hpp"
#include "serml/tensor.hpp"
#include "serml/trainer.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace serml::experiments {

// H@n of every training interaction ranked against all items the user has
// never interacted with.
double train_hit_at(const Model& model, const corpus::Dataset& data, int n);

struct SeparationStats {
  double inter = 0.0;  // mean squared item distance across categories, same group
  double intra = 0.0;  // same, within a category
  double ratio = 0.0;  // inter / intra
};

// Pairs are restricted to items of the same group; `group` and `category`
// are indexed by item row.
SeparationStats separation_ratio(const RowMatrix& items, std::span<const int> group, std::span<const int> category);

struct NullDistribution {
  double mean = 0.0;
  double sd = 0.0;
  int draws = 0;
};

// Ratios under random two-plus-two relabelings of every group.
NullDistribution separation_null(const RowMatrix& items, std::span<const int> group, int draws, std::uint64_t seed);

struct SeparationRun {
  double gamma = 0.0;
  SeparationStats stats;
  NullDistribution null;
  double train_h5 = 0.0;
};

struct SeparationReport {
  SeparationRun semantic;  // config.gamma (1 by default)
  SeparationRun baseline;  // gamma = 0, same seed
  // semantic.ratio / baseline.ratio - 1
  double improvement() const { return semantic.stats.ratio / baseline.stats.ratio - 1.0; }
  // Baseline ratio within three null standard deviations of the null mean.
  bool baseline_within_noise() const;
};

// Trains twice on the generated corpus (every interaction in train) and
// compares item-vector separation between the review categories.
SeparationReport semantic_separation_experiment(const ModelConfig& config, const synthetic::SyntheticSpec& spec,
                                                int null_draws = 200, std::ostream* log = nullptr);

struct ExperimentRow {
  std::string induction;
  double gamma = 0.0;
  int best_epoch = 0;
  double valid_ndcg10 = 0.0;
  double test_ndcg5 = 0.0;
  double test_ndcg10 = 0.0;
  double test_h5 = 0.0;
  double test_h10 = 0.0;
  double seconds = 0.0;
};

ExperimentRow run_setting(const ModelConfig& config, const corpus::Dataset& data);

std::vector<ExperimentRow> ablate(const ModelConfig& config, const corpus::Dataset& data,
                                  std::span<const relinduce::InductionKind> strategies, std::ostream* csv = nullptr);
std::vector<ExperimentRow> sweep(const ModelConfig& config, const corpus::Dataset& data,
                                 std::span<const double> gammas, std::ostream* csv = nullptr);

const char* csv_header();
std::string csv_row(const ExperimentRow& row);

// Finite-difference check of the joint loss on a tiny model (d = H = 4,
// m = 3, rating head on) built over a small synthetic corpus, with weights
// drawn wide enough that no gradient is vanishingly small.
GradCheckReport tiny_grad_check(relinduce::InductionKind kind, std::uint64_t seed, int coords_per_tensor = 0);

}  // namespace serml::experiments