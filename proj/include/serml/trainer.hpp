#pragma once

#include "serml/config.hpp"
#include "serml/corpus.hpp"
#include "serml/model.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace serml {

// One positive interaction with its review and the negatives drawn for it.
struct TrainingExample {
  std::int32_t user = 0;
  std::int32_t item = 0;
  int rating = 0;
  const corpus::TokenizedDoc* doc = nullptr;  // may be null or empty
  std::vector<std::int32_t> negatives;
};

struct LossParts {
  double total = 0.0;
  double classification = 0.0;  // L_C over positives with a review
  double ranking = 0.0;         // mean hinge over (pos, neg) pairs
  double relation = 0.0;        // mean relation regression over positives with a review
  double frobenius = 0.0;       // ||W_proj||_F^2, unweighted
  double rating = 0.0;          // mean squared rating error (rating head only)
};

// L = L_C + L_R + gamma * L_rel + rho * ||W||_F^2 (+ rating_weight * L_rating).
// When `grad` is non-null, gradients accumulate into it (same shapes as
// `model`). Throws std::runtime_error when any component is non-finite.
LossParts joint_loss(const Model& model, std::span<const TrainingExample> batch, Model* grad = nullptr);

class AdamOptimizer {
 public:
  explicit AdamOptimizer(const Model& model);

  void step(Model& params, Model& grads);
  std::int64_t steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

struct Checkpoint {
  Model model;
  std::string data_manifest;  // manifest JSON of the prepared data
  int epoch = 0;
  std::string rng_state;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint load_checkpoint(std::istream& in);

struct EpochLog {
  int epoch = 0;
  LossParts loss;  // averaged over the epoch's batches
  std::optional<double> valid_ndcg10;
};

struct TrainOptions {
  std::ostream* log = nullptr;  // JSON-lines, one object per epoch
  bool validate = true;         // skipped anyway when the valid split is empty
};

struct TrainResult {
  Checkpoint best;  // best validation NDCG@10, or the last epoch without validation
  std::vector<EpochLog> history;
  bool diverged = false;
  std::string divergence_reason;
};

// Mini-batch Adam over the train split with norm clipping after every step.
TrainResult train(const ModelConfig& config, const corpus::Dataset& data, const TrainOptions& options = {});

// Draws `neg_per_pos` training negatives per record.
std::vector<TrainingExample> make_batch(std::span<const corpus::Record> records,
                                        const corpus::NegativeSampler& sampler, int neg_per_pos, Rng& rng);

struct GradCheckOptions {
  double epsilon = 1e-5;
  int coords_per_tensor = 20;  // 0 checks every coordinate
  double tolerance = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double floor = 1e-6;
  std::uint64_t seed = 13;
};

struct TensorCheck {
  std::string name;
  std::size_t coords = 0;
  double max_rel_error = 0.0;
  double max_abs_grad = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  bool passed = true;
  std::vector<std::string> failures;
};

// Central differences of the full joint loss versus backpropagation. The
// check runs with every gradient path enabled (stop_grad_semantic off,
// text_grad_to_embeddings on).
GradCheckReport grad_check(const Model& model, std::span<const TrainingExample> batch,
                           const GradCheckOptions& options = {});

}  // namespace serml
