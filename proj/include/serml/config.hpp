#pragma once

#include "serml/relinduce.hpp"
#include "serml/textenc.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace serml {

// Every hyperparameter of the joint model. Serialized as a flat
// `key = value` text file whose keys match the field names.
struct ModelConfig {
  int d = 100;             // user/item/relation embedding size
  int H = 0;               // encoder hidden size; 0 means "same as d"
  int K = 100;             // word embedding size
  int A = 0;               // attention size; 0 means "same as H"
  int m = 20;              // memory slots
  double gamma = 1.0;      // weight of the relation regression loss
  double rho = 0.01;       // Frobenius penalty on the projection matrix
  double xi = 0.5;         // ranking margin
  double lr = 0.01;
  int batch_size = 512;
  int epochs = 50;
  relinduce::InductionKind induction = relinduce::InductionKind::kMemory;
  std::uint64_t seed = 1;
  int neg_per_pos = 1;
  textenc::Reduction reduction = textenc::Reduction::kMean;  // of the classification loss

  int patience = 10;  // epochs without validation NDCG@10 gain; 0 disables early stopping
  int eval_neg = 500;
  std::uint64_t eval_seed = 7;

  bool rating_head = false;
  double rating_weight = 1.0;

  bool stop_grad_semantic = false;       // relation regression does not train the text encoder
  bool text_grad_to_embeddings = false;  // attention conditioning passes gradient to user/item vectors
  bool deterministic = true;

  double init_uniform = 0.01;  // weights ~ U[-b, b]
  double init_mean = 0.03;     // latent vectors ~ N(mean, var)
  double init_var = 0.01;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double max_loss = 1e6;  // divergence threshold

  int hidden() const { return H > 0 ? H : d; }
  int attn() const { return A > 0 ? A : hidden(); }

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;

  std::string to_text() const;
  static ModelConfig from_text(std::string_view text);
  static ModelConfig load(const std::filesystem::path& path);
  // Applies one `key = value` override; throws on an unknown key.
  void set(std::string_view key, std::string_view value);
};

// Compact desk-scale defaults: d = 16, batch 64.
ModelConfig desk_profile();

}  // namespace serml
