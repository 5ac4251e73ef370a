#pragma once

#include "serml/config.hpp"
#include "serml/corpus.hpp"
#include "serml/metric.hpp"
#include "serml/relinduce.hpp"
#include "serml/tensor.hpp"
#include "serml/textenc.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace serml {

// All learned state of the joint model. A Model with zeroed tensors of the
// same shapes doubles as the gradient accumulator.
struct Model {
  ModelConfig config;
  int r_max = 5;
  metric::EmbeddingTables tables;
  textenc::EncoderParams encoder;
  relinduce::Induction induction;
  relinduce::SemanticProjector projector;
  Vector rating_head;  // (a, b), empty when the rating head is disabled

  // Zero-valued tensors shaped for the given catalog and vocabulary.
  static Model zeros(const ModelConfig& config, std::size_t n_users, std::size_t n_items, std::size_t vocab,
                     int r_max);
  // Weights ~ U[-init_uniform, init_uniform]; user/item vectors ~
  // N(init_mean, init_var), clipped to the unit ball. Each parameter group
  // draws from its own stream derived from config.seed.
  static Model initialize(const ModelConfig& config, std::size_t n_users, std::size_t n_items,
                          std::size_t vocab, int r_max);

  Model zeros_like() const;
  TensorList tensors();
  void set_zero();

  std::size_t n_users() const { return static_cast<std::size_t>(tables.users.rows()); }
  std::size_t n_items() const { return static_cast<std::size_t>(tables.items.rows()); }

  Vector user(std::int32_t u) const;  // throws std::out_of_range
  Vector item(std::int32_t v) const;
  Vector relation(std::int32_t u, std::int32_t v) const;
  double score(std::int32_t u, std::int32_t v) const;
};

struct RankedItem {
  std::int32_t item = 0;
  double score = 0.0;
};

// Scores each candidate through the induced relation and returns the best
// `n`, by descending score with ties broken by ascending item index.
std::vector<RankedItem> predict_topn(const Model& model, std::int32_t user,
                                     std::span<const std::int32_t> candidates, std::size_t n);

// clamp(a * score + b, 1, r_max). Throws std::logic_error without a rating
// head.
double predict_rating(const Model& model, std::int32_t user, std::int32_t item);

}  // namespace serml
