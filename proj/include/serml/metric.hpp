#pragma once

#include "serml/tensor.hpp"

#include <span>

namespace serml::metric {

// One row per user / item.
struct EmbeddingTables {
  RowMatrix users;
  RowMatrix items;

  int dim() const { return static_cast<int>(users.cols()); }
};

// u^T diag(r) v. Higher means stronger preference.
double score(const Vector& u, const Vector& r, const Vector& v);

// max(neg - pos + margin, 0)
double margin_loss(double pos_score, double neg_score, double margin);

// Mean hinge over aligned (pos, neg) pairs.
double margin_loss_mean(std::span<const double> pos, std::span<const double> neg, double margin);

// d loss / d pos for one pair; d loss / d neg is the negation. The hinge is
// flat (zero subgradient) at and beyond the margin.
double margin_loss_grad_pos(double pos_score, double neg_score, double margin);

// Rescales rows with l2 norm above 1 onto the unit sphere.
void clip_rows(RowMatrix& table);
void clip_norms(EmbeddingTables& tables);

// ||u + r - v||^2, translation-style diagnostic. Lower means closer.
double distance_score(const Vector& u, const Vector& r, const Vector& v);

}  // namespace serml::metric
