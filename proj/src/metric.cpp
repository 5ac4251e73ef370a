#include "serml/metric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace serml::metric {

double score(const Vector& u, const Vector& r, const Vector& v) {
  if (u.size() != r.size() || v.size() != r.size()) {
    throw std::invalid_argument("score: dimension mismatch");
  }
  return (u.array() * r.array() * v.array()).sum();
}

double margin_loss(double pos_score, double neg_score, double margin) {
  return std::max(neg_score - pos_score + margin, 0.0);
}

double margin_loss_mean(std::span<const double> pos, std::span<const double> neg, double margin) {
  if (pos.size() != neg.size()) {
    throw std::invalid_argument("margin_loss_mean: unequal pair counts");
  }
  if (pos.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    total += margin_loss(pos[i], neg[i], margin);
  }
  return total / static_cast<double>(pos.size());
}

double margin_loss_grad_pos(double pos_score, double neg_score, double margin) {
  return neg_score - pos_score + margin > 0.0 ? -1.0 : 0.0;
}

void clip_rows(RowMatrix& table) {
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    const double norm = table.row(i).norm();
    if (norm > 1.0) {
      table.row(i) /= norm;
    }
  }
}

void clip_norms(EmbeddingTables& tables) {
  clip_rows(tables.users);
  clip_rows(tables.items);
}

double distance_score(const Vector& u, const Vector& r, const Vector& v) {
  if (u.size() != r.size() || v.size() != r.size()) {
    throw std::invalid_argument("distance_score: dimension mismatch");
  }
  return (u + r - v).squaredNorm();
}

}  // namespace serml::metric
