#pragma once

#include "serml/random.hpp"
#include "serml/tensor.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace serml::relinduce {

enum class InductionKind { kElementWise, kMlp2, kMlp4, kMemory };

std::string_view to_string(InductionKind kind);
InductionKind parse_induction(std::string_view name);  // throws std::invalid_argument

struct DenseLayer {
  Matrix w;
  Vector b;
};

struct RelationMemory {
  Matrix keys;   // m x 3d
  Matrix slots;  // m x d
  Matrix w_o;    // d x d
  Vector b_o;    // d

  int slot_count() const { return static_cast<int>(keys.rows()); }
};

// Relation induction f(u, v). Element-wise carries no parameters; the MLP
// variants use tanh on every layer; memory reads a key-addressed slot bank.
struct Induction {
  InductionKind kind = InductionKind::kMemory;
  int d = 0;
  std::vector<DenseLayer> mlp;
  RelationMemory memory;

  static Induction zeros(InductionKind kind, int d, int slots);
  static Induction uniform(InductionKind kind, int d, int slots, double bound, Rng& rng);

  int dim() const { return d; }
  void collect(TensorList& out, const std::string& prefix);
};

struct InductionTrace {
  Vector r;
  Vector joint;                     // memory: [u; v; u*v]
  Vector attn;                      // memory: slot weights
  Vector read;                      // memory: o = sum attn_i m_i
  std::vector<Vector> activations;  // mlp: input followed by each layer output
};

Vector induce(const Vector& u, const Vector& v, const Induction& f, InductionTrace* trace = nullptr);

struct MemoryReadout {
  Vector r;
  Vector attn;
};

MemoryReadout memory_attend(const Vector& u, const Vector& v, const RelationMemory& mem);

// Accumulates d loss / d params into `grad` and d loss / d (u, v) into
// grad_u, grad_v.
void induce_backward(const Vector& u, const Vector& v, const Induction& f, const InductionTrace& trace,
                     const Vector& grad_r, Induction& grad, Vector& grad_u, Vector& grad_v);

// Maps a document vector (H) into relation space (d): d_proj = W^T doc.
struct SemanticProjector {
  Matrix w;  // H x d
  double lambda = 1.0;

  void collect(TensorList& out, const std::string& prefix);
};

// lambda * || W^T doc - r ||^2. Throws std::invalid_argument on a shape
// mismatch.
double relation_regression_loss(const Vector& r, const Vector& doc, const SemanticProjector& proj);

struct RegressionGrad {
  Vector r;
  Vector doc;
  Matrix w;
};

RegressionGrad relation_regression_grad(const Vector& r, const Vector& doc, const SemanticProjector& proj,
                                        double scale);

}  // namespace serml::relinduce
