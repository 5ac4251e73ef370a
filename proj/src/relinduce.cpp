#include "serml/relinduce.hpp"

#include <cmath>
#include <stdexcept>

namespace serml::relinduce {
namespace {

std::vector<std::pair<int, int>> mlp_widths(InductionKind kind, int d) {
  switch (kind) {
    case InductionKind::kMlp2:
      return {{2 * d, d}, {d, d}};
    case InductionKind::kMlp4:
      return {{2 * d, 2 * d}, {2 * d, d}, {d, d}, {d, d}};
    default:
      return {};
  }
}

Vector tanh_vec(const Vector& x) { return x.array().tanh().matrix(); }

}  // namespace

std::string_view to_string(InductionKind kind) {
  switch (kind) {
    case InductionKind::kElementWise:
      return "element_wise";
    case InductionKind::kMlp2:
      return "mlp2";
    case InductionKind::kMlp4:
      return "mlp4";
    case InductionKind::kMemory:
      return "memory";
  }
  return "?";
}

InductionKind parse_induction(std::string_view name) {
  for (auto kind : {InductionKind::kElementWise, InductionKind::kMlp2, InductionKind::kMlp4, InductionKind::kMemory}) {
    if (name == to_string(kind)) {
      return kind;
    }
  }
  throw std::invalid_argument("unknown induction strategy '" + std::string(name) + "'");
}

Induction Induction::zeros(InductionKind kind, int d, int slots) {
  if (d < 1) {
    throw std::invalid_argument("relation dimension must be >= 1");
  }
  Induction f;
  f.kind = kind;
  for (auto [in, out] : mlp_widths(kind, d)) {
    f.mlp.push_back(DenseLayer{Matrix::Zero(out, in), Vector::Zero(out)});
  }
  if (kind == InductionKind::kMemory) {
    if (slots < 1) {
      throw std::invalid_argument("memory needs at least one slot");
    }
    f.memory.keys = Matrix::Zero(slots, 3 * d);
    f.memory.slots = Matrix::Zero(slots, d);
    f.memory.w_o = Matrix::Zero(d, d);
    f.memory.b_o = Vector::Zero(d);
  }
  f.d = d;
  return f;
}

Induction Induction::uniform(InductionKind kind, int d, int slots, double bound, Rng& rng) {
  Induction f = zeros(kind, d, slots);
  TensorList tensors;
  f.collect(tensors, "");
  for (auto& t : tensors) {
    for (auto& x : t.values) {
      x = serml::uniform(rng, -bound, bound);
    }
  }
  return f;
}

void Induction::collect(TensorList& out, const std::string& prefix) {
  for (std::size_t i = 0; i < mlp.size(); ++i) {
    add_tensor(out, prefix + "mlp" + std::to_string(i) + ".w", mlp[i].w);
    add_tensor(out, prefix + "mlp" + std::to_string(i) + ".b", mlp[i].b);
  }
  if (kind == InductionKind::kMemory) {
    add_tensor(out, prefix + "memory.keys", memory.keys);
    add_tensor(out, prefix + "memory.slots", memory.slots);
    add_tensor(out, prefix + "memory.w_o", memory.w_o);
    add_tensor(out, prefix + "memory.b_o", memory.b_o);
  }
}

Vector induce(const Vector& u, const Vector& v, const Induction& f, InductionTrace* trace) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("user and item vectors differ in dimension");
  }
  InductionTrace local;
  InductionTrace& t = trace ? *trace : local;
  switch (f.kind) {
    case InductionKind::kElementWise:
      t.r = u.cwiseProduct(v);
      break;
    case InductionKind::kMlp2:
    case InductionKind::kMlp4: {
      t.activations.clear();
      Vector x(u.size() + v.size());
      x << u, v;
      t.activations.push_back(x);
      for (const auto& layer : f.mlp) {
        x = tanh_vec(layer.w * x + layer.b);
        t.activations.push_back(x);
      }
      t.r = x;
      break;
    }
    case InductionKind::kMemory: {
      const auto d = u.size();
      t.joint.resize(3 * d);
      t.joint << u, v, u.cwiseProduct(v);
      const Vector logits = f.memory.keys * t.joint;
      const double m = logits.maxCoeff();
      t.attn = (logits.array() - m).exp().matrix();
      t.attn /= t.attn.sum();
      t.read = f.memory.slots.transpose() * t.attn;
      t.r = tanh_vec(f.memory.w_o * t.read + f.memory.b_o);
      break;
    }
  }
  return t.r;
}

MemoryReadout memory_attend(const Vector& u, const Vector& v, const RelationMemory& mem) {
  Induction f;
  f.kind = InductionKind::kMemory;
  f.memory = mem;
  f.d = static_cast<int>(mem.w_o.rows());
  InductionTrace t;
  induce(u, v, f, &t);
  return MemoryReadout{t.r, t.attn};
}

void induce_backward(const Vector& u, const Vector& v, const Induction& f, const InductionTrace& trace,
                     const Vector& grad_r, Induction& grad, Vector& grad_u, Vector& grad_v) {
  const auto d = u.size();
  switch (f.kind) {
    case InductionKind::kElementWise:
      grad_u += grad_r.cwiseProduct(v);
      grad_v += grad_r.cwiseProduct(u);
      break;
    case InductionKind::kMlp2:
    case InductionKind::kMlp4: {
      Vector dx = grad_r;
      for (std::size_t i = f.mlp.size(); i-- > 0;) {
        const Vector& out = trace.activations[i + 1];
        const Vector dpre = dx.cwiseProduct((1.0 - out.array().square()).matrix());
        grad.mlp[i].w.noalias() += dpre * trace.activations[i].transpose();
        grad.mlp[i].b += dpre;
        dx = f.mlp[i].w.transpose() * dpre;
      }
      grad_u += dx.head(d);
      grad_v += dx.tail(d);
      break;
    }
    case InductionKind::kMemory: {
      const auto& mem = f.memory;
      const Vector dz = grad_r.cwiseProduct((1.0 - trace.r.array().square()).matrix());
      grad.memory.w_o.noalias() += dz * trace.read.transpose();
      grad.memory.b_o += dz;
      const Vector dread = mem.w_o.transpose() * dz;
      grad.memory.slots.noalias() += trace.attn * dread.transpose();
      const Vector dattn = mem.slots * dread;
      const double mean = trace.attn.dot(dattn);
      const Vector dlogits = trace.attn.cwiseProduct((dattn.array() - mean).matrix());
      grad.memory.keys.noalias() += dlogits * trace.joint.transpose();
      const Vector djoint = mem.keys.transpose() * dlogits;
      grad_u += djoint.head(d) + djoint.tail(d).cwiseProduct(v);
      grad_v += djoint.segment(d, d) + djoint.tail(d).cwiseProduct(u);
      break;
    }
  }
}

void SemanticProjector::collect(TensorList& out, const std::string& prefix) {
  add_tensor(out, prefix + "w", w);
}

double relation_regression_loss(const Vector& r, const Vector& doc, const SemanticProjector& proj) {
  if (doc.size() != proj.w.rows() || r.size() != proj.w.cols()) {
    throw std::invalid_argument("relation regression: dimension mismatch");
  }
  return proj.lambda * (proj.w.transpose() * doc - r).squaredNorm();
}

RegressionGrad relation_regression_grad(const Vector& r, const Vector& doc, const SemanticProjector& proj,
                                        double scale) {
  if (doc.size() != proj.w.rows() || r.size() != proj.w.cols()) {
    throw std::invalid_argument("relation regression: dimension mismatch");
  }
  const Vector diff = proj.w.transpose() * doc - r;
  const Vector g = (2.0 * proj.lambda * scale) * diff;
  RegressionGrad out;
  out.r = -g;
  out.doc = proj.w * g;
  out.w = doc * g.transpose();
  return out;
}

}  // namespace serml::relinduce
