#include "serml/trainer.hpp"

#include "serml/evalkit.hpp"
#include "serml/log.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace serml {

LossParts joint_loss(const Model& model, std::span<const TrainingExample> batch, Model* grad) {
  const auto& cfg = model.config;
  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto hidden = model.projector.w.rows();
  const bool with_rating = model.rating_head.size() == 2;

  std::size_t pairs = 0;
  std::size_t docs = 0;
  for (const auto& e : batch) {
    pairs += e.negatives.size();
    if (e.doc != nullptr && !e.doc->empty()) {
      ++docs;
    }
  }
  const double pair_scale = pairs > 0 ? 1.0 / static_cast<double>(pairs) : 0.0;
  const double rel_scale = docs > 0 ? 1.0 / static_cast<double>(docs) : 0.0;
  const double cls_scale = cfg.reduction == textenc::Reduction::kMean ? rel_scale : 1.0;
  const double rating_scale = batch.empty() ? 0.0 : 1.0 / static_cast<double>(batch.size());

  LossParts parts;
  relinduce::InductionTrace pos_trace;
  relinduce::InductionTrace neg_trace;
  Vector grad_u(d), grad_v(d), grad_neg(d), grad_r(d), cond_u(d), cond_v(d);

  for (const auto& e : batch) {
    const Vector u = model.user(e.user);
    const Vector v = model.item(e.item);
    const Vector r = relinduce::induce(u, v, model.induction, &pos_trace);
    const double s_pos = metric::score(u, r, v);
    double grad_s_pos = 0.0;
    grad_u.setZero();
    grad_v.setZero();
    grad_r.setZero();

    for (auto neg : e.negatives) {
      const Vector vn = model.item(neg);
      const Vector rn = relinduce::induce(u, vn, model.induction, grad ? &neg_trace : nullptr);
      const double s_neg = metric::score(u, rn, vn);
      const double hinge = metric::margin_loss(s_pos, s_neg, cfg.xi);
      parts.ranking += pair_scale * hinge;
      if (grad != nullptr && hinge > 0.0) {
        grad_s_pos -= pair_scale;
        grad_u += pair_scale * rn.cwiseProduct(vn);
        grad_neg = pair_scale * u.cwiseProduct(rn);
        const Vector grad_rn = pair_scale * u.cwiseProduct(vn);
        relinduce::induce_backward(u, vn, model.induction, neg_trace, grad_rn, grad->induction, grad_u, grad_neg);
        grad->tables.items.row(neg) += grad_neg.transpose();
      }
    }

    if (e.doc != nullptr && !e.doc->empty()) {
      const auto enc = textenc::encode_doc(*e.doc, u, v, model.encoder);
      const int rating[] = {e.rating};
      parts.classification +=
          cls_scale * textenc::classify_loss(std::span(&enc.class_logits, 1), rating, textenc::Reduction::kSum);
      parts.relation += rel_scale * relinduce::relation_regression_loss(r, enc.d, model.projector);
      if (grad != nullptr) {
        const Vector grad_logits = textenc::classify_loss_grad(enc.class_logits, e.rating, cls_scale);
        Vector grad_doc = Vector::Zero(hidden);
        if (cfg.gamma > 0.0) {
          const auto rg = relinduce::relation_regression_grad(r, enc.d, model.projector, cfg.gamma * rel_scale);
          grad_r += rg.r;
          grad->projector.w += rg.w;
          if (!cfg.stop_grad_semantic) {
            grad_doc = rg.doc;
          }
        }
        cond_u.setZero();
        cond_v.setZero();
        textenc::backward_doc(enc, u, v, grad_doc, grad_logits, model.encoder, grad->encoder, cond_u, cond_v);
        if (cfg.text_grad_to_embeddings) {
          grad_u += cond_u;
          grad_v += cond_v;
        }
      }
    }

    if (with_rating) {
      const double a = model.rating_head[0];
      const double err = a * s_pos + model.rating_head[1] - e.rating;
      parts.rating += rating_scale * err * err;
      if (grad != nullptr) {
        const double g = 2.0 * cfg.rating_weight * rating_scale * err;
        grad->rating_head[0] += g * s_pos;
        grad->rating_head[1] += g;
        grad_s_pos += g * a;
      }
    }

    if (grad != nullptr) {
      grad_u += grad_s_pos * r.cwiseProduct(v);
      grad_v += grad_s_pos * u.cwiseProduct(r);
      grad_r += grad_s_pos * u.cwiseProduct(v);
      relinduce::induce_backward(u, v, model.induction, pos_trace, grad_r, grad->induction, grad_u, grad_v);
      grad->tables.users.row(e.user) += grad_u.transpose();
      grad->tables.items.row(e.item) += grad_v.transpose();
    }
  }

  parts.frobenius = model.projector.w.squaredNorm();
  if (grad != nullptr) {
    grad->projector.w += (2.0 * cfg.rho) * model.projector.w;
  }
  parts.total = parts.classification + parts.ranking + cfg.gamma * parts.relation + cfg.rho * parts.frobenius;
  if (with_rating) {
    parts.total += cfg.rating_weight * parts.rating;
  }
  for (double x : {parts.classification, parts.ranking, parts.relation, parts.frobenius, parts.rating}) {
    if (!std::isfinite(x)) {
      std::ostringstream msg;
      msg << "non-finite loss component: L_C=" << parts.classification << " L_R=" << parts.ranking
          << " L_rel=" << parts.relation << " frob=" << parts.frobenius << " rating=" << parts.rating;
      throw std::runtime_error(msg.str());
    }
  }
  return parts;
}

AdamOptimizer::AdamOptimizer(const Model& model)
    : lr_(model.config.lr),
      beta1_(model.config.adam_beta1),
      beta2_(model.config.adam_beta2),
      eps_(model.config.adam_eps) {
  Model shape = model;
  for (const auto& t : shape.tensors()) {
    m_.emplace_back(t.values.size(), 0.0);
    v_.emplace_back(t.values.size(), 0.0);
  }
}

void AdamOptimizer::step(Model& params, Model& grads) {
  auto p = params.tensors();
  auto g = grads.tensors();
  if (p.size() != m_.size() || g.size() != p.size()) {
    throw std::logic_error("optimizer state does not match the model");
  }
  ++t_;
  const double step = lr_ * std::sqrt(1.0 - std::pow(beta2_, static_cast<double>(t_))) /
                      (1.0 - std::pow(beta1_, static_cast<double>(t_)));
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto& m = m_[k];
    auto& v = v_[k];
    const auto values = p[k].values;
    const auto grad = g[k].values;
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * grad[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * grad[i] * grad[i];
      values[i] -= step * m[i] / (std::sqrt(v[i]) + eps_);
    }
  }
}

std::vector<TrainingExample> make_batch(std::span<const corpus::Record> records,
                                        const corpus::NegativeSampler& sampler, int neg_per_pos, Rng& rng) {
  std::vector<TrainingExample> batch;
  batch.reserve(records.size());
  for (const auto& r : records) {
    batch.push_back({r.user, r.item, r.rating, &r.doc,
                     sampler.sample(r.user, static_cast<std::size_t>(neg_per_pos), rng)});
  }
  return batch;
}

namespace {

std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

void write_epoch_log(std::ostream& out, const EpochLog& log) {
  nlohmann::json j;
  j["epoch"] = log.epoch;
  j["L"] = log.loss.total;
  j["L_C"] = log.loss.classification;
  j["L_R"] = log.loss.ranking;
  j["L_rel"] = log.loss.relation;
  j["valid_ndcg10"] = log.valid_ndcg10 ? nlohmann::json(*log.valid_ndcg10) : nlohmann::json(nullptr);
  out << j.dump() << '\n';
  out.flush();
}

}  // namespace

TrainResult train(const ModelConfig& config, const corpus::Dataset& data, const TrainOptions& options) {
  config.validate();
  const auto& train_split = data.split(corpus::Split::kTrain);
  if (train_split.empty()) {
    throw std::invalid_argument("training split is empty");
  }
  Model model = Model::initialize(config, data.n_users(), data.n_items(), data.vocab.size(), data.r_max);
  if (config.rating_head) {
    double mean = 0.0;
    for (const auto& r : train_split) {
      mean += r.rating;
    }
    model.rating_head[1] = mean / static_cast<double>(train_split.size());
  }

  AdamOptimizer adam(model);
  Model grads = model.zeros_like();
  const corpus::NegativeSampler sampler(data.n_items(), data.train_positives());
  Rng rng(derive_seed(config.seed, 0x7a11));
  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const bool validate = options.validate && !data.split(corpus::Split::kValid).empty();
  TrainResult result;
  result.best = Checkpoint{model, data.manifest_json(), 0, rng_state(rng)};
  double best_ndcg = -1.0;
  int since_best = 0;

  std::vector<TrainingExample> batch;
  for (int epoch = 1; epoch <= config.epochs && !result.diverged; ++epoch) {
    serml::shuffle(order.begin(), order.end(), rng);
    LossParts sum;
    int batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const auto stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const auto& r = train_split[order[i]];
        batch.push_back({r.user, r.item, r.rating, &r.doc,
                         sampler.sample(r.user, static_cast<std::size_t>(config.neg_per_pos), rng)});
      }
      grads.set_zero();
      LossParts parts;
      try {
        parts = joint_loss(model, batch, &grads);
      } catch (const std::runtime_error& err) {
        result.diverged = true;
        result.divergence_reason = err.what();
        break;
      }
      if (!(parts.total <= config.max_loss)) {
        result.diverged = true;
        result.divergence_reason = "loss " + std::to_string(parts.total) + " exceeds max_loss";
        break;
      }
      adam.step(model, grads);
      metric::clip_norms(model.tables);
      sum.total += parts.total;
      sum.classification += parts.classification;
      sum.ranking += parts.ranking;
      sum.relation += parts.relation;
      sum.frobenius += parts.frobenius;
      sum.rating += parts.rating;
      ++batches;
    }
    if (result.diverged) {
      warn("training diverged at epoch " + std::to_string(epoch) + ": " + result.divergence_reason);
      break;
    }

    EpochLog log;
    log.epoch = epoch;
    const double n = std::max(batches, 1);
    log.loss = LossParts{sum.total / n, sum.classification / n, sum.ranking / n,
                         sum.relation / n, sum.frobenius / n, sum.rating / n};
    if (validate) {
      log.valid_ndcg10 =
          evalkit::rank_eval(model, data, corpus::Split::kValid, config.eval_neg, config.eval_seed).ndcg(10);
    }
    result.history.push_back(log);
    if (options.log != nullptr) {
      write_epoch_log(*options.log, log);
    }

    if (!validate || *log.valid_ndcg10 > best_ndcg) {
      best_ndcg = validate ? *log.valid_ndcg10 : best_ndcg;
      since_best = 0;
      result.best = Checkpoint{model, data.manifest_json(), epoch, rng_state(rng)};
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  return result;
}

namespace {

// Differences are taken per component before weighting, so roundoff from
// components the coordinate does not touch cancels exactly.
double loss_difference(const LossParts& a, const LossParts& b, const ModelConfig& cfg) {
  double diff = (a.classification - b.classification) + (a.ranking - b.ranking) +
                cfg.gamma * (a.relation - b.relation) + cfg.rho * (a.frobenius - b.frobenius);
  if (cfg.rating_head) {
    diff += cfg.rating_weight * (a.rating - b.rating);
  }
  return diff;
}

}  // namespace

GradCheckReport grad_check(const Model& model, std::span<const TrainingExample> batch,
                           const GradCheckOptions& options) {
  Model probe = model;
  probe.config.stop_grad_semantic = false;
  probe.config.text_grad_to_embeddings = true;
  Model analytic = probe.zeros_like();
  joint_loss(probe, batch, &analytic);

  auto params = probe.tensors();
  const auto grads = analytic.tensors();
  Rng rng(options.seed);
  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto values = params[k].values;
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    const auto want = static_cast<std::size_t>(options.coords_per_tensor);
    if (options.coords_per_tensor > 0 && want < coords.size()) {
      for (std::size_t i = 0; i < want; ++i) {
        std::swap(coords[i], coords[i + uniform_index(rng, coords.size() - i)]);
      }
      coords.resize(want);
    }
    TensorCheck check{params[k].name, coords.size(), 0.0, 0.0};
    for (auto idx : coords) {
      const double saved = values[idx];
      values[idx] = saved + options.epsilon;
      const auto plus = joint_loss(probe, batch);
      values[idx] = saved - options.epsilon;
      const auto minus = joint_loss(probe, batch);
      values[idx] = saved;
      const double numeric = loss_difference(plus, minus, probe.config) / (2.0 * options.epsilon);
      const double exact = grads[k].values[idx];
      const double denom = std::max({std::abs(exact), std::abs(numeric), options.floor});
      check.max_rel_error = std::max(check.max_rel_error, std::abs(exact - numeric) / denom);
      check.max_abs_grad = std::max(check.max_abs_grad, std::abs(exact));
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    if (!(check.max_rel_error < options.tolerance)) {
      report.passed = false;
      report.failures.push_back(check.name);
    }
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace serml
