#include "serml/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace serml {
namespace {

enum Stream : std::uint64_t { kUsers = 1, kItems, kEncoder, kInduction, kProjector };

textenc::EncoderShape encoder_shape(const ModelConfig& c, std::size_t vocab, int r_max) {
  textenc::EncoderShape s;
  s.vocab = static_cast<int>(vocab);
  s.word_dim = c.K;
  s.hidden = c.hidden();
  s.attn_dim = c.attn();
  s.cond_dim = c.d;
  s.classes = r_max;
  return s;
}

void check_index(std::int32_t i, std::size_t n, const char* what) {
  if (i < 0 || static_cast<std::size_t>(i) >= n) {
    throw std::out_of_range(std::string("unknown ") + what + " index " + std::to_string(i));
  }
}

}  // namespace

Model Model::zeros(const ModelConfig& config, std::size_t n_users, std::size_t n_items, std::size_t vocab,
                   int r_max) {
  config.validate();
  if (r_max < 2) {
    throw std::invalid_argument("r_max must be >= 2");
  }
  Model m;
  m.config = config;
  m.r_max = r_max;
  const auto n_u = static_cast<Eigen::Index>(n_users);
  const auto n_v = static_cast<Eigen::Index>(n_items);
  m.tables.users = RowMatrix::Zero(n_u, config.d);
  m.tables.items = RowMatrix::Zero(n_v, config.d);
  m.encoder = textenc::EncoderParams::zeros(encoder_shape(config, vocab, r_max));
  m.induction = relinduce::Induction::zeros(config.induction, config.d, config.m);
  m.projector.w = Matrix::Zero(config.hidden(), config.d);
  if (config.rating_head) {
    m.rating_head = Vector::Zero(2);
  }
  return m;
}

Model Model::initialize(const ModelConfig& config, std::size_t n_users, std::size_t n_items, std::size_t vocab,
                        int r_max) {
  Model m = zeros(config, n_users, n_items, vocab, r_max);
  const double sd = std::sqrt(config.init_var);
  auto gaussian_rows = [&](RowMatrix& table, Stream stream) {
    Rng rng(derive_seed(config.seed, stream));
    for (Eigen::Index i = 0; i < table.size(); ++i) {
      table.data()[i] = normal(rng, config.init_mean, sd);
    }
    metric::clip_rows(table);
  };
  gaussian_rows(m.tables.users, kUsers);
  gaussian_rows(m.tables.items, kItems);

  Rng enc_rng(derive_seed(config.seed, kEncoder));
  m.encoder = textenc::EncoderParams::uniform(m.encoder.shape(), config.init_uniform, enc_rng);
  Rng ind_rng(derive_seed(config.seed, kInduction));
  m.induction = relinduce::Induction::uniform(config.induction, config.d, config.m, config.init_uniform, ind_rng);
  Rng proj_rng(derive_seed(config.seed, kProjector));
  for (Eigen::Index i = 0; i < m.projector.w.size(); ++i) {
    m.projector.w.data()[i] = uniform(proj_rng, -config.init_uniform, config.init_uniform);
  }
  if (config.rating_head) {
    m.rating_head << 1.0, 0.5 * (1.0 + r_max);
  }
  return m;
}

Model Model::zeros_like() const {
  Model z = *this;
  z.set_zero();
  return z;
}

TensorList Model::tensors() {
  TensorList out;
  add_tensor(out, "users", tables.users);
  add_tensor(out, "items", tables.items);
  encoder.collect(out, "encoder.");
  induction.collect(out, "induction.");
  projector.collect(out, "projector.");
  if (rating_head.size() > 0) {
    add_tensor(out, "rating_head", rating_head);
  }
  return out;
}

void Model::set_zero() {
  for (auto& t : tensors()) {
    std::fill(t.values.begin(), t.values.end(), 0.0);
  }
}

Vector Model::user(std::int32_t u) const {
  check_index(u, n_users(), "user");
  return tables.users.row(u).transpose();
}

Vector Model::item(std::int32_t v) const {
  check_index(v, n_items(), "item");
  return tables.items.row(v).transpose();
}

Vector Model::relation(std::int32_t u, std::int32_t v) const {
  return relinduce::induce(user(u), item(v), induction);
}

double Model::score(std::int32_t u, std::int32_t v) const {
  const Vector uu = user(u);
  const Vector vv = item(v);
  return metric::score(uu, relinduce::induce(uu, vv, induction), vv);
}

std::vector<RankedItem> predict_topn(const Model& model, std::int32_t user,
                                     std::span<const std::int32_t> candidates, std::size_t n) {
  const Vector u = model.user(user);
  std::vector<RankedItem> ranked;
  ranked.reserve(candidates.size());
  for (auto item : candidates) {
    const Vector v = model.item(item);
    ranked.push_back({item, metric::score(u, relinduce::induce(u, v, model.induction), v)});
  }
  const auto keep = std::min(n, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                    [](const RankedItem& a, const RankedItem& b) {
                      return a.score != b.score ? a.score > b.score : a.item < b.item;
                    });
  ranked.resize(keep);
  return ranked;
}

double predict_rating(const Model& model, std::int32_t user, std::int32_t item) {
  if (model.rating_head.size() != 2) {
    throw std::logic_error("model has no rating head (set rating_head = true)");
  }
  const double raw = model.rating_head[0] * model.score(user, item) + model.rating_head[1];
  return std::clamp(raw, 1.0, static_cast<double>(model.r_max));
}

}  // namespace serml
