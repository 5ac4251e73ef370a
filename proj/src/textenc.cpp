#include "serml/textenc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace serml::textenc {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmParams lstm_zeros(int in, int hidden) {
  return LstmParams{Matrix::Zero(4 * hidden, in), Matrix::Zero(4 * hidden, hidden), Vector::Zero(4 * hidden)};
}

AttentionParams attention_zeros(int hidden, int attn, int cond) {
  return AttentionParams{Vector::Zero(attn), Matrix::Zero(attn, hidden), Matrix::Zero(attn, 2 * cond),
                         Vector::Zero(attn)};
}

Vector concat(const Vector& a, const Vector& b) {
  Vector out(a.size() + b.size());
  out << a, b;
  return out;
}

double log_sum_exp(const Vector& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

}  // namespace

EncoderParams EncoderParams::zeros(const EncoderShape& s) {
  EncoderParams p;
  p.word_embed = RowMatrix::Zero(s.vocab, s.word_dim);
  p.word_lstm = lstm_zeros(s.word_dim, s.hidden);
  p.sentence_lstm = lstm_zeros(s.hidden, s.hidden);
  p.word_attn = attention_zeros(s.hidden, s.attn_dim, s.cond_dim);
  p.sentence_attn = attention_zeros(s.hidden, s.attn_dim, s.cond_dim);
  p.classifier_w = Matrix::Zero(s.classes, s.hidden);
  p.classifier_b = Vector::Zero(s.classes);
  return p;
}

EncoderParams EncoderParams::uniform(const EncoderShape& s, double bound, Rng& rng) {
  EncoderParams p = zeros(s);
  TensorList tensors;
  p.collect(tensors, "");
  for (auto& t : tensors) {
    for (auto& x : t.values) {
      x = serml::uniform(rng, -bound, bound);
    }
  }
  return p;
}

EncoderShape EncoderParams::shape() const {
  EncoderShape s;
  s.vocab = static_cast<int>(word_embed.rows());
  s.word_dim = static_cast<int>(word_embed.cols());
  s.hidden = static_cast<int>(word_lstm.wh.cols());
  s.attn_dim = static_cast<int>(word_attn.w1.size());
  s.cond_dim = static_cast<int>(word_attn.w3.cols() / 2);
  s.classes = static_cast<int>(classifier_b.size());
  return s;
}

void EncoderParams::collect(TensorList& out, const std::string& prefix) {
  add_tensor(out, prefix + "word_embed", word_embed);
  for (auto [name, lstm] : {std::pair{"word_lstm", &word_lstm}, std::pair{"sentence_lstm", &sentence_lstm}}) {
    add_tensor(out, prefix + name + ".wx", lstm->wx);
    add_tensor(out, prefix + name + ".wh", lstm->wh);
    add_tensor(out, prefix + name + ".b", lstm->b);
  }
  for (auto [name, att] : {std::pair{"word_attn", &word_attn}, std::pair{"sentence_attn", &sentence_attn}}) {
    add_tensor(out, prefix + name + ".w1", att->w1);
    add_tensor(out, prefix + name + ".w2", att->w2);
    add_tensor(out, prefix + name + ".w3", att->w3);
    add_tensor(out, prefix + name + ".b", att->b);
  }
  add_tensor(out, prefix + "classifier.w", classifier_w);
  add_tensor(out, prefix + "classifier.b", classifier_b);
}

Vector masked_softmax(const Vector& scores, int valid) {
  Vector out = Vector::Zero(scores.size());
  if (valid <= 0) {
    return out;
  }
  Vector masked = scores;
  for (Eigen::Index i = valid; i < masked.size(); ++i) {
    masked[i] = -std::numeric_limits<double>::infinity();
  }
  const double m = masked.head(valid).maxCoeff();
  double total = 0.0;
  for (Eigen::Index i = 0; i < masked.size(); ++i) {
    out[i] = std::exp(masked[i] - m);  // exp(-inf) == 0
    total += out[i];
  }
  return out / total;
}

LstmTrace lstm_forward(const LstmParams& p, std::span<const Vector> inputs) {
  const auto hidden = p.wh.cols();
  LstmTrace trace;
  trace.inputs.assign(inputs.begin(), inputs.end());
  Vector h = Vector::Zero(hidden);
  Vector c = Vector::Zero(hidden);
  for (const auto& x : inputs) {
    Vector z = p.wx * x + p.wh * h + p.b;
    for (Eigen::Index k = 0; k < hidden; ++k) {
      z[k] = sigmoid(z[k]);                           // input
      z[hidden + k] = sigmoid(z[hidden + k]);         // forget
      z[2 * hidden + k] = std::tanh(z[2 * hidden + k]);  // candidate
      z[3 * hidden + k] = sigmoid(z[3 * hidden + k]);  // output
    }
    c = z.segment(hidden, hidden).cwiseProduct(c) + z.head(hidden).cwiseProduct(z.segment(2 * hidden, hidden));
    h = z.tail(hidden).cwiseProduct(c.array().tanh().matrix());
    trace.gates.push_back(std::move(z));
    trace.cells.push_back(c);
    trace.hidden.push_back(h);
  }
  return trace;
}

std::vector<Vector> lstm_backward(const LstmParams& p, const LstmTrace& trace,
                                  std::span<const Vector> grad_hidden, LstmParams& grad) {
  const auto hidden = p.wh.cols();
  const auto steps = trace.hidden.size();
  std::vector<Vector> grad_inputs(steps);
  Vector dh_next = Vector::Zero(hidden);
  Vector dc_next = Vector::Zero(hidden);
  Vector dz(4 * hidden);
  for (std::size_t t = steps; t-- > 0;) {
    const Vector& g = trace.gates[t];
    const Vector& c = trace.cells[t];
    const Vector c_prev = t > 0 ? trace.cells[t - 1] : Vector::Zero(hidden);
    const Vector h_prev = t > 0 ? trace.hidden[t - 1] : Vector::Zero(hidden);
    const Vector dh = grad_hidden[t] + dh_next;
    for (Eigen::Index k = 0; k < hidden; ++k) {
      const double i = g[k], f = g[hidden + k], cand = g[2 * hidden + k], o = g[3 * hidden + k];
      const double tc = std::tanh(c[k]);
      const double dc = dc_next[k] + dh[k] * o * (1.0 - tc * tc);
      dz[k] = dc * cand * i * (1.0 - i);
      dz[hidden + k] = dc * c_prev[k] * f * (1.0 - f);
      dz[2 * hidden + k] = dc * i * (1.0 - cand * cand);
      dz[3 * hidden + k] = dh[k] * tc * o * (1.0 - o);
      dc_next[k] = dc * f;
    }
    grad.wx.noalias() += dz * trace.inputs[t].transpose();
    grad.wh.noalias() += dz * h_prev.transpose();
    grad.b += dz;
    grad_inputs[t] = p.wx.transpose() * dz;
    dh_next = p.wh.transpose() * dz;
  }
  return grad_inputs;
}

Vector attention_forward(const AttentionParams& p, std::span<const Vector> states, const Vector& cond,
                         int width, AttentionTrace& trace) {
  const int valid = static_cast<int>(states.size());
  const Vector query = p.w3 * cond + p.b;
  Vector scores = Vector::Zero(std::max(width, valid));
  trace.act.clear();
  for (int t = 0; t < valid; ++t) {
    Vector a = (p.w2 * states[static_cast<std::size_t>(t)] + query).array().tanh().matrix();
    scores[t] = p.w1.dot(a);
    trace.act.push_back(std::move(a));
  }
  trace.valid = valid;
  trace.weights = masked_softmax(scores, valid);
  Vector pooled = Vector::Zero(p.w2.cols());
  for (int t = 0; t < valid; ++t) {
    pooled += trace.weights[t] * states[static_cast<std::size_t>(t)];
  }
  return pooled;
}

void attention_backward(const AttentionParams& p, std::span<const Vector> states, const Vector& cond,
                        const AttentionTrace& trace, const Vector& grad_pooled,
                        std::vector<Vector>& grad_states, AttentionParams& grad, Vector& grad_cond) {
  const int valid = trace.valid;
  grad_states.assign(static_cast<std::size_t>(valid), Vector());
  Vector dweights(valid);
  for (int t = 0; t < valid; ++t) {
    dweights[t] = grad_pooled.dot(states[static_cast<std::size_t>(t)]);
    grad_states[static_cast<std::size_t>(t)] = trace.weights[t] * grad_pooled;
  }
  const double mean = trace.weights.head(valid).dot(dweights);
  Vector dquery = Vector::Zero(p.b.size());
  for (int t = 0; t < valid; ++t) {
    const double dscore = trace.weights[t] * (dweights[t] - mean);
    const Vector& a = trace.act[static_cast<std::size_t>(t)];
    grad.w1 += dscore * a;
    const Vector dpre = (dscore * p.w1).cwiseProduct((1.0 - a.array().square()).matrix());
    grad.w2.noalias() += dpre * states[static_cast<std::size_t>(t)].transpose();
    grad_states[static_cast<std::size_t>(t)].noalias() += p.w2.transpose() * dpre;
    dquery += dpre;
  }
  grad.w3.noalias() += dquery * cond.transpose();
  grad.b += dquery;
  grad_cond.noalias() += p.w3.transpose() * dquery;
}

WordEncoding encode_words(std::span<const std::int32_t> sentence, const Vector& u, const Vector& v,
                          const EncoderParams& params) {
  WordEncoding out;
  int length = 0;
  while (length < static_cast<int>(sentence.size()) && sentence[static_cast<std::size_t>(length)] != corpus::Vocabulary::kPad) {
    ++length;
  }
  out.tokens.assign(sentence.begin(), sentence.begin() + length);
  const auto hidden = params.word_lstm.wh.cols();
  if (length == 0) {
    out.all_pad = true;
    out.s = Vector::Zero(hidden);
    out.weights = Vector::Zero(static_cast<Eigen::Index>(sentence.size()));
    return out;
  }
  std::vector<Vector> embedded;
  embedded.reserve(static_cast<std::size_t>(length));
  for (auto token : out.tokens) {
    if (token < 0 || token >= params.word_embed.rows()) {
      throw std::out_of_range("token id outside vocabulary");
    }
    embedded.emplace_back(params.word_embed.row(token).transpose());
  }
  out.lstm = lstm_forward(params.word_lstm, embedded);
  out.s = attention_forward(params.word_attn, out.lstm.hidden, concat(u, v),
                            static_cast<int>(sentence.size()), out.attn);
  out.weights = out.attn.weights;
  return out;
}

DocEncoding encode_doc(const corpus::TokenizedDoc& doc, const Vector& u, const Vector& v,
                       const EncoderParams& params) {
  DocEncoding out;
  std::vector<Vector> sentence_vectors;
  for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
    out.rows.push_back(encode_words(doc.sentences[i], u, v, params));
    if (!out.rows.back().all_pad) {
      out.active_rows.push_back(static_cast<int>(i));
      sentence_vectors.push_back(out.rows.back().s);
    }
    out.word_attn.push_back(out.rows.back().weights);
  }
  if (sentence_vectors.empty()) {
    throw std::invalid_argument("cannot encode a document without sentences");
  }
  out.sentence_lstm = lstm_forward(params.sentence_lstm, sentence_vectors);
  out.d = attention_forward(params.sentence_attn, out.sentence_lstm.hidden, concat(u, v),
                            static_cast<int>(out.active_rows.size()), out.sentence_attention);
  out.sent_attn = Vector::Zero(static_cast<Eigen::Index>(doc.sentences.size()));
  for (std::size_t k = 0; k < out.active_rows.size(); ++k) {
    out.sent_attn[out.active_rows[k]] = out.sentence_attention.weights[static_cast<Eigen::Index>(k)];
  }
  out.class_logits = params.classifier_w * out.d + params.classifier_b;
  return out;
}

void backward_doc(const DocEncoding& enc, const Vector& u, const Vector& v, const Vector& grad_d,
                  const Vector& grad_logits, const EncoderParams& params, EncoderParams& grad,
                  Vector& grad_u, Vector& grad_v) {
  const Vector cond = concat(u, v);
  Vector grad_cond = Vector::Zero(cond.size());

  grad.classifier_w.noalias() += grad_logits * enc.d.transpose();
  grad.classifier_b += grad_logits;
  const Vector dd = grad_d + params.classifier_w.transpose() * grad_logits;

  std::vector<Vector> dsent_states;
  attention_backward(params.sentence_attn, enc.sentence_lstm.hidden, cond, enc.sentence_attention, dd,
                     dsent_states, grad.sentence_attn, grad_cond);
  const auto dsentences = lstm_backward(params.sentence_lstm, enc.sentence_lstm, dsent_states, grad.sentence_lstm);

  for (std::size_t k = 0; k < enc.active_rows.size(); ++k) {
    const auto& row = enc.rows[static_cast<std::size_t>(enc.active_rows[k])];
    std::vector<Vector> dword_states;
    attention_backward(params.word_attn, row.lstm.hidden, cond, row.attn, dsentences[k], dword_states,
                       grad.word_attn, grad_cond);
    const auto dembedded = lstm_backward(params.word_lstm, row.lstm, dword_states, grad.word_lstm);
    for (std::size_t t = 0; t < row.tokens.size(); ++t) {
      grad.word_embed.row(row.tokens[t]) += dembedded[t].transpose();
    }
  }
  const auto d = u.size();
  grad_u += grad_cond.head(d);
  grad_v += grad_cond.tail(d);
}

double classify_loss(std::span<const Vector> logits, std::span<const int> ratings, Reduction reduction) {
  if (logits.size() != ratings.size()) {
    throw std::invalid_argument("logits and ratings differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const int cls = ratings[i] - 1;
    if (cls < 0 || cls >= logits[i].size()) {
      throw std::invalid_argument("rating " + std::to_string(ratings[i]) + " outside [1, " +
                                  std::to_string(logits[i].size()) + "]");
    }
    total += log_sum_exp(logits[i]) - logits[i][cls];
  }
  if (reduction == Reduction::kMean && !logits.empty()) {
    total /= static_cast<double>(logits.size());
  }
  return total;
}

Vector classify_loss_grad(const Vector& logits, int rating, double scale) {
  const int cls = rating - 1;
  if (cls < 0 || cls >= logits.size()) {
    throw std::invalid_argument("rating outside class range");
  }
  Vector p = (logits.array() - log_sum_exp(logits)).exp().matrix();
  p[cls] -= 1.0;
  return scale * p;
}

}  // namespace serml::textenc
