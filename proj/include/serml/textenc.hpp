#pragma once

#include "serml/corpus.hpp"
#include "serml/random.hpp"
#include "serml/tensor.hpp"

#include <span>
#include <vector>

namespace serml::textenc {

struct EncoderShape {
  int vocab = 2;
  int word_dim = 100;   // K
  int hidden = 100;     // H, shared by both LSTMs
  int attn_dim = 100;   // A
  int cond_dim = 100;   // d, size of each of the user/item conditioning vectors
  int classes = 5;      // |C| = R_max
};

// Gate blocks are stacked [input; forget; cell; output].
struct LstmParams {
  Matrix wx;  // 4H x in
  Matrix wh;  // 4H x H
  Vector b;   // 4H
};

// e = w1 . tanh(w2 h + w3 [u; v] + b)
struct AttentionParams {
  Vector w1;  // A
  Matrix w2;  // A x H
  Matrix w3;  // A x 2d
  Vector b;   // A
};

struct EncoderParams {
  RowMatrix word_embed;  // V x K
  LstmParams word_lstm;
  LstmParams sentence_lstm;
  AttentionParams word_attn;
  AttentionParams sentence_attn;
  Matrix classifier_w;  // |C| x H
  Vector classifier_b;  // |C|

  static EncoderParams zeros(const EncoderShape& shape);
  // Weights uniform in [-bound, bound].
  static EncoderParams uniform(const EncoderShape& shape, double bound, Rng& rng);

  EncoderShape shape() const;
  void collect(TensorList& out, const std::string& prefix);
};

// Forward record of one LSTM pass, kept for backpropagation.
struct LstmTrace {
  std::vector<Vector> inputs;
  std::vector<Vector> gates;  // post-activation [i; f; g; o]
  std::vector<Vector> cells;
  std::vector<Vector> hidden;
};

struct AttentionTrace {
  std::vector<Vector> act;  // tanh pre-score activation per position
  Vector weights;           // over all positions, zero where masked
  int valid = 0;
};

struct WordEncoding {
  Vector s;        // sentence vector, zero when the row is all padding
  Vector weights;  // attention over the full row (pads get 0)
  bool all_pad = false;
  LstmTrace lstm;
  AttentionTrace attn;
  std::vector<std::int32_t> tokens;
};

struct DocEncoding {
  Vector d;
  std::vector<Vector> word_attn;  // one per input row
  Vector sent_attn;               // over input rows, zero for padded rows
  Vector class_logits;

  // Backprop state.
  std::vector<WordEncoding> rows;
  std::vector<int> active_rows;  // indices of non-empty rows, in order
  LstmTrace sentence_lstm;
  AttentionTrace sentence_attention;
};

// Softmax over scores[0, valid); positions from `valid` on are masked to -inf.
Vector masked_softmax(const Vector& scores, int valid);

LstmTrace lstm_forward(const LstmParams& p, std::span<const Vector> inputs);

// Accumulates parameter gradients into `grad`; returns d loss / d input per
// step. `grad_hidden[t]` is the upstream gradient on hidden state t.
std::vector<Vector> lstm_backward(const LstmParams& p, const LstmTrace& trace,
                                  std::span<const Vector> grad_hidden, LstmParams& grad);

Vector attention_forward(const AttentionParams& p, std::span<const Vector> states, const Vector& cond,
                         int valid, AttentionTrace& trace);

// Gradient of the pooled vector w.r.t. states, parameters and the
// conditioning vector [u; v].
void attention_backward(const AttentionParams& p, std::span<const Vector> states, const Vector& cond,
                        const AttentionTrace& trace, const Vector& grad_pooled,
                        std::vector<Vector>& grad_states, AttentionParams& grad, Vector& grad_cond);

WordEncoding encode_words(std::span<const std::int32_t> sentence, const Vector& u, const Vector& v,
                          const EncoderParams& params);

// Throws std::invalid_argument when the document has no non-empty sentence.
DocEncoding encode_doc(const corpus::TokenizedDoc& doc, const Vector& u, const Vector& v,
                       const EncoderParams& params);

// Backpropagates upstream gradients on d and on the class logits. Parameter
// gradients accumulate into `grad`; conditioning gradients accumulate into
// grad_u and grad_v.
void backward_doc(const DocEncoding& enc, const Vector& u, const Vector& v, const Vector& grad_d,
                  const Vector& grad_logits, const EncoderParams& params, EncoderParams& grad,
                  Vector& grad_u, Vector& grad_v);

enum class Reduction { kMean, kSum };

// Cross entropy of softmax(logits) against class rating - 1.
double classify_loss(std::span<const Vector> logits, std::span<const int> ratings,
                     Reduction reduction = Reduction::kMean);

// Gradient of -log softmax(logits)[rating - 1], scaled by `scale`.
Vector classify_loss_grad(const Vector& logits, int rating, double scale);

}  // namespace serml::textenc
