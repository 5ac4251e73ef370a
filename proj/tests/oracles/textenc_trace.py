"""Independent numpy trace of the hierarchical encoder on hand-set weights.

Prints the values frozen in test_textenc.cpp. Every tensor k is filled so
that its j-th element in storage order is 0.5 * sin(1.7 * j + 0.3 * k + 0.1);
matrices are column-major except the word embedding table (row-major).
"""
import numpy as np

V, K, H, A, D, C = 5, 2, 2, 2, 1, 3


def fill(k, shape, order):
    n = int(np.prod(shape))
    vals = 0.5 * np.sin(1.7 * np.arange(n) + 0.3 * k + 0.1)
    return vals.reshape(shape, order=order)


shapes = [
    ("word_embed", (V, K), "C"),
    ("word_lstm.wx", (4 * H, K), "F"),
    ("word_lstm.wh", (4 * H, H), "F"),
    ("word_lstm.b", (4 * H,), "F"),
    ("sentence_lstm.wx", (4 * H, H), "F"),
    ("sentence_lstm.wh", (4 * H, H), "F"),
    ("sentence_lstm.b", (4 * H,), "F"),
    ("word_attn.w1", (A,), "F"),
    ("word_attn.w2", (A, H), "F"),
    ("word_attn.w3", (A, 2 * D), "F"),
    ("word_attn.b", (A,), "F"),
    ("sentence_attn.w1", (A,), "F"),
    ("sentence_attn.w2", (A, H), "F"),
    ("sentence_attn.w3", (A, 2 * D), "F"),
    ("sentence_attn.b", (A,), "F"),
    ("classifier.w", (C, H), "F"),
    ("classifier.b", (C,), "F"),
]
P = {name: fill(k, shape, order) for k, (name, shape, order) in enumerate(shapes)}


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm(prefix, xs):
    h = np.zeros(H)
    c = np.zeros(H)
    out = []
    for x in xs:
        z = P[prefix + ".wx"] @ x + P[prefix + ".wh"] @ h + P[prefix + ".b"]
        i, f, g, o = sigmoid(z[:H]), sigmoid(z[H:2 * H]), np.tanh(z[2 * H:3 * H]), sigmoid(z[3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
        out.append(h)
    return out


def attend(prefix, states, cond):
    e = np.array([P[prefix + ".w1"] @ np.tanh(P[prefix + ".w2"] @ s + P[prefix + ".w3"] @ cond + P[prefix + ".b"])
                  for s in states])
    w = np.exp(e - e.max())
    w /= w.sum()
    return sum(wi * s for wi, s in zip(w, states)), w


cond = np.array([0.3, -0.2])

# encode_words on a 3-word sentence
hs = lstm("word_lstm", [P["word_embed"][t] for t in [2, 3, 4]])
s, w = attend("word_attn", hs, cond)
print("words s", repr(s.tolist()), "weights", repr(w.tolist()))

# encode_doc on two sentences of two words
sent = []
for row in [[2, 3], [4, 2]]:
    hs = lstm("word_lstm", [P["word_embed"][t] for t in row])
    sent.append(attend("word_attn", hs, cond)[0])
hs = lstm("sentence_lstm", sent)
d, ws = attend("sentence_attn", hs, cond)
logits = P["classifier.w"] @ d + P["classifier.b"]
print("doc d", repr(d.tolist()), "sent", repr(ws.tolist()), "logits", repr(logits.tolist()))
