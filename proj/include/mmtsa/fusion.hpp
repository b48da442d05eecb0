// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mmtsa/error.hpp"
#include "mmtsa/features.hpp"
#include "mmtsa/rng.hpp"
#include "mmtsa/tensor.hpp"

namespace mmtsa {

enum class FusionMode { Attention, Concat };

inline const char *to_string(FusionMode m) { return m == FusionMode::Attention ? "attention" : "concat"; }

inline FusionMode parse_fusion_mode(const std::string &s) {
  if (s == "attention") return FusionMode::Attention;
  if (s == "concat") return FusionMode::Concat;
  throw ConfigError("unknown fusion mode '" + s + "' (expected attention or concat)");
}

/// Attention vector plus a two-layer classifier. In concat mode `w_att`
/// is empty and layer 1 takes the flattened N·M·d input.
struct HeadParams {
  Vector w_att;
  Matrix w1;  // hidden × fused width
  Vector b1;
  Matrix w2;  // classes × hidden
  Vector b2;

  static HeadParams zeros(std::size_t attention_width, std::size_t input, std::size_t hidden,
                          std::size_t classes) {
    return {Vector(attention_width, 0.0), Matrix(hidden, input), Vector(hidden, 0.0),
            Matrix(classes, hidden), Vector(classes, 0.0)};
  }

  bool operator==(const HeadParams &) const = default;
};

inline HeadParams init_head(FusionMode mode, std::size_t segments, std::size_t concat_width,
                            std::size_t hidden, std::size_t classes, Rng &rng) {
  const bool attn = mode == FusionMode::Attention;
  const std::size_t input = attn ? concat_width : segments * concat_width;
  auto h = HeadParams::zeros(attn ? concat_width : 0, input, hidden, classes);
  if (attn) {
    const double limit = std::sqrt(6.0 / static_cast<double>(concat_width + 1));
    for (auto &v : h.w_att) v = rng.uniform(-limit, limit);
  }
  glorot_uniform(h.w1, rng);
  glorot_uniform(h.w2, rng);
  return h;
}

/// Row i is [f^1_i ‖ f^2_i ‖ … ‖ f^M_i]; `features[m][i]` is modality m, segment i.
inline Matrix concat_segments(const std::vector<std::vector<Vector>> &features) {
  if (features.empty()) throw ShapeMismatch("no modalities to concatenate");
  const std::size_t segments = features[0].size();
  if (segments == 0) throw ShapeMismatch("no segments to concatenate");
  const std::size_t width = features[0][0].size();
  for (const auto &mod : features) {
    if (mod.size() != segments) throw ShapeMismatch("modalities disagree on segment count");
    for (const auto &f : mod)
      if (f.size() != width) throw ShapeMismatch("feature widths differ across modalities");
  }
  Matrix y(segments, features.size() * width);
  for (std::size_t i = 0; i < segments; ++i)
    for (std::size_t m = 0; m < features.size(); ++m)
      std::copy(features[m][i].begin(), features[m][i].end(), y.row(i).begin() + m * width);
  return y;
}

/// Softmax with the maximum subtracted before exponentiation.
inline Vector softmax(std::span<const double> z) {
  Vector p(z.size());
  const double top = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += (p[i] = std::exp(z[i] - top));
  for (auto &v : p) v /= sum;
  return p;
}

struct AttentionWeights {
  Vector scores;
  Vector alpha;
};

/// score_i = W_att·Y_i, alpha = softmax(scores).
inline AttentionWeights attention(const Matrix &y, std::span<const double> w_att) {
  if (w_att.size() != y.cols) throw ShapeMismatch("attention vector width mismatch");
  AttentionWeights a{Vector(y.rows, 0.0), {}};
  for (std::size_t i = 0; i < y.rows; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < y.cols; ++k) s += w_att[k] * y(i, k);
    a.scores[i] = s;
  }
  a.alpha = softmax(a.scores);
  return a;
}

/// Weighted global representation Σ_i alpha_i Y_i.
inline Vector fuse(const Matrix &y, std::span<const double> alpha) {
  if (alpha.size() != y.rows) throw ShapeMismatch("one attention weight per segment required");
  Vector g(y.cols, 0.0);
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t k = 0; k < y.cols; ++k) g[k] += alpha[i] * y(i, k);
  return g;
}

/// Row-major flattening of Y for the concatenation baseline.
inline Vector fuse_concat_baseline(const Matrix &y) { return y.data; }

struct ClassifierTrace {
  Vector pre;
  Vector hidden;
  Vector logits;
  Vector probs;
};

inline ClassifierTrace classify_traced(std::span<const double> global, const HeadParams &head) {
  if (global.size() != head.w1.cols) throw ShapeMismatch("head input width mismatch");
  ClassifierTrace t{Vector(head.w1.rows), Vector(head.w1.rows), Vector(head.w2.rows), {}};
  detail::affine(head.w1, head.b1, global, t.pre);
  for (std::size_t k = 0; k < t.pre.size(); ++k) t.hidden[k] = t.pre[k] > 0.0 ? t.pre[k] : 0.0;
  detail::affine(head.w2, head.b2, t.hidden, t.logits);
  t.probs = softmax(t.logits);
  return t;
}

/// p = softmax(L2(relu(L1(global)))).
inline Vector classify(std::span<const double> global, const HeadParams &head) {
  return classify_traced(global, head).probs;
}

/// Everything the forward fusion pass produced for one clip.
struct FusionState {
  FusionMode mode = FusionMode::Attention;
  std::size_t modalities = 0;
  Matrix y;
  Vector scores;
  Vector alpha;
  Vector global;
  ClassifierTrace head;
};

inline FusionState fusion_forward(const std::vector<std::vector<Vector>> &features,
                                  const HeadParams &head, FusionMode mode) {
  FusionState s;
  s.mode = mode;
  s.modalities = features.size();
  s.y = concat_segments(features);
  if (mode == FusionMode::Attention) {
    auto a = attention(s.y, head.w_att);
    s.scores = std::move(a.scores);
    s.alpha = std::move(a.alpha);
    s.global = fuse(s.y, s.alpha);
  } else {
    s.global = fuse_concat_baseline(s.y);
  }
  s.head = classify_traced(s.global, head);
  return s;
}

struct FusionGradients {
  HeadParams head;
  Matrix y;
};

/// Propagates d(loss)/d(logits) back to the head, W_att, and every row of Y.
/// Head gradients are accumulated into `grads.head`; `grads.y` is overwritten.
inline void fusion_backward_into(const FusionState &state, const HeadParams &head,
                                 std::span<const double> d_logits, FusionGradients &grads) {
  if (d_logits.size() != head.w2.rows) throw ShapeMismatch("logit gradient width mismatch");
  const auto &t = state.head;
  const std::size_t hidden = head.w1.rows, in = head.w1.cols, classes = head.w2.rows;

  Vector d_pre(hidden, 0.0);
  for (std::size_t c = 0; c < classes; ++c) {
    const double g = d_logits[c];
    grads.head.b2[c] += g;
    for (std::size_t k = 0; k < hidden; ++k) {
      grads.head.w2(c, k) += g * t.hidden[k];
      d_pre[k] += g * head.w2(c, k);
    }
  }
  Vector d_global(in, 0.0);
  for (std::size_t k = 0; k < hidden; ++k) {
    if (!(t.pre[k] > 0.0)) continue;
    grads.head.b1[k] += d_pre[k];
    for (std::size_t c = 0; c < in; ++c) {
      grads.head.w1(k, c) += d_pre[k] * state.global[c];
      d_global[c] += d_pre[k] * head.w1(k, c);
    }
  }

  const Matrix &y = state.y;
  grads.y = Matrix(y.rows, y.cols);
  if (state.mode == FusionMode::Concat) {
    grads.y.data = d_global;
    return;
  }
  // global = Σ alpha_i Y_i, alpha = softmax(W_att·Y_i).
  Vector d_alpha(y.rows, 0.0);
  for (std::size_t i = 0; i < y.rows; ++i)
    for (std::size_t k = 0; k < y.cols; ++k) {
      grads.y(i, k) += state.alpha[i] * d_global[k];
      d_alpha[i] += d_global[k] * y(i, k);
    }
  double mean = 0.0;
  for (std::size_t i = 0; i < y.rows; ++i) mean += state.alpha[i] * d_alpha[i];
  for (std::size_t i = 0; i < y.rows; ++i) {
    const double d_score = state.alpha[i] * (d_alpha[i] - mean);
    for (std::size_t k = 0; k < y.cols; ++k) {
      grads.head.w_att[k] += d_score * y(i, k);
      grads.y(i, k) += d_score * head.w_att[k];
    }
  }
}

inline FusionGradients fusion_backward(const FusionState &state, const HeadParams &head,
                                       std::span<const double> d_logits) {
  FusionGradients g{HeadParams::zeros(head.w_att.size(), head.w1.cols, head.w1.rows, head.w2.rows),
                    {}};
  fusion_backward_into(state, head, d_logits, g);
  return g;
}

/// -log softmax(logits)[label], evaluated through log-sum-exp.
inline double cross_entropy(std::span<const double> logits, std::size_t label) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  return top + std::log(sum) - logits[label];
}

/// d(-log softmax(z)[label])/dz = p - onehot(label), scaled.
inline Vector cross_entropy_grad(std::span<const double> probs, std::size_t label, double scale = 1.0) {
  Vector g(probs.begin(), probs.end());
  g[label] -= 1.0;
  for (auto &v : g) v *= scale;
  return g;
}

}  // namespace mmtsa
