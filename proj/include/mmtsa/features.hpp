// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <concepts>
#include <span>
#include <string>
#include <vector>

#include "mmtsa/error.hpp"
#include "mmtsa/rng.hpp"
#include "mmtsa/tensor.hpp"

namespace mmtsa {

/// Per-modality extractor y = W2·relu(W1·x + b1) + b2. One instance is
/// shared by all segments of its modality. The same struct doubles as the
/// gradient buffer.
struct ExtractorParams {
  Matrix w1;  // hidden × input
  Vector b1;
  Matrix w2;  // output × hidden
  Vector b2;

  std::size_t input_size() const { return w1.cols; }
  std::size_t hidden_size() const { return w1.rows; }
  std::size_t output_size() const { return w2.rows; }

  static ExtractorParams zeros(std::size_t input, std::size_t hidden, std::size_t output) {
    return {Matrix(hidden, input), Vector(hidden, 0.0), Matrix(output, hidden), Vector(output, 0.0)};
  }

  bool operator==(const ExtractorParams &) const = default;
};

/// Uniform on ±sqrt(6 / (fan_in + fan_out)).
inline void glorot_uniform(Matrix &w, Rng &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
  for (auto &v : w.data) v = rng.uniform(-limit, limit);
}

inline ExtractorParams init_extractor(std::size_t input, std::size_t hidden, std::size_t output,
                                      Rng &rng) {
  auto p = ExtractorParams::zeros(input, hidden, output);
  glorot_uniform(p.w1, rng);
  glorot_uniform(p.w2, rng);
  return p;
}

namespace detail {

inline void affine(const Matrix &w, std::span<const double> b, std::span<const double> x,
                   std::span<double> out) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double *row = w.data.data() + r * w.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    out[r] = acc + b[r];
  }
}

}  // namespace detail

/// Forward pass keeping the hidden pre-activation for the backward pass.
struct ExtractorTrace {
  Vector pre;     // W1·x + b1
  Vector hidden;  // relu(pre)
  Vector output;
};

inline ExtractorTrace extract_traced(std::span<const double> x, const ExtractorParams &p) {
  if (x.size() != p.input_size())
    throw ShapeMismatch("extractor expects input of " + std::to_string(p.input_size()) +
                        " values, got " + std::to_string(x.size()));
  ExtractorTrace t{Vector(p.hidden_size()), Vector(p.hidden_size()), Vector(p.output_size())};
  detail::affine(p.w1, p.b1, x, t.pre);
  for (std::size_t k = 0; k < t.pre.size(); ++k) t.hidden[k] = t.pre[k] > 0.0 ? t.pre[k] : 0.0;
  detail::affine(p.w2, p.b2, t.hidden, t.output);
  return t;
}

inline Vector extract(std::span<const double> x, const ExtractorParams &p) {
  return extract_traced(x, p).output;
}

/// Accumulates d(loss)/d(params) into `grads` given the upstream cotangent.
/// Writes d(loss)/dx into `input_grad` when it is non-empty.
inline void extract_backward_into(std::span<const double> x, const ExtractorParams &p,
                                  const ExtractorTrace &trace, std::span<const double> upstream,
                                  ExtractorParams &grads, std::span<double> input_grad = {}) {
  if (upstream.size() != p.output_size()) throw ShapeMismatch("upstream gradient width mismatch");
  if (x.size() != p.input_size()) throw ShapeMismatch("extractor input width mismatch");
  const std::size_t h = p.hidden_size(), in = p.input_size(), out = p.output_size();
  Vector d_pre(h, 0.0);
  for (std::size_t o = 0; o < out; ++o) {
    const double g = upstream[o];
    grads.b2[o] += g;
    if (g == 0.0) continue;
    double *gw2 = grads.w2.data.data() + o * h;
    const double *w2 = p.w2.data.data() + o * h;
    for (std::size_t k = 0; k < h; ++k) {
      gw2[k] += g * trace.hidden[k];
      d_pre[k] += g * w2[k];
    }
  }
  for (std::size_t k = 0; k < h; ++k) {
    if (!(trace.pre[k] > 0.0)) d_pre[k] = 0.0;
    grads.b1[k] += d_pre[k];
    if (d_pre[k] == 0.0) continue;
    double *gw1 = grads.w1.data.data() + k * in;
    for (std::size_t c = 0; c < in; ++c) gw1[c] += d_pre[k] * x[c];
  }
  if (!input_grad.empty()) {
    if (input_grad.size() != in) throw ShapeMismatch("input gradient buffer width mismatch");
    std::fill(input_grad.begin(), input_grad.end(), 0.0);
    for (std::size_t k = 0; k < h; ++k) {
      if (d_pre[k] == 0.0) continue;
      const double *w1 = p.w1.data.data() + k * in;
      for (std::size_t c = 0; c < in; ++c) input_grad[c] += d_pre[k] * w1[c];
    }
  }
}

struct ExtractorGradients {
  ExtractorParams params;
  Vector input;
};

inline ExtractorGradients extract_backward(std::span<const double> x, const ExtractorParams &p,
                                           std::span<const double> upstream) {
  auto trace = extract_traced(x, p);
  ExtractorGradients g{ExtractorParams::zeros(p.input_size(), p.hidden_size(), p.output_size()),
                       Vector(p.input_size(), 0.0)};
  extract_backward_into(x, p, trace, upstream, g.params, g.input);
  return g;
}

/// What the fusion and training code needs from a per-modality extractor.
/// A convolutional variant only has to provide the same operations.
template <typename P>
concept FeatureExtractorParams = requires(const P &p, std::span<const double> x) {
  { p.input_size() } -> std::convertible_to<std::size_t>;
  { p.output_size() } -> std::convertible_to<std::size_t>;
  { extract(x, p) } -> std::convertible_to<Vector>;
};

static_assert(FeatureExtractorParams<ExtractorParams>);

}  // namespace mmtsa
