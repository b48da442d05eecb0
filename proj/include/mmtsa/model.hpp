// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmtsa/error.hpp"
#include "mmtsa/features.hpp"
#include "mmtsa/fusion.hpp"
#include "mmtsa/rng.hpp"
#include "mmtsa/sampler.hpp"

namespace mmtsa {

struct ModalitySpec {
  std::string id;
  ModalityKind kind = ModalityKind::Gaf;
  std::size_t input_size = 0;  // flattened C·K·K (GAF) or C·H·W (frames)

  bool operator==(const ModalitySpec &) const = default;
};

struct ModelConfig {
  std::vector<ModalitySpec> modalities;
  std::size_t segments = 3;
  std::size_t window = 32;
  std::size_t feature_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t head_dim = 64;
  std::size_t classes = 2;
  FusionMode fusion = FusionMode::Attention;

  std::size_t concat_width() const { return modalities.size() * feature_dim; }
  bool operator==(const ModelConfig &) const = default;
};

/// All learnable weights. Also used, zero-initialised, as a gradient buffer.
struct ModelParams {
  ModelConfig config;
  std::vector<ExtractorParams> extractors;
  HeadParams head;

  bool operator==(const ModelParams &) const = default;
};

inline ModelParams zeros_like(const ModelParams &m) {
  ModelParams z{m.config, {}, {}};
  for (const auto &e : m.extractors)
    z.extractors.push_back(ExtractorParams::zeros(e.input_size(), e.hidden_size(), e.output_size()));
  z.head = HeadParams::zeros(m.head.w_att.size(), m.head.w1.cols, m.head.w1.rows, m.head.w2.rows);
  return z;
}

inline ModelParams init_model(const ModelConfig &config, std::uint64_t seed) {
  if (config.modalities.empty()) throw ConfigError("model needs at least one modality");
  if (config.classes < 2) throw ConfigError("model needs at least two classes");
  ModelParams m{config, {}, {}};
  const StreamKey root = StreamKey(seed).with("init");
  for (const auto &mod : config.modalities) {
    Rng rng(root.with("extractor").with(mod.id));
    m.extractors.push_back(init_extractor(mod.input_size, config.hidden_dim, config.feature_dim, rng));
  }
  Rng rng(root.with("head"));
  m.head = init_head(config.fusion, config.segments, config.concat_width(), config.head_dim,
                     config.classes, rng);
  return m;
}

/// Visits every parameter tensor with its checkpoint name, in a fixed order.
template <typename Model, typename Fn>
  requires std::is_same_v<std::remove_const_t<Model>, ModelParams>
void for_each_tensor(Model &m, Fn &&fn) {
  for (std::size_t j = 0; j < m.extractors.size(); ++j) {
    auto &e = m.extractors[j];
    const std::string p = "mod." + m.config.modalities[j].id + ".";
    fn(p + "W1", Shape{e.w1.rows, e.w1.cols}, std::span(e.w1.data));
    fn(p + "b1", Shape{e.b1.size()}, std::span(e.b1));
    fn(p + "W2", Shape{e.w2.rows, e.w2.cols}, std::span(e.w2.data));
    fn(p + "b2", Shape{e.b2.size()}, std::span(e.b2));
  }
  auto &h = m.head;
  if (!h.w_att.empty()) fn(std::string("head.W_att"), Shape{h.w_att.size()}, std::span(h.w_att));
  fn(std::string("head.W1"), Shape{h.w1.rows, h.w1.cols}, std::span(h.w1.data));
  fn(std::string("head.b1"), Shape{h.b1.size()}, std::span(h.b1));
  fn(std::string("head.W2"), Shape{h.w2.rows, h.w2.cols}, std::span(h.w2.data));
  fn(std::string("head.b2"), Shape{h.b2.size()}, std::span(h.b2));
}

inline std::size_t parameter_count(const ModelParams &m) {
  std::size_t n = 0;
  for_each_tensor(m, [&](const std::string &, const Shape &, auto values) { n += values.size(); });
  return n;
}

/// windows[m][s]: the sampled window for modality m (config order), segment s.
using ClipWindows = std::vector<std::vector<SampledWindow>>;

struct ModelTrace {
  std::vector<std::vector<ExtractorTrace>> extractors;
  FusionState fusion;
};

inline ModelTrace model_forward(const ModelParams &m, const ClipWindows &windows) {
  if (windows.size() != m.extractors.size())
    throw ShapeMismatch("clip supplies " + std::to_string(windows.size()) + " modalities, model has " +
                        std::to_string(m.extractors.size()));
  ModelTrace t;
  std::vector<std::vector<Vector>> features(windows.size());
  for (std::size_t j = 0; j < windows.size(); ++j) {
    if (windows[j].size() != m.config.segments)
      throw ShapeMismatch("modality '" + m.config.modalities[j].id + "' has wrong segment count");
    t.extractors.emplace_back();
    for (const auto &w : windows[j]) {
      t.extractors[j].push_back(extract_traced(w.tensor.data, m.extractors[j]));
      features[j].push_back(t.extractors[j].back().output);
    }
  }
  t.fusion = fusion_forward(features, m.head, m.config.fusion);
  return t;
}

/// Accumulates parameter gradients for one clip into `grads`.
inline void model_backward_into(const ModelParams &m, const ClipWindows &windows,
                                const ModelTrace &trace, std::span<const double> d_logits,
                                ModelParams &grads) {
  FusionGradients fg{std::move(grads.head), {}};
  fusion_backward_into(trace.fusion, m.head, d_logits, fg);
  grads.head = std::move(fg.head);
  const std::size_t d = m.config.feature_dim;
  for (std::size_t j = 0; j < windows.size(); ++j)
    for (std::size_t s = 0; s < windows[j].size(); ++s) {
      std::span<const double> upstream(fg.y.row(s).data() + j * d, d);
      extract_backward_into(windows[j][s].tensor.data, m.extractors[j], trace.extractors[j][s],
                            upstream, grads.extractors[j]);
    }
}

/// Cross-entropy loss and its gradient for one clip.
inline double model_loss_and_grad(const ModelParams &m, const ClipWindows &windows, std::size_t label,
                                  ModelParams &grads, double scale = 1.0) {
  auto trace = model_forward(m, windows);
  const double loss = cross_entropy(trace.fusion.head.logits, label);
  auto d_logits = cross_entropy_grad(trace.fusion.head.probs, label, scale);
  model_backward_into(m, windows, trace, d_logits, grads);
  return loss;
}

}  // namespace mmtsa
