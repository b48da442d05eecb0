// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmtsa/dataset.hpp"
#include "mmtsa/error.hpp"
#include "mmtsa/model.hpp"
#include "mmtsa/rng.hpp"

namespace mmtsa {

struct TrainConfig {
  double lr = 0.001;
  double momentum = 0.9;
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  std::size_t segments = 3;
  std::size_t window = 32;
  std::size_t feature_dim = 64;
  std::size_t hidden_dim = 128;
  std::size_t head_dim = 64;
  bool freeze_sampling = false;
  FusionMode fusion = FusionMode::Attention;
  ConstantPolicy constant_policy = ConstantPolicy::Error;
  std::vector<std::string> modalities;  // empty: every modality of the dataset

  void validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (segments == 0) throw ConfigError("segments must be at least 1");
    if (window == 0) throw ConfigError("window must be at least 1");
    if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
    if (feature_dim == 0 || hidden_dim == 0 || head_dim == 0) throw ConfigError("layer widths must be positive");
  }
};

namespace detail {

inline std::size_t to_size(const std::string &key, const std::string &v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &pos);
  } catch (const std::exception &) {
    pos = 0;
  }
  if (pos != v.size() || v.empty() || v[0] == '-') throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

inline double to_real(const std::string &key, const std::string &v) {
  double x;
  if (!parse_double(v, x)) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

}  // namespace detail

/// Applies one `key = value` setting; unknown keys are errors.
inline void apply_setting(TrainConfig &c, const std::string &key, const std::string &value) {
  using namespace detail;
  if (key == "lr") c.lr = to_real(key, value);
  else if (key == "momentum") c.momentum = to_real(key, value);
  else if (key == "epochs") c.epochs = to_size(key, value);
  else if (key == "batch_size") c.batch_size = to_size(key, value);
  else if (key == "seed") c.seed = to_size(key, value);
  else if (key == "segments") c.segments = to_size(key, value);
  else if (key == "window") c.window = to_size(key, value);
  else if (key == "feature_dim") c.feature_dim = to_size(key, value);
  else if (key == "hidden_dim") c.hidden_dim = to_size(key, value);
  else if (key == "head_dim") c.head_dim = to_size(key, value);
  else if (key == "freeze_sampling") c.freeze_sampling = to_bool(key, value);
  else if (key == "fusion") c.fusion = parse_fusion_mode(value);
  else if (key == "constant_policy") {
    if (value == "error") c.constant_policy = ConstantPolicy::Error;
    else if (value == "zero") c.constant_policy = ConstantPolicy::Zero;
    else throw ConfigError("constant_policy: expected error or zero");
  } else if (key == "modalities") {
    c.modalities.clear();
    std::istringstream is(value);
    std::string id;
    while (std::getline(is, id, ',')) {
      id = trim(id);
      if (!id.empty()) c.modalities.push_back(id);
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// Parses line-based `key = value` text. Blank lines and `#` comments are skipped.
inline TrainConfig parse_config(const std::string &text, TrainConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline TrainConfig load_config(const std::filesystem::path &path, TrainConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Metrics {
  double micro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [actual][predicted]
};

/// Micro F1 from pooled counts: TP / (TP + (FP + FN) / 2).
inline Metrics score_predictions(std::span<const std::size_t> predicted, std::span<const std::size_t> actual,
                                 std::size_t classes) {
  if (predicted.empty()) throw ConfigError("cannot evaluate an empty split");
  if (predicted.size() != actual.size()) throw ShapeMismatch("prediction/label count mismatch");
  Metrics m;
  m.count = predicted.size();
  m.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= classes || actual[i] >= classes) throw ShapeMismatch("class index out of range");
    ++m.confusion[actual[i]][predicted[i]];
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    tp += m.confusion[c][c];
    for (std::size_t o = 0; o < classes; ++o)
      if (o != c) {
        fp += m.confusion[o][c];
        fn += m.confusion[c][o];
      }
  }
  m.micro_f1 = static_cast<double>(tp) / (static_cast<double>(tp) + 0.5 * static_cast<double>(fp + fn));
  m.accuracy = static_cast<double>(tp) / static_cast<double>(m.count);
  return m;
}

inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochLog> log;
};

/// Seed of the window plan for a clip. With frozen sampling every epoch
/// reuses the epoch-0 plan.
inline std::uint64_t sampling_seed(std::uint64_t seed, std::size_t epoch, const std::string &clip_id) {
  return StreamKey(seed).with("sample").with(epoch).with(clip_id).value();
}

inline std::uint64_t eval_seed(std::uint64_t seed, const std::string &clip_id) {
  return StreamKey(seed).with("eval").with(clip_id).value();
}

/// Keeps only the configured modalities, in config order.
inline Dataset select_modalities(Dataset ds, const std::vector<std::string> &ids) {
  if (ids.empty()) return ds;
  std::vector<DatasetModality> chosen;
  for (const auto &id : ids) {
    auto it = std::find_if(ds.modalities.begin(), ds.modalities.end(), [&](const auto &m) { return m.id == id; });
    if (it == ds.modalities.end()) throw ConfigError("dataset has no modality '" + id + "'");
    chosen.push_back(*it);
  }
  ds.modalities = std::move(chosen);
  return ds;
}

inline std::vector<EncodedClip> encode_split(const Dataset &ds, const std::string &split, ConstantPolicy policy) {
  std::vector<EncodedClip> out;
  for (const auto *c : ds.split(split)) out.push_back(encode_clip(ds, *c, policy));
  return out;
}

/// Model shape implied by a clip's modalities and the config.
inline ModelConfig model_config_for(const EncodedClip &clip, const TrainConfig &cfg, std::size_t classes) {
  ModelConfig mc;
  mc.segments = cfg.segments;
  mc.window = cfg.window;
  mc.feature_dim = cfg.feature_dim;
  mc.hidden_dim = cfg.hidden_dim;
  mc.head_dim = cfg.head_dim;
  mc.classes = classes;
  mc.fusion = cfg.fusion;
  for (std::size_t m = 0; m < clip.modalities.size(); ++m) {
    std::size_t input;
    if (clip.modalities[m].kind == ModalityKind::Gaf) {
      input = clip.images[m].channels() * cfg.window * cfg.window;
    } else {
      const auto &f = clip.frames[m];
      if (f.payloads.empty()) throw ShapeMismatch("frame modality has no frames");
      input = f.payloads[0].size();
    }
    mc.modalities.push_back({clip.modalities[m].id, clip.modalities[m].kind, input});
  }
  return mc;
}

/// One SGD-with-momentum step: v ← μ·v + g, θ ← θ − lr·v.
inline void sgd_momentum_step(ModelParams &params, ModelParams &velocity, const ModelParams &grads, double lr,
                              double momentum) {
  std::vector<std::span<double>> p, v;
  std::vector<std::span<const double>> g;
  for_each_tensor(params, [&](const std::string &, const Shape &, std::span<double> x) { p.push_back(x); });
  for_each_tensor(velocity, [&](const std::string &, const Shape &, std::span<double> x) { v.push_back(x); });
  for_each_tensor(grads, [&](const std::string &, const Shape &, std::span<const double> x) { g.push_back(x); });
  for (std::size_t t = 0; t < p.size(); ++t)
    for (std::size_t k = 0; k < p[t].size(); ++k) {
      v[t][k] = momentum * v[t][k] + g[t][k];
      p[t][k] -= lr * v[t][k];
    }
}

inline void zero_fill(ModelParams &m) {
  for_each_tensor(m, [](const std::string &, const Shape &, std::span<double> x) {
    std::fill(x.begin(), x.end(), 0.0);
  });
}

inline std::vector<std::size_t> predict(const ModelParams &model, std::span<const EncodedClip> clips,
                                        std::uint64_t seed, std::vector<Vector> *alphas = nullptr) {
  std::vector<std::size_t> out;
  for (const auto &clip : clips) {
    auto windows = sample_clip(clip, model.config.segments, model.config.window, eval_seed(seed, clip.id));
    auto trace = model_forward(model, windows);
    out.push_back(argmax(trace.fusion.head.probs));
    if (alphas) alphas->push_back(trace.fusion.alpha);
  }
  return out;
}

inline Metrics evaluate(const ModelParams &model, std::span<const EncodedClip> clips, std::uint64_t seed) {
  if (clips.empty()) throw ConfigError("cannot evaluate an empty split");
  auto predicted = predict(model, clips, seed);
  std::vector<std::size_t> actual;
  for (const auto &c : clips) actual.push_back(c.label);
  return score_predictions(predicted, actual, model.config.classes);
}

/// Called after every epoch; return false to stop early.
using EpochCallback = std::function<bool(const EpochLog &, const ModelParams &)>;

/// Mini-batch SGD with momentum on cross-entropy (mean over the batch).
/// Windows are redrawn every epoch unless sampling is frozen. The loop is
/// single-threaded, so equal inputs give bitwise-equal results.
inline TrainResult train_model(ModelParams init, std::span<const EncodedClip> train_set,
                               std::span<const EncodedClip> val_set, const TrainConfig &cfg,
                               const EpochCallback &on_epoch = {}) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("training split is empty");
  TrainResult result{std::move(init), {}};
  ModelParams &model = result.model;
  ModelParams velocity = zeros_like(model);
  ModelParams grads = zeros_like(model);
  std::vector<std::size_t> order(train_set.size());
  const std::size_t window = model.config.window, segments = model.config.segments;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(StreamKey(cfg.seed).with("shuffle").with(epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.uniform_int(0, i - 1)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      zero_fill(grads);
      for (std::size_t b = start; b < end; ++b) {
        const auto &clip = train_set[order[b]];
        const auto windows =
            sample_clip(clip, segments, window, sampling_seed(cfg.seed, cfg.freeze_sampling ? 0 : epoch, clip.id));
        auto trace = model_forward(model, windows);
        const double loss = cross_entropy(trace.fusion.head.logits, clip.label);
        if (!std::isfinite(loss))
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", clip " + clip.id);
        loss_sum += loss;
        if (argmax(trace.fusion.head.probs) == clip.label) ++correct;
        auto d_logits = cross_entropy_grad(trace.fusion.head.probs, clip.label, scale);
        model_backward_into(model, windows, trace, d_logits, grads);
      }
      sgd_momentum_step(model, velocity, grads, cfg.lr, cfg.momentum);
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(train_set.size()),
                   static_cast<double>(correct) / static_cast<double>(train_set.size()),
                   val_set.empty() ? 0.0 : evaluate(model, val_set, cfg.seed).accuracy};
    result.log.push_back(entry);
    if (on_epoch && !on_epoch(entry, model)) break;
  }
  return result;
}

/// Training inputs prepared from a dataset on disk.
struct PreparedData {
  Dataset dataset;
  std::vector<EncodedClip> train;
  std::vector<EncodedClip> val;
};

inline PreparedData prepare(const Dataset &ds, const TrainConfig &cfg) {
  PreparedData p{select_modalities(ds, cfg.modalities), {}, {}};
  p.train = encode_split(p.dataset, "train", cfg.constant_policy);
  p.val = encode_split(p.dataset, "val", cfg.constant_policy);
  if (p.train.empty()) throw ConfigError("dataset has no training clips");
  return p;
}

inline ModelParams initial_model(const PreparedData &data, const TrainConfig &cfg) {
  return init_model(model_config_for(data.train.front(), cfg, data.dataset.classes), cfg.seed);
}

inline TrainResult train(const Dataset &ds, const TrainConfig &cfg, const EpochCallback &on_epoch = {}) {
  cfg.validate();
  auto data = prepare(ds, cfg);
  return train_model(initial_model(data, cfg), data.train, data.val, cfg, on_epoch);
}

inline std::string format_log(const std::vector<EpochLog> &log) {
  std::ostringstream out;
  out << "epoch,loss,train_acc,val_acc\n" << std::setprecision(17);
  for (const auto &e : log) out << e.epoch << ',' << e.loss << ',' << e.train_acc << ',' << e.val_acc << '\n';
  return out.str();
}

inline std::string format_metrics(const Metrics &m) {
  std::ostringstream out;
  out << std::setprecision(17) << "metric,value\n"
      << "micro_f1," << m.micro_f1 << '\n'
      << "accuracy," << m.accuracy << '\n'
      << "count," << m.count << '\n';
  for (std::size_t r = 0; r < m.confusion.size(); ++r) {
    out << "confusion_" << r;
    for (auto v : m.confusion[r]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Fusion ablation
// ---------------------------------------------------------------------------

struct AblationReport {
  Metrics attention;
  Metrics concat;
  double delta_f1 = 0.0;  // attention minus concat, in F1 points (×100)
  bool equivalent_arms = false;
  std::size_t attention_params = 0;
  std::size_t concat_params = 0;
};

/// Trains both fusion arms on the same splits, seeds, and budget. With one
/// segment both arms compute the same function up to head shape.
inline AblationReport ablate_fusion(const Dataset &ds, TrainConfig cfg) {
  cfg.validate();
  auto data = prepare(ds, cfg);
  if (data.val.empty()) throw ConfigError("ablation needs a val split");
  AblationReport r;
  for (auto mode : {FusionMode::Attention, FusionMode::Concat}) {
    cfg.fusion = mode;
    auto result = train_model(initial_model(data, cfg), data.train, data.val, cfg);
    auto metrics = evaluate(result.model, data.val, cfg.seed);
    (mode == FusionMode::Attention ? r.attention : r.concat) = metrics;
    (mode == FusionMode::Attention ? r.attention_params : r.concat_params) = parameter_count(result.model);
  }
  r.delta_f1 = 100.0 * (r.attention.micro_f1 - r.concat.micro_f1);
  r.equivalent_arms = cfg.segments == 1;
  return r;
}

inline std::string format_ablation(const AblationReport &r) {
  std::ostringstream out;
  out << std::setprecision(17) << "fusion,micro_f1,accuracy,parameters\n"
      << "attention," << r.attention.micro_f1 << ',' << r.attention.accuracy << ',' << r.attention_params << '\n'
      << "concat," << r.concat.micro_f1 << ',' << r.concat.accuracy << ',' << r.concat_params << '\n'
      << "delta_f1_points," << r.delta_f1 << "\n"
      << "equivalent_arms," << (r.equivalent_arms ? "true" : "false") << '\n'
      << "reference_delta_f1_points_mmact,3.39\n";
  return out.str();
}

/// Per-clip attention weights, prediction, and label as CSV lines.
inline std::string inspect_attention(const ModelParams &model, std::span<const EncodedClip> clips,
                                     std::uint64_t seed) {
  if (model.config.fusion != FusionMode::Attention)
    throw ConfigError("inspect-attention needs an attention-fusion model");
  std::vector<Vector> alphas;
  auto predicted = predict(model, clips, seed, &alphas);
  std::ostringstream out;
  out << std::setprecision(17) << "clip_id";
  for (std::size_t s = 0; s < model.config.segments; ++s) out << ",alpha_" << s;
  out << ",predicted,actual\n";
  for (std::size_t i = 0; i < clips.size(); ++i) {
    out << clips[i].id;
    for (double a : alphas[i]) out << ',' << a;
    out << ',' << predicted[i] << ',' << clips[i].label << '\n';
  }
  return out.str();
}

}  // namespace mmtsa
