// SPDX-License-Identifier: Apache-2.0
//
// mmtsa: command-line front end for the GAF imaging, segment sampling,
// and attention-fusion training pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mmtsa/checkpoint.hpp"
#include "mmtsa/dataset.hpp"
#include "mmtsa/gaf.hpp"
#include "mmtsa/io.hpp"
#include "mmtsa/sampler.hpp"
#include "mmtsa/timeseries.hpp"
#include "mmtsa/training.hpp"

namespace fs = std::filesystem;
using namespace mmtsa;

namespace {

struct Options {
  std::vector<std::string> inputs;
  std::string out;
  std::string model;
  std::string config;
  std::string split = "val";
  std::string constant_policy = "error";
  std::string fusion;
  std::optional<std::size_t> segments;
  std::optional<std::size_t> window;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<std::size_t> epochs;
  std::size_t classes = 3;
  std::size_t clips_per_class = 40;
  bool force = false;
  bool freeze_sampling = false;
};

/// Refuses to replace an existing file unless --force was given.
void claim(const fs::path &path, bool force) {
  if (fs::exists(path) && !force)
    throw Error(path.string() + " exists; pass --force to overwrite");
}

ConstantPolicy policy_of(const Options &o) {
  return o.constant_policy == "zero" ? ConstantPolicy::Zero : ConstantPolicy::Error;
}

std::string stem_of(const std::string &path) { return fs::path(path).stem().string(); }

TrainConfig train_config(const Options &o) {
  TrainConfig c;
  if (!o.config.empty()) c = load_config(o.config, c);
  if (o.seed) c.seed = *o.seed;
  if (o.segments) c.segments = *o.segments;
  if (o.window) c.window = *o.window;
  if (o.lr) c.lr = *o.lr;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.freeze_sampling) c.freeze_sampling = true;
  if (!o.fusion.empty()) c.fusion = parse_fusion_mode(o.fusion);
  if (o.constant_policy == "zero") c.constant_policy = ConstantPolicy::Zero;
  c.validate();
  return c;
}

void write_output(const fs::path &path, const std::string &text, bool force) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  claim(path, force);
  write_text_file(path, text);
}

int run_encode(const Options &o) {
  fs::create_directories(o.out);
  for (const auto &in : o.inputs) {
    const auto series = load_csv(in);
    const auto image = encode_sensor(series, policy_of(o));
    const std::string stem = stem_of(in);
    const std::size_t n = image.side();
    for (std::size_t a = 0; a < image.channels(); ++a) {
      const fs::path p = fs::path(o.out) / (stem + "." + image.axis_names[a] + ".pgm");
      claim(p, o.force);
      write_pgm(p.string(), n, n, std::span(image.pixels.data).subspan(a * n * n, n * n));
    }
    const fs::path t = fs::path(o.out) / (stem + ".gaft");
    claim(t, o.force);
    write_gaft(t.string(), image.pixels);
    if (image.any_degenerate()) std::cerr << "warning: " << in << " has a constant GAF channel\n";
  }
  return 0;
}

int run_sample(const Options &o) {
  const std::size_t segments = o.segments.value_or(3), window = o.window.value_or(32);
  const std::uint64_t seed = o.seed.value_or(0);
  struct Source {
    std::string id;
    std::optional<GafImage> image;
    std::optional<FrameSequence> frames;
  };
  std::vector<Source> sources;
  std::vector<ModalityExtent> extents;
  for (const auto &in : o.inputs) {
    Source s{stem_of(in), {}, {}};
    if (fs::is_directory(in)) {
      s.frames = load_frame_sequence(in);
      extents.push_back({s.id, ModalityKind::Frames, s.frames->size()});
    } else {
      s.image = encode_sensor(load_csv(in), policy_of(o));
      extents.push_back({s.id, ModalityKind::Gaf, s.image->side()});
    }
    sources.push_back(std::move(s));
  }
  const auto plan = make_plan(extents, segments, window, seed);
  fs::create_directories(o.out);
  std::ostringstream manifest;
  manifest << "segments = " << segments << "\nwindow = " << window << "\nseed = " << seed << '\n';
  for (std::size_t m = 0; m < extents.size(); ++m) {
    manifest << "modality " << extents[m].id << ' ' << to_string(extents[m].kind) << ' ' << extents[m].length
             << " boundaries";
    for (auto b : plan.boundaries[m]) manifest << ' ' << b;
    manifest << '\n';
  }
  for (const auto &s : sources) {
    auto windows = s.image ? sample_gaf(*s.image, plan, s.id) : sample_frames(*s.frames, plan, s.id);
    for (const auto &w : windows) {
      const std::string name = s.id + ".seg" + std::to_string(w.segment_index) + ".gaft";
      const fs::path p = fs::path(o.out) / name;
      claim(p, o.force);
      Tensor<float> f(w.tensor.shape);
      for (std::size_t k = 0; k < f.size(); ++k) f.data[k] = static_cast<float>(w.tensor.data[k]);
      write_gaft(p.string(), f);
      manifest << "window " << s.id << ' ' << w.segment_index << ' ' << w.start_index << ' ' << name << '\n';
    }
  }
  write_output(fs::path(o.out) / "plan.txt", manifest.str(), o.force);
  return 0;
}

int run_synth(const Options &o) {
  claim(fs::path(o.out) / "labels.csv", o.force);
  SynthesisOptions opt;
  opt.clips_per_class = o.clips_per_class;
  opt.seed = o.seed.value_or(0);
  auto ds = synthesize_dataset(o.out, default_activity_specs(o.classes), opt);
  std::cout << "wrote " << ds.clips.size() << " clips to " << o.out << '\n';
  return 0;
}

int run_train(const Options &o) {
  const auto cfg = train_config(o);
  const fs::path out(o.out);
  claim(out / "model.gaft", o.force);
  claim(out / "train_log.csv", o.force);
  auto result = train(load_dataset(o.inputs.at(0)), cfg);
  save_checkpoint(out, result.model);
  write_text_file(out / "train_log.csv", format_log(result.log));
  return 0;
}

std::vector<EncodedClip> load_split(const Options &o, const ModelParams &model) {
  auto ds = load_dataset(o.inputs.at(0));
  std::vector<std::string> ids;
  for (const auto &m : model.config.modalities) ids.push_back(m.id);
  ds = select_modalities(std::move(ds), ids);
  auto clips = encode_split(ds, o.split, policy_of(o));
  if (clips.empty()) throw Error("split '" + o.split + "' is empty");
  return clips;
}

int run_eval(const Options &o) {
  const auto model = load_checkpoint(o.model);
  const auto clips = load_split(o, model);
  std::cout << format_metrics(evaluate(model, clips, o.seed.value_or(0)));
  return 0;
}

int run_ablate(const Options &o) {
  const auto cfg = train_config(o);
  const auto report = ablate_fusion(load_dataset(o.inputs.at(0)), cfg);
  write_output(o.out, format_ablation(report), o.force);
  std::cout << format_ablation(report);
  return 0;
}

int run_inspect(const Options &o) {
  const auto model = load_checkpoint(o.model);
  const auto clips = load_split(o, model);
  write_output(o.out, inspect_attention(model, clips, o.seed.value_or(0)), o.force);
  return 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multimodal GAF imaging, segment sampling, and attention fusion"};
  app.require_subcommand(1, 1);
  Options o;

  auto add_seed = [&](CLI::App *c) { c->add_option("--seed", o.seed, "Root random seed"); };
  auto add_force = [&](CLI::App *c) { c->add_flag("--force", o.force, "Overwrite existing outputs"); };
  auto add_policy = [&](CLI::App *c) {
    c->add_option("--constant-policy", o.constant_policy, "Constant-axis handling")
        ->check(CLI::IsMember({"error", "zero"}));
  };
  auto add_training = [&](CLI::App *c) {
    c->add_option("--config", o.config, "key = value config file")->check(CLI::ExistingFile);
    c->add_option("--segments", o.segments, "Number of segments N");
    c->add_option("--window", o.window, "GAF window size K");
    c->add_option("--lr", o.lr, "Learning rate");
    c->add_option("--epochs", o.epochs, "Training epochs");
    c->add_flag("--freeze-sampling", o.freeze_sampling, "Reuse epoch-0 windows every epoch");
    c->add_option("--fusion", o.fusion, "Fusion method")->check(CLI::IsMember({"attention", "concat"}));
    add_seed(c);
    add_policy(c);
    add_force(c);
  };

  auto *encode = app.add_subcommand("encode", "Encode sensor CSV files as GAF images");
  encode->add_option("--in", o.inputs, "Input CSV file(s)")->required()->check(CLI::ExistingFile);
  encode->add_option("--out", o.out, "Output directory")->required();
  add_policy(encode);
  add_force(encode);

  auto *sample = app.add_subcommand("sample", "Co-sample segment windows from one clip's modalities");
  sample->add_option("--in", o.inputs, "Sensor CSV file(s) and/or frame directories")->required()->check(CLI::ExistingPath);
  sample->add_option("--out", o.out, "Output directory")->required();
  sample->add_option("--segments", o.segments, "Number of segments N (default 3)");
  sample->add_option("--window", o.window, "GAF window size K (default 32)");
  add_seed(sample);
  add_policy(sample);
  add_force(sample);

  auto *synth = app.add_subcommand("synth", "Write a synthetic multimodal activity dataset");
  synth->add_option("--out", o.out, "Dataset directory")->required();
  synth->add_option("--classes", o.classes, "Number of classes")->check(CLI::Range(1, 6));
  synth->add_option("--clips-per-class", o.clips_per_class, "Clips per class");
  add_seed(synth);
  add_force(synth);

  auto *train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint and log");
  train_cmd->add_option("--in", o.inputs, "Dataset directory")->required()->expected(1)->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", o.out, "Checkpoint directory")->required();
  add_training(train_cmd);

  auto *eval = app.add_subcommand("eval", "Print metrics CSV for a dataset split");
  eval->add_option("--in", o.inputs, "Dataset directory")->required()->expected(1)->check(CLI::ExistingDirectory);
  eval->add_option("--model", o.model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--split", o.split, "Split name (default val)");
  add_seed(eval);
  add_policy(eval);

  auto *ablate = app.add_subcommand("ablate", "Compare attention fusion with concatenation");
  ablate->add_option("--in", o.inputs, "Dataset directory")->required()->expected(1)->check(CLI::ExistingDirectory);
  ablate->add_option("--out", o.out, "Report CSV path")->required();
  add_training(ablate);

  auto *inspect = app.add_subcommand("inspect-attention", "Write per-clip attention weights as CSV");
  inspect->add_option("--in", o.inputs, "Dataset directory")->required()->expected(1)->check(CLI::ExistingDirectory);
  inspect->add_option("--model", o.model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  inspect->add_option("--out", o.out, "Output CSV path")->required();
  inspect->add_option("--split", o.split, "Split name (default val)");
  add_seed(inspect);
  add_policy(inspect);
  add_force(inspect);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*encode) return run_encode(o);
    if (*sample) return run_sample(o);
    if (*synth) return run_synth(o);
    if (*train_cmd) return run_train(o);
    if (*eval) return run_eval(o);
    if (*ablate) return run_ablate(o);
    if (*inspect) return run_inspect(o);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
