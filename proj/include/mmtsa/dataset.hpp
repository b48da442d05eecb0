// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mmtsa/error.hpp"
#include "mmtsa/gaf.hpp"
#include "mmtsa/io.hpp"
#include "mmtsa/rng.hpp"
#include "mmtsa/sampler.hpp"
#include "mmtsa/timeseries.hpp"

namespace mmtsa {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Synthetic activities
// ---------------------------------------------------------------------------

/// Generator parameters for one activity class: a noisy sinusoid per IMU
/// axis and a drifting grating for the frame stream.
struct SyntheticActivitySpec {
  std::size_t class_id = 0;
  std::vector<double> axis_frequency_hz{1.0, 1.0, 1.0};
  std::vector<double> axis_amplitude{1.0, 0.7, 0.5};
  double phase_jitter = 2.0 * std::numbers::pi;  // phase drawn from [0, jitter) per clip and axis
  double noise_sigma = 0.1;
  double duration_s = 3.0;
  double sample_rate_hz = 50.0;
  // Frame stream.
  double frame_rate_hz = 10.0;
  std::size_t frame_size = 16;
  double grating_angle_rad = 0.0;
  double grating_cycles = 2.0;  // spatial cycles across the frame
  double grating_speed_hz = 1.0;
  double frame_noise_sigma = 0.1;
};

/// Three default classes; per-axis frequencies differ by a factor of 2 and
/// grating orientations by 60 degrees.
inline std::vector<SyntheticActivitySpec> default_activity_specs(std::size_t classes = 3) {
  std::vector<SyntheticActivitySpec> specs;
  for (std::size_t c = 0; c < classes; ++c) {
    SyntheticActivitySpec s;
    s.class_id = c;
    const double f = 0.8 * std::pow(2.0, static_cast<double>(c));
    s.axis_frequency_hz = {f, f, f};
    s.grating_angle_rad = std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
    s.grating_speed_hz = 0.5 + 0.5 * static_cast<double>(c);
    specs.push_back(s);
  }
  return specs;
}

/// Checks the class-separation invariant: on every axis, any two classes'
/// frequencies differ by at least a factor of 1.5.
inline void validate_specs(const std::vector<SyntheticActivitySpec> &specs) {
  if (specs.empty()) throw ConfigError("no activity classes");
  for (std::size_t a = 0; a < specs.size(); ++a) {
    const auto &s = specs[a];
    if (s.axis_frequency_hz.empty() || s.axis_frequency_hz.size() != s.axis_amplitude.size())
      throw ConfigError("class " + std::to_string(a) + ": axis parameter lists disagree");
    if (!(s.sample_rate_hz > 0 && s.duration_s > 0 && s.frame_rate_hz > 0 && s.frame_size > 0))
      throw ConfigError("class " + std::to_string(a) + ": non-positive rate, duration, or size");
    for (std::size_t b = a + 1; b < specs.size(); ++b) {
      const auto &o = specs[b];
      if (o.axis_frequency_hz.size() != s.axis_frequency_hz.size())
        throw ConfigError("classes disagree on axis count");
      for (std::size_t k = 0; k < s.axis_frequency_hz.size(); ++k) {
        const double lo = std::min(s.axis_frequency_hz[k], o.axis_frequency_hz[k]);
        const double hi = std::max(s.axis_frequency_hz[k], o.axis_frequency_hz[k]);
        if (!(hi >= 1.5 * lo))
          throw ConfigError("classes " + std::to_string(a) + " and " + std::to_string(b) +
                            " are closer than a factor 1.5 in frequency");
      }
    }
  }
}

inline SensorSeries synthesize_imu(const SyntheticActivitySpec &spec, Rng &rng) {
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / spec.sample_rate_hz;
  std::vector<std::vector<double>> channels;
  for (std::size_t a = 0; a < spec.axis_frequency_hz.size(); ++a) {
    const double phase = rng.uniform() * spec.phase_jitter;
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i)
      c[i] = spec.axis_amplitude[a] *
                 std::sin(2.0 * std::numbers::pi * spec.axis_frequency_hz[a] * t[i] + phase) +
             spec.noise_sigma * rng.normal();
    channels.push_back(std::move(c));
  }
  return make_series(std::move(t), std::move(channels), {}, "imu");
}

/// One frame: a grating with the class orientation, phase advancing in time.
inline Tensor<std::uint8_t> synthesize_frame(const SyntheticActivitySpec &spec, double time,
                                             double phase, Rng &rng) {
  const std::size_t s = spec.frame_size;
  Tensor<std::uint8_t> img({s, s});
  const double kx = std::cos(spec.grating_angle_rad), ky = std::sin(spec.grating_angle_rad);
  const double w = 2.0 * std::numbers::pi * spec.grating_cycles / static_cast<double>(s);
  const double drift = 2.0 * std::numbers::pi * spec.grating_speed_hz * time + phase;
  for (std::size_t r = 0; r < s; ++r)
    for (std::size_t c = 0; c < s; ++c) {
      const double v = 0.5 + 0.4 * std::sin(w * (kx * c + ky * r) + drift) +
                       spec.frame_noise_sigma * rng.normal();
      img.data[r * s + c] = static_cast<std::uint8_t>(std::clamp(std::floor(v * 255.0 + 0.5), 0.0, 255.0));
    }
  return img;
}

// ---------------------------------------------------------------------------
// On-disk layout
//
//   dataset.txt            classes = C, one "modality = <id> <gaf|frames>" per modality
//   labels.csv             clip_id,class
//   splits.csv             clip_id,split   (train | val)
//   clips/<id>/<mod>.csv   GAF modality series
//   clips/<id>/<mod>/      frame modality directory (frames.txt + frame_%06d.pgm)
// ---------------------------------------------------------------------------

struct ClipRecord {
  std::string id;
  std::size_t label = 0;
  std::string split;
};

struct DatasetModality {
  std::string id;
  ModalityKind kind = ModalityKind::Gaf;
};

struct Dataset {
  fs::path root;
  std::size_t classes = 0;
  std::vector<DatasetModality> modalities;
  std::vector<ClipRecord> clips;

  std::vector<const ClipRecord *> split(const std::string &name) const {
    std::vector<const ClipRecord *> out;
    for (const auto &c : clips)
      if (c.split == name) out.push_back(&c);
    return out;
  }
};

struct SynthesisOptions {
  std::size_t clips_per_class = 40;
  std::uint64_t seed = 0;
  std::size_t val_every = 4;  // every val_every-th clip of a class goes to the val split
  std::string imu_id = "imu";
  std::string frames_id = "cam";
};

inline void write_text_file(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string clip_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%04zu", index);
  return buf;
}

/// Writes a deterministic dataset under `root`. Each clip's draws come from
/// a stream keyed by (seed, clip index), so the tree is byte-identical for
/// equal inputs.
inline Dataset synthesize_dataset(const fs::path &root, const std::vector<SyntheticActivitySpec> &specs,
                                  const SynthesisOptions &opt) {
  validate_specs(specs);
  if (opt.clips_per_class == 0) throw ConfigError("clips_per_class must be positive");
  fs::create_directories(root / "clips");
  Dataset ds;
  ds.root = root;
  ds.classes = specs.size();
  ds.modalities = {{opt.imu_id, ModalityKind::Gaf}, {opt.frames_id, ModalityKind::Frames}};

  std::ostringstream labels, splits;
  labels << "clip_id,class\n";
  splits << "clip_id,split\n";
  std::size_t index = 0;
  for (std::size_t k = 0; k < opt.clips_per_class; ++k) {
    for (const auto &spec : specs) {
      const std::string id = clip_name(index);
      Rng rng(StreamKey(opt.seed).with("synth").with(index));
      const fs::path dir = root / "clips" / id;
      fs::create_directories(dir / opt.frames_id);
      auto imu = synthesize_imu(spec, rng);
      write_csv(imu, (dir / (opt.imu_id + ".csv")).string());

      const auto frames =
          static_cast<std::size_t>(std::llround(spec.duration_s * spec.frame_rate_hz));
      const double phase = rng.uniform() * 2.0 * std::numbers::pi;
      std::vector<double> ft(frames);
      for (std::size_t f = 0; f < frames; ++f) {
        ft[f] = static_cast<double>(f) / spec.frame_rate_hz;
        auto img = synthesize_frame(spec, ft[f], phase, rng);
        write_pgm((dir / opt.frames_id / frame_filename(f)).string(), spec.frame_size, spec.frame_size,
                  img.data);
      }
      write_frame_manifest(dir / opt.frames_id, ft);

      const std::string split = (k % opt.val_every == opt.val_every - 1) ? "val" : "train";
      labels << id << ',' << spec.class_id << '\n';
      splits << id << ',' << split << '\n';
      ds.clips.push_back({id, spec.class_id, split});
      ++index;
    }
  }
  write_text_file(root / "labels.csv", labels.str());
  write_text_file(root / "splits.csv", splits.str());
  std::ostringstream meta;
  meta << "classes = " << ds.classes << '\n';
  for (const auto &m : ds.modalities) meta << "modality = " << m.id << ' ' << to_string(m.kind) << '\n';
  write_text_file(root / "dataset.txt", meta.str());
  return ds;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Reads a two-column CSV with a header row into (first, second) pairs.
inline std::vector<std::pair<std::string, std::string>> read_pairs(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (row++ == 0) continue;
    line = trim(line);
    if (line.empty()) continue;
    auto comma = line.find(',');
    if (comma == std::string::npos) throw MalformedRow(row - 1, path.string() + ": expected two columns");
    out.emplace_back(trim(line.substr(0, comma)), trim(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace detail

inline Dataset load_dataset(const fs::path &root) {
  Dataset ds;
  ds.root = root;
  std::ifstream meta(root / "dataset.txt");
  if (!meta) throw IoError("cannot open " + (root / "dataset.txt").string());
  std::string line;
  while (std::getline(meta, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("dataset.txt: expected key = value");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "classes") {
      ds.classes = std::stoul(value);
    } else if (key == "modality") {
      std::istringstream is(value);
      std::string id, kind;
      is >> id >> kind;
      if (kind != "gaf" && kind != "frames") throw FormatError("dataset.txt: bad modality kind '" + kind + "'");
      ds.modalities.push_back({id, kind == "gaf" ? ModalityKind::Gaf : ModalityKind::Frames});
    } else {
      throw FormatError("dataset.txt: unknown key '" + key + "'");
    }
  }
  std::map<std::string, std::string> split_of;
  for (auto &[id, split] : detail::read_pairs(root / "splits.csv")) split_of[id] = split;
  for (auto &[id, label] : detail::read_pairs(root / "labels.csv")) {
    const auto cls = std::stoul(label);
    if (cls >= ds.classes) throw FormatError("labels.csv: class " + label + " out of range");
    auto it = split_of.find(id);
    ds.clips.push_back({id, cls, it == split_of.end() ? "train" : it->second});
  }
  return ds;
}

/// A clip with its GAF modalities already encoded and frames in memory.
/// Rescaling is done once per clip, before any window is drawn.
struct EncodedClip {
  std::string id;
  std::size_t label = 0;
  std::vector<DatasetModality> modalities;
  std::vector<GafImage> images;       // indexed like modalities; empty for frame modalities
  std::vector<FrameSequence> frames;  // indexed like modalities; empty for GAF modalities
  std::vector<std::vector<double>> timestamps;

  std::vector<ModalityExtent> extents() const {
    std::vector<ModalityExtent> out;
    for (std::size_t m = 0; m < modalities.size(); ++m)
      out.push_back({modalities[m].id, modalities[m].kind, timestamps[m].size()});
    return out;
  }
};

inline EncodedClip encode_clip(const Dataset &ds, const ClipRecord &clip,
                               ConstantPolicy policy = ConstantPolicy::Error) {
  EncodedClip e;
  e.id = clip.id;
  e.label = clip.label;
  e.modalities = ds.modalities;
  const fs::path dir = ds.root / "clips" / clip.id;
  for (const auto &m : ds.modalities) {
    if (m.kind == ModalityKind::Gaf) {
      auto series = load_csv((dir / (m.id + ".csv")).string());
      e.images.push_back(encode_sensor(series, policy));
      e.frames.emplace_back();
      e.timestamps.push_back(series.timestamps);
    } else {
      auto seq = load_frame_sequence(dir / m.id, true);
      e.timestamps.push_back(seq.timestamps);
      e.images.emplace_back();
      e.frames.push_back(std::move(seq));
    }
  }
  return e;
}

/// Draws one window per segment for every modality of a clip.
inline std::vector<std::vector<SampledWindow>> sample_clip(const EncodedClip &clip, std::size_t segments,
                                                           std::size_t window, std::uint64_t seed) {
  const auto extents = clip.extents();
  const auto plan = make_plan(extents, segments, window, seed);
  std::vector<std::vector<SampledWindow>> out;
  for (std::size_t m = 0; m < clip.modalities.size(); ++m) {
    if (clip.modalities[m].kind == ModalityKind::Gaf)
      out.push_back(sample_gaf(clip.images[m], plan, clip.modalities[m].id));
    else
      out.push_back(sample_frames(clip.frames[m], plan, clip.modalities[m].id));
  }
  return out;
}

}  // namespace mmtsa
