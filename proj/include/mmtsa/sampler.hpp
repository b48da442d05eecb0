// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmtsa/error.hpp"
#include "mmtsa/gaf.hpp"
#include "mmtsa/io.hpp"
#include "mmtsa/rng.hpp"
#include "mmtsa/tensor.hpp"

namespace mmtsa {

enum class ModalityKind { Gaf, Frames };

inline const char *to_string(ModalityKind k) { return k == ModalityKind::Gaf ? "gaf" : "frames"; }

/// One modality's index count (samples for a GAF stream, frames otherwise).
struct ModalityExtent {
  std::string id;
  ModalityKind kind = ModalityKind::Gaf;
  std::size_t length = 0;
};

/// Segment cut points for every modality of one clip. Boundaries are
/// half-open: segment s covers indices [b[s], b[s+1]).
struct SamplePlan {
  std::size_t num_segments = 3;
  std::size_t window_size = 32;
  std::uint64_t seed = 0;
  std::vector<ModalityExtent> modalities;
  std::vector<std::vector<std::size_t>> boundaries;

  std::size_t index_of(const std::string &id) const {
    for (std::size_t m = 0; m < modalities.size(); ++m)
      if (modalities[m].id == id) return m;
    throw ShapeMismatch("plan has no modality '" + id + "'");
  }
  const std::vector<std::size_t> &boundaries_of(const std::string &id) const {
    return boundaries[index_of(id)];
  }
};

/// b_m = round(m·n/N), half rounded up, in exact integer arithmetic.
inline std::vector<std::size_t> segment_boundaries(std::size_t n, std::size_t num_segments) {
  std::vector<std::size_t> b(num_segments + 1);
  for (std::size_t m = 0; m <= num_segments; ++m)
    b[m] = (2 * m * n + num_segments) / (2 * num_segments);
  return b;
}

inline SamplePlan make_plan(std::span<const ModalityExtent> modalities, std::size_t num_segments,
                            std::size_t window_size, std::uint64_t seed) {
  if (num_segments == 0) throw ConfigError("number of segments must be at least 1");
  if (window_size == 0) throw ConfigError("window size must be at least 1");
  SamplePlan plan;
  plan.num_segments = num_segments;
  plan.window_size = window_size;
  plan.seed = seed;
  plan.modalities.assign(modalities.begin(), modalities.end());
  for (const auto &m : modalities) {
    auto b = segment_boundaries(m.length, num_segments);
    const std::size_t need = m.kind == ModalityKind::Gaf ? window_size : 1;
    for (std::size_t s = 0; s < num_segments; ++s)
      if (b[s + 1] - b[s] < need) throw SegmentTooSmall(m.id, s);
    plan.boundaries.push_back(std::move(b));
  }
  return plan;
}

/// Stream for one (seed, modality, segment) triple.
inline Rng segment_stream(std::uint64_t seed, const std::string &modality_id, std::size_t segment) {
  return Rng(StreamKey(seed).with(modality_id).with(segment));
}

/// Window start for a GAF modality: uniform on [b_s, b_{s+1} - K].
inline std::size_t draw_window_start(const SamplePlan &plan, const std::string &modality_id,
                                     std::size_t segment) {
  const auto &b = plan.boundaries_of(modality_id);
  auto rng = segment_stream(plan.seed, modality_id, segment);
  return rng.uniform_int(b[segment], b[segment + 1] - plan.window_size);
}

/// Frame index for a frame modality: uniform on [b_s, b_{s+1} - 1].
inline std::size_t draw_frame_index(const SamplePlan &plan, const std::string &modality_id,
                                    std::size_t segment) {
  const auto &b = plan.boundaries_of(modality_id);
  auto rng = segment_stream(plan.seed, modality_id, segment);
  return rng.uniform_int(b[segment], b[segment + 1] - 1);
}

/// A sampled sub-tensor. GAF windows are C×K×K with pixels scaled to [0, 1].
struct SampledWindow {
  std::string modality_id;
  std::size_t segment_index = 0;
  std::size_t start_index = 0;
  Tensor<double> tensor;
};

/// Rows and columns start..start+K-1 of every channel, divided by 255.
inline Tensor<double> extract_diagonal_block(const GafImage &image, std::size_t start,
                                             std::size_t window) {
  const std::size_t c = image.channels(), n = image.side();
  if (start + window > n) throw ShapeMismatch("window exceeds image side");
  Tensor<double> out({c, window, window});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < window; ++i)
      for (std::size_t j = 0; j < window; ++j)
        out.at3(ch, i, j) = image.pixels.at3(ch, start + i, start + j) / 255.0;
  return out;
}

inline std::vector<SampledWindow> sample_gaf(const GafImage &image, const SamplePlan &plan,
                                             const std::string &modality_id) {
  const auto m = plan.index_of(modality_id);
  if (plan.modalities[m].kind != ModalityKind::Gaf)
    throw ShapeMismatch("modality '" + modality_id + "' is not a GAF modality");
  if (plan.modalities[m].length != image.side())
    throw ShapeMismatch("plan length " + std::to_string(plan.modalities[m].length) +
                        " does not match image side " + std::to_string(image.side()));
  std::vector<SampledWindow> out;
  for (std::size_t s = 0; s < plan.num_segments; ++s) {
    const auto start = draw_window_start(plan, modality_id, s);
    out.push_back({modality_id, s, start, extract_diagonal_block(image, start, plan.window_size)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame sequences: a directory of frame_%06d.pgm (or .gaft) plus frames.txt,
// whose first line is the frame count followed by one timestamp per line.
// ---------------------------------------------------------------------------

struct FrameSequence {
  std::filesystem::path directory;
  std::vector<double> timestamps;
  /// Optional in-memory payloads (C×H×W, values in [0, 1]); loaded from disk when empty.
  std::vector<Tensor<double>> payloads;

  std::size_t size() const { return timestamps.size(); }
};

inline std::string frame_filename(std::size_t index, const char *ext = "pgm") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.%s", index, ext);
  return buf;
}

inline Tensor<double> as_chw(Tensor<double> t) {
  if (t.rank() == 2) t.shape.insert(t.shape.begin(), 1);
  if (t.rank() != 3) throw ShapeMismatch("frame payload must be 2-D or 3-D");
  return t;
}

inline Tensor<double> load_frame(const std::filesystem::path &directory, std::size_t index) {
  const auto pgm = directory / frame_filename(index, "pgm");
  if (std::filesystem::exists(pgm)) return as_chw(to_unit_doubles(read_pgm(pgm.string())));
  const auto gaft = directory / frame_filename(index, "gaft");
  if (std::filesystem::exists(gaft)) return as_chw(to_unit_doubles(read_gaft(gaft.string())));
  throw IoError("missing frame file " + pgm.string());
}

inline FrameSequence load_frame_sequence(const std::filesystem::path &directory, bool preload = false) {
  std::ifstream in(directory / "frames.txt");
  if (!in) throw IoError("cannot open " + (directory / "frames.txt").string());
  FrameSequence seq;
  seq.directory = directory;
  std::size_t count = 0;
  if (!(in >> count)) throw FormatError("frames.txt: missing frame count");
  seq.timestamps.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    if (!(in >> seq.timestamps[i])) throw FormatError("frames.txt: missing timestamp " + std::to_string(i));
  if (preload)
    for (std::size_t i = 0; i < count; ++i) seq.payloads.push_back(load_frame(directory, i));
  return seq;
}

inline void write_frame_manifest(const std::filesystem::path &directory,
                                 std::span<const double> timestamps) {
  std::ofstream out(directory / "frames.txt", std::ios::binary);
  if (!out) throw IoError("cannot write frames.txt in " + directory.string());
  out << timestamps.size() << '\n' << std::setprecision(17);
  for (double t : timestamps) out << t << '\n';
}

inline std::vector<SampledWindow> sample_frames(const FrameSequence &frames, const SamplePlan &plan,
                                                const std::string &modality_id) {
  const auto m = plan.index_of(modality_id);
  if (plan.modalities[m].kind != ModalityKind::Frames)
    throw ShapeMismatch("modality '" + modality_id + "' is not a frame modality");
  if (plan.modalities[m].length != frames.size())
    throw ShapeMismatch("plan frame count does not match sequence");
  std::vector<SampledWindow> out;
  for (std::size_t s = 0; s < plan.num_segments; ++s) {
    const auto idx = draw_frame_index(plan, modality_id, s);
    Tensor<double> payload = frames.payloads.empty() ? load_frame(frames.directory, idx)
                                                     : frames.payloads.at(idx);
    out.push_back({modality_id, s, idx, std::move(payload)});
  }
  return out;
}

}  // namespace mmtsa
