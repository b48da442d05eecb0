// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "mmtsa/dataset.hpp"
#include "mmtsa/error.hpp"
#include "mmtsa/io.hpp"
#include "mmtsa/model.hpp"

namespace mmtsa {

// A checkpoint is two files in one directory:
//   model.gaft   concatenated GAFT tensors (f64), one per parameter tensor
//   model.index  text: architecture keys, then "tensor <name> <byte offset>"

inline void save_checkpoint(const std::filesystem::path &dir, const ModelParams &m) {
  std::filesystem::create_directories(dir);
  std::ofstream blob(dir / "model.gaft", std::ios::binary);
  if (!blob) throw IoError("cannot write " + (dir / "model.gaft").string());
  std::ostringstream index;
  const auto &c = m.config;
  index << "segments = " << c.segments << '\n'
        << "window = " << c.window << '\n'
        << "feature_dim = " << c.feature_dim << '\n'
        << "hidden_dim = " << c.hidden_dim << '\n'
        << "head_dim = " << c.head_dim << '\n'
        << "classes = " << c.classes << '\n'
        << "fusion = " << to_string(c.fusion) << '\n';
  for (const auto &mod : c.modalities)
    index << "modality = " << mod.id << ' ' << to_string(mod.kind) << ' ' << mod.input_size << '\n';
  for_each_tensor(m, [&](const std::string &name, const Shape &shape, std::span<const double> values) {
    index << "tensor " << name << ' ' << static_cast<std::uint64_t>(blob.tellp()) << '\n';
    write_gaft(blob, Tensor<double>(shape, std::vector<double>(values.begin(), values.end())));
  });
  blob.close();
  if (!blob) throw IoError("write failed for " + (dir / "model.gaft").string());
  write_text_file(dir / "model.index", index.str());
}

inline ModelParams load_checkpoint(const std::filesystem::path &dir) {
  std::ifstream idx(dir / "model.index");
  if (!idx) throw IoError("cannot open " + (dir / "model.index").string());
  ModelConfig config;
  std::map<std::string, std::uint64_t> offsets;
  std::string line;
  while (std::getline(idx, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.rfind("tensor ", 0) == 0) {
      std::istringstream is(line.substr(7));
      std::string name;
      std::uint64_t off;
      if (!(is >> name >> off)) throw FormatError("model.index: bad tensor line");
      offsets[name] = off;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("model.index: bad line '" + line + "'");
    const auto key = detail::trim(line.substr(0, eq));
    const auto value = detail::trim(line.substr(eq + 1));
    if (key == "segments") config.segments = std::stoul(value);
    else if (key == "window") config.window = std::stoul(value);
    else if (key == "feature_dim") config.feature_dim = std::stoul(value);
    else if (key == "hidden_dim") config.hidden_dim = std::stoul(value);
    else if (key == "head_dim") config.head_dim = std::stoul(value);
    else if (key == "classes") config.classes = std::stoul(value);
    else if (key == "fusion") config.fusion = parse_fusion_mode(value);
    else if (key == "modality") {
      std::istringstream is(value);
      std::string id, kind;
      std::size_t input = 0;
      if (!(is >> id >> kind >> input)) throw FormatError("model.index: bad modality line");
      config.modalities.push_back({id, kind == "gaf" ? ModalityKind::Gaf : ModalityKind::Frames, input});
    } else {
      throw FormatError("model.index: unknown key '" + key + "'");
    }
  }
  ModelParams m = init_model(config, 0);
  std::ifstream blob(dir / "model.gaft", std::ios::binary);
  if (!blob) throw IoError("cannot open " + (dir / "model.gaft").string());
  for_each_tensor(m, [&](const std::string &name, const Shape &shape, std::span<double> values) {
    auto it = offsets.find(name);
    if (it == offsets.end()) throw FormatError("checkpoint lacks tensor " + name);
    blob.seekg(static_cast<std::streamoff>(it->second));
    auto any = read_gaft(blob);
    auto *t = std::get_if<Tensor<double>>(&any);
    if (!t || t->shape != shape)
      throw FormatError("checkpoint tensor " + name + " has wrong type or shape");
    std::copy(t->data.begin(), t->data.end(), values.begin());
  });
  return m;
}

}  // namespace mmtsa
