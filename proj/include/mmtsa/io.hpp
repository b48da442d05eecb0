// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <variant>

#include "mmtsa/error.hpp"
#include "mmtsa/tensor.hpp"

namespace mmtsa {

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval 255)
// ---------------------------------------------------------------------------

inline void write_pgm(std::ostream &out, std::size_t height, std::size_t width,
                      std::span<const std::uint8_t> pixels) {
  if (pixels.size() != height * width) throw ShapeMismatch("PGM payload does not match size");
  out << "P5\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char *>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw IoError("PGM write failed");
}

inline void write_pgm(const std::string &path, std::size_t height, std::size_t width,
                      std::span<const std::uint8_t> pixels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_pgm(out, height, width, pixels);
}

/// Reads a P5 image as a height × width tensor.
inline Tensor<std::uint8_t> read_pgm(std::istream &in) {
  auto next_token = [&]() {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
      if (c == '#') {
        while ((c = in.get()) != EOF && c != '\n') {
        }
        continue;
      }
      if (std::isspace(c)) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(static_cast<char>(c));
    }
    return tok;
  };
  if (next_token() != "P5") throw FormatError("not a binary PGM (P5)");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(next_token());
    h = std::stoul(next_token());
    maxval = std::stoul(next_token());
  } catch (const std::exception &) {
    throw FormatError("bad PGM header");
  }
  if (maxval == 0 || maxval > 255) throw FormatError("only 8-bit PGM is supported");
  Tensor<std::uint8_t> img({h, w});
  in.read(reinterpret_cast<char *>(img.data.data()), static_cast<std::streamsize>(img.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.size())) throw FormatError("truncated PGM");
  return img;
}

inline Tensor<std::uint8_t> read_pgm(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_pgm(in);
}

// ---------------------------------------------------------------------------
// GAFT tensor container
//
//   "GAFT" | u32 version (=1) | u32 ndim | u8 dtype | u32 dims[ndim] | payload
//
// All integers and floats little-endian, payload row-major. dtype 0 = f32,
// 1 = u8, 2 = f64.
// ---------------------------------------------------------------------------

enum class DType : std::uint8_t { F32 = 0, U8 = 1, F64 = 2 };

using AnyTensor = std::variant<Tensor<float>, Tensor<std::uint8_t>, Tensor<double>>;

inline constexpr std::uint32_t kGaftVersion = 1;

namespace detail {

template <typename U>
void put_le(std::ostream &out, U value) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char *>(buf), sizeof(U));
}

template <typename U>
U get_le(std::istream &in) {
  unsigned char buf[sizeof(U)];
  in.read(reinterpret_cast<char *>(buf), sizeof(U));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(U))) throw FormatError("truncated GAFT");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) return DType::F32;
  else if constexpr (std::is_same_v<T, std::uint8_t>) return DType::U8;
  else return DType::F64;
}

template <typename T>
void put_value(std::ostream &out, T v) {
  if constexpr (std::is_same_v<T, std::uint8_t>) {
    out.put(static_cast<char>(v));
  } else if constexpr (std::is_same_v<T, float>) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_le(out, bits);
  } else {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_le(out, bits);
  }
}

template <typename T>
Tensor<T> read_payload(std::istream &in, Shape shape) {
  Tensor<T> t(std::move(shape));
  if constexpr (std::is_same_v<T, std::uint8_t>) {
    in.read(reinterpret_cast<char *>(t.data.data()), static_cast<std::streamsize>(t.size()));
    if (in.gcount() != static_cast<std::streamsize>(t.size())) throw FormatError("truncated GAFT");
  } else if constexpr (std::is_same_v<T, float>) {
    for (auto &v : t.data) {
      auto bits = get_le<std::uint32_t>(in);
      std::memcpy(&v, &bits, 4);
    }
  } else {
    for (auto &v : t.data) {
      auto bits = get_le<std::uint64_t>(in);
      std::memcpy(&v, &bits, 8);
    }
  }
  return t;
}

}  // namespace detail

template <typename T>
void write_gaft(std::ostream &out, const Tensor<T> &t) {
  if (t.size() != shape_size(t.shape)) throw ShapeMismatch("tensor shape/payload mismatch");
  out.write("GAFT", 4);
  detail::put_le<std::uint32_t>(out, kGaftVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  out.put(static_cast<char>(detail::dtype_of<T>()));
  for (auto d : t.shape) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (const auto &v : t.data) detail::put_value(out, v);
  if (!out) throw IoError("GAFT write failed");
}

inline void write_gaft(std::ostream &out, const AnyTensor &t) {
  std::visit([&](const auto &x) { write_gaft(out, x); }, t);
}

template <typename T>
void write_gaft(const std::string &path, const Tensor<T> &t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  write_gaft(out, t);
}

inline AnyTensor read_gaft(std::istream &in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "GAFT", 4) != 0) throw FormatError("bad GAFT magic");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != kGaftVersion) throw FormatError("unsupported GAFT version " + std::to_string(version));
  const auto ndim = detail::get_le<std::uint32_t>(in);
  if (ndim > 16) throw FormatError("implausible GAFT rank");
  const int dtype = in.get();
  Shape shape(ndim);
  for (auto &d : shape) d = detail::get_le<std::uint32_t>(in);
  switch (dtype) {
    case static_cast<int>(DType::F32): return detail::read_payload<float>(in, std::move(shape));
    case static_cast<int>(DType::U8): return detail::read_payload<std::uint8_t>(in, std::move(shape));
    case static_cast<int>(DType::F64): return detail::read_payload<double>(in, std::move(shape));
    default: throw FormatError("unknown GAFT dtype " + std::to_string(dtype));
  }
}

inline AnyTensor read_gaft(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_gaft(in);
}

/// Reads a GAFT file and requires a particular element type.
template <typename T>
Tensor<T> read_gaft_as(const std::string &path) {
  auto any = read_gaft(path);
  if (auto *t = std::get_if<Tensor<T>>(&any)) return std::move(*t);
  throw FormatError(path + ": unexpected GAFT dtype");
}

/// Converts any stored tensor to doubles; u8 values are divided by 255.
inline Tensor<double> to_unit_doubles(const AnyTensor &any) {
  return std::visit(
      [](const auto &t) {
        Tensor<double> out(t.shape);
        using T = typename std::decay_t<decltype(t.data)>::value_type;
        for (std::size_t k = 0; k < t.size(); ++k) {
          if constexpr (std::is_same_v<T, std::uint8_t>)
            out.data[k] = static_cast<double>(t.data[k]) / 255.0;
          else
            out.data[k] = static_cast<double>(t.data[k]);
        }
        return out;
      },
      any);
}

}  // namespace mmtsa
