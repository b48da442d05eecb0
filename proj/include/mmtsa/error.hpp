// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmtsa {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t row, const std::string &what)
      : Error("malformed row " + std::to_string(row) + ": " + what), row(row) {}
  std::size_t row;
};

class NonMonotoneTimestamp : public Error {
 public:
  explicit NonMonotoneTimestamp(std::size_t row)
      : Error("non-monotone timestamp at row " + std::to_string(row)), row(row) {}
  std::size_t row;
};

class TooFewSamples : public Error {
 public:
  explicit TooFewSamples(std::size_t n)
      : Error("series needs at least 2 samples, got " + std::to_string(n)), count(n) {}
  std::size_t count;
};

class ConstantSeries : public Error {
 public:
  explicit ConstantSeries(std::size_t axis)
      : Error("axis " + std::to_string(axis) + " is constant (max == min)"), axis(axis) {}
  std::size_t axis;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class SegmentTooSmall : public Error {
 public:
  SegmentTooSmall(std::string modality, std::size_t segment)
      : Error("segment " + std::to_string(segment) + " of modality '" + modality +
              "' is too small for a window"),
        modality(std::move(modality)),
        segment(segment) {}
  std::string modality;
  std::size_t segment;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mmtsa
