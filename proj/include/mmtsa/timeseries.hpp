// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mmtsa/error.hpp"

namespace mmtsa {

/// Timestamped multi-axis sensor samples. Construct through make_series or
/// load_csv so the invariants are checked.
struct SensorSeries {
  std::vector<double> timestamps;
  std::vector<std::vector<double>> channels;
  std::vector<std::string> axis_names;
  std::string sensor_id;

  std::size_t size() const { return timestamps.size(); }
  std::size_t axes() const { return channels.size(); }
  double duration() const { return timestamps.back() - timestamps.front(); }
};

/// Per-axis values mapped onto [-1, 1], with the source range kept.
struct RescaledSeries {
  std::vector<std::vector<double>> values;
  std::vector<double> source_min;
  std::vector<double> source_max;
  std::vector<double> timestamps;
  std::vector<std::string> axis_names;

  std::size_t size() const { return timestamps.size(); }
  std::size_t axes() const { return values.size(); }
};

/// What to do with an axis whose samples are all identical.
enum class ConstantPolicy { Error, Zero };

/// CSV column layout. An empty axis list means "every column after the
/// timestamp column".
struct ColumnSchema {
  std::string timestamp_column = "t";
  std::vector<std::string> axis_columns;
  double seconds_per_unit = 1.0;
};

/// Validates and wraps raw arrays. `row` numbers in errors are 1-based data
/// rows (the header is row 0).
inline SensorSeries make_series(std::vector<double> timestamps,
                                std::vector<std::vector<double>> channels,
                                std::vector<std::string> axis_names = {},
                                std::string sensor_id = {}) {
  const std::size_t n = timestamps.size();
  if (n < 2) throw TooFewSamples(n);
  if (channels.empty()) throw ShapeMismatch("series has no axes");
  for (const auto &c : channels)
    if (c.size() != n) throw ShapeMismatch("axis length differs from timestamp count");
  for (std::size_t i = 1; i < n; ++i)
    if (!(timestamps[i] > timestamps[i - 1])) throw NonMonotoneTimestamp(i + 1);
  if (axis_names.empty()) {
    static constexpr const char *kDefault[] = {"x", "y", "z"};
    for (std::size_t a = 0; a < channels.size(); ++a)
      axis_names.push_back(a < 3 ? kDefault[a] : "a" + std::to_string(a));
  }
  if (axis_names.size() != channels.size()) throw ShapeMismatch("axis name count mismatch");
  return SensorSeries{std::move(timestamps), std::move(channels), std::move(axis_names),
                      std::move(sensor_id)};
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto &c : cells) {
    while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) c.remove_prefix(1);
    while (!c.empty() && (c.back() == ' ' || c.back() == '\t' || c.back() == '\r'))
      c.remove_suffix(1);
  }
  return cells;
}

inline bool parse_double(std::string_view s, double &out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses CSV text (header row, then numeric rows).
inline SensorSeries parse_csv(std::string_view text, const ColumnSchema &schema = {},
                              std::string sensor_id = {}) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find('\n', start);
    auto line = text.substr(start, pos == std::string_view::npos ? pos : pos - start);
    lines.push_back(line);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  while (!lines.empty() && detail::split_csv_line(lines.back()) ==
                               std::vector<std::string_view>{std::string_view{}})
    lines.pop_back();
  if (lines.empty()) throw FormatError("empty CSV");

  auto header = detail::split_csv_line(lines[0]);
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].remove_prefix(3);
  auto column_of = [&](std::string_view name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError("CSV header lacks column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t t_col = column_of(schema.timestamp_column);
  std::vector<std::size_t> axis_cols;
  std::vector<std::string> axis_names;
  if (schema.axis_columns.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (c != t_col) {
        axis_cols.push_back(c);
        axis_names.emplace_back(header[c]);
      }
  } else {
    for (const auto &name : schema.axis_columns) {
      axis_cols.push_back(column_of(name));
      axis_names.push_back(name);
    }
  }
  if (axis_cols.empty()) throw FormatError("CSV has no axis columns");

  std::vector<double> t;
  std::vector<std::vector<double>> channels(axis_cols.size());
  for (std::size_t r = 1; r < lines.size(); ++r) {
    auto cells = detail::split_csv_line(lines[r]);
    if (cells.size() != header.size())
      throw MalformedRow(r, "expected " + std::to_string(header.size()) + " cells, got " +
                                std::to_string(cells.size()));
    double v;
    if (!detail::parse_double(cells[t_col], v)) throw MalformedRow(r, "bad timestamp");
    v *= schema.seconds_per_unit;
    if (!t.empty() && !(v > t.back())) throw NonMonotoneTimestamp(r);
    t.push_back(v);
    for (std::size_t a = 0; a < axis_cols.size(); ++a) {
      if (!detail::parse_double(cells[axis_cols[a]], v))
        throw MalformedRow(r, "bad value in column '" + axis_names[a] + "'");
      channels[a].push_back(v);
    }
  }
  return make_series(std::move(t), std::move(channels), std::move(axis_names),
                     std::move(sensor_id));
}

inline SensorSeries load_csv(const std::string &path, const ColumnSchema &schema = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string id = path;
  if (auto slash = id.find_last_of('/'); slash != std::string::npos) id = id.substr(slash + 1);
  if (auto dot = id.rfind('.'); dot != std::string::npos) id = id.substr(0, dot);
  return parse_csv(buf.str(), schema, id);
}

/// Writes the series with 17 significant digits so values re-parse exactly.
inline void write_csv(const SensorSeries &series, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "t";
  for (const auto &name : series.axis_names) out << ',' << name;
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << series.timestamps[i];
    for (const auto &c : series.channels) out << ',' << c[i];
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

/// Maps one axis onto [-1, 1] by (2s - max - min) / (max - min).
inline std::vector<double> rescale_values(const std::vector<double> &v, double lo, double hi) {
  std::vector<double> out(v.size());
  const double range = hi - lo;
  for (std::size_t i = 0; i < v.size(); ++i) {
    double s = (2.0 * v[i] - hi - lo) / range;
    // Endpoints are pinned so min/max land on -1/+1 exactly.
    if (v[i] == lo) s = -1.0;
    if (v[i] == hi) s = 1.0;
    out[i] = std::clamp(s, -1.0, 1.0);
  }
  return out;
}

inline RescaledSeries rescale(const SensorSeries &series,
                              ConstantPolicy policy = ConstantPolicy::Error) {
  RescaledSeries out;
  out.timestamps = series.timestamps;
  out.axis_names = series.axis_names;
  for (std::size_t a = 0; a < series.axes(); ++a) {
    const auto &c = series.channels[a];
    auto [lo_it, hi_it] = std::minmax_element(c.begin(), c.end());
    const double lo = *lo_it, hi = *hi_it;
    out.source_min.push_back(lo);
    out.source_max.push_back(hi);
    if (!(hi > lo)) {
      if (policy == ConstantPolicy::Error) throw ConstantSeries(a);
      out.values.emplace_back(c.size(), 0.0);
      continue;
    }
    out.values.push_back(rescale_values(c, lo, hi));
  }
  return out;
}

}  // namespace mmtsa
