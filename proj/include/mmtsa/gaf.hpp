// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mmtsa/error.hpp"
#include "mmtsa/tensor.hpp"
#include "mmtsa/timeseries.hpp"

namespace mmtsa {

/// Angular encoding of a rescaled series. `values` keeps the cosines
/// (the rescaled samples) so the field can use the algebraic closed form.
struct PolarSeries {
  std::vector<std::vector<double>> phi;
  std::vector<std::vector<double>> radius;
  std::vector<std::vector<double>> values;
  std::vector<std::string> axis_names;

  std::size_t size() const { return values.empty() ? 0 : values[0].size(); }
  std::size_t axes() const { return values.size(); }
};

/// Summation field per axis: axes × n × n, entries in [-1, 1].
struct GafMatrix {
  std::size_t n = 0;
  std::vector<Matrix> data;
  std::vector<std::string> axis_names;
};

/// Quantized C×n×n grayscale image with the per-axis range used.
struct GafImage {
  Tensor<std::uint8_t> pixels;
  std::vector<double> g_min;
  std::vector<double> g_max;
  std::vector<bool> degenerate;
  std::vector<std::string> axis_names;

  std::size_t channels() const { return pixels.shape.at(0); }
  std::size_t side() const { return pixels.shape.at(1); }
  bool any_degenerate() const {
    return std::find(degenerate.begin(), degenerate.end(), true) != degenerate.end();
  }
};

inline constexpr double kDomainTolerance = 1e-12;

inline PolarSeries to_polar(const RescaledSeries &series) {
  PolarSeries out;
  out.axis_names = series.axis_names;
  const std::size_t n = series.size();
  const double t0 = series.timestamps.front();
  const double duration = series.timestamps.back() - t0;
  for (const auto &axis : series.values) {
    std::vector<double> phi(n), r(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = axis[i];
      if (!(s >= -1.0 - kDomainTolerance && s <= 1.0 + kDomainTolerance))
        throw DomainError("rescaled value " + std::to_string(s) + " outside [-1, 1]");
      s = std::clamp(s, -1.0, 1.0);
      v[i] = s;
      phi[i] = std::acos(s);
      // Radius uses time since the first sample so it spans [0, 1].
      r[i] = (series.timestamps[i] - t0) / duration;
    }
    out.phi.push_back(std::move(phi));
    out.radius.push_back(std::move(r));
    out.values.push_back(std::move(v));
  }
  return out;
}

/// G[i][j] = cos(phi_i + phi_j) = s_i s_j - sqrt(1 - s_i^2) sqrt(1 - s_j^2).
inline GafMatrix gaf_matrix(const PolarSeries &polar) {
  GafMatrix out;
  out.n = polar.size();
  out.axis_names = polar.axis_names;
  const std::size_t n = out.n;
  for (const auto &s : polar.values) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::sqrt(std::max(0.0, 1.0 - s[i] * s[i]));
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const double v = std::clamp(s[i] * s[j] - c[i] * c[j], -1.0, 1.0);
        g(i, j) = v;
        g(j, i) = v;
      }
    out.data.push_back(std::move(g));
  }
  return out;
}

/// Pixel for one entry: floor((g - lo) / (hi - lo) * 256) clamped to [0, 255].
inline std::uint8_t quantize_value(double g, double lo, double hi) {
  if (!(hi > lo)) return 0;
  const double scaled = std::floor((g - lo) / (hi - lo) * 256.0);
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

/// Quantizes each axis independently. An axis with g_max == g_min becomes
/// all zeros and is flagged in `degenerate`.
inline GafImage quantize(const GafMatrix &matrix) {
  GafImage img;
  const std::size_t n = matrix.n, axes = matrix.data.size();
  img.pixels = Tensor<std::uint8_t>({axes, n, n});
  img.axis_names = matrix.axis_names;
  for (std::size_t a = 0; a < axes; ++a) {
    const auto &d = matrix.data[a].data;
    auto [lo_it, hi_it] = std::minmax_element(d.begin(), d.end());
    const double lo = *lo_it, hi = *hi_it;
    img.g_min.push_back(lo);
    img.g_max.push_back(hi);
    img.degenerate.push_back(!(hi > lo));
    std::uint8_t *dst = img.pixels.data.data() + a * n * n;
    for (std::size_t k = 0; k < n * n; ++k) dst[k] = quantize_value(d[k], lo, hi);
  }
  return img;
}

/// rescale → to_polar → gaf_matrix → quantize over every axis.
inline GafImage encode_sensor(const SensorSeries &series,
                              ConstantPolicy policy = ConstantPolicy::Error) {
  return quantize(gaf_matrix(to_polar(rescale(series, policy))));
}

/// |s_i| from the field diagonal. The sign is not recoverable from the
/// diagonal alone, since G[i][i] = 2 s_i^2 - 1.
inline std::vector<double> diagonal_magnitudes(const Matrix &g) {
  std::vector<double> out(g.rows);
  for (std::size_t i = 0; i < g.rows; ++i) out[i] = std::sqrt(std::max(0.0, (g(i, i) + 1.0) / 2.0));
  return out;
}

}  // namespace mmtsa
