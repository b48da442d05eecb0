// SPDX-License-Identifier: Apache-2.0
//
// Reference computations for tests. Nothing here calls into the library
// routine it is used to check.
#pragma once

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Naive triple loop y = W·x + b, W stored row-major rows×cols.
inline std::vector<double> matvec(const std::vector<double> &w, std::size_t rows, std::size_t cols,
                                  const std::vector<double> &x, const std::vector<double> &b) {
  std::vector<double> y(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    long double acc = 0.0L;
    for (std::size_t c = 0; c < cols; ++c) acc += static_cast<long double>(w[r * cols + c]) * x[c];
    y[r] = static_cast<double>(acc + b[r]);
  }
  return y;
}

inline std::vector<double> relu(std::vector<double> v) {
  for (auto &x : v) x = x > 0 ? x : 0;
  return v;
}

/// exp(z_i) / Σ exp(z_j) without any shift.
inline std::vector<double> softmax_direct(const std::vector<double> &z) {
  long double sum = 0.0L;
  for (double v : z) sum += std::exp(static_cast<long double>(v));
  std::vector<double> p;
  for (double v : z) p.push_back(static_cast<double>(std::exp(static_cast<long double>(v)) / sum));
  return p;
}

/// cos(arccos a + arccos b).
inline double gaf_trig(double a, double b) { return std::cos(std::acos(a) + std::acos(b)); }

/// Pixel by counting how many of the thresholds k = 1..255 the entry reaches:
/// (g - lo)·256 ≥ k·(hi - lo). Equivalent to floor(...·256) clamped to 255.
inline int requantize(double g, double lo, double hi) {
  if (!(hi > lo)) return 0;
  const long double num = (static_cast<long double>(g) - lo) * 256.0L;
  const long double den = static_cast<long double>(hi) - lo;
  int p = 0;
  for (int k = 1; k <= 255; ++k)
    if (num >= k * den) p = k;
  return p;
}

/// Central differences of f at x along every coordinate.
inline std::vector<double> central_difference(const std::function<double()> &f, std::vector<double *> coords,
                                              double h = 1e-6) {
  std::vector<double> g;
  for (double *x : coords) {
    const double saved = *x;
    *x = saved + h;
    const double up = f();
    *x = saved - h;
    const double down = f();
    *x = saved;
    g.push_back((up - down) / (2 * h));
  }
  return g;
}

/// ‖a - b‖ / max(‖a‖, ‖b‖), zero when both vanish.
inline double relative_error(const std::vector<double> &a, const std::vector<double> &b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0 ? 0 : std::sqrt(diff) / denom;
}

/// Upper-tail p-value of Pearson's chi-square for uniform expected counts.
inline double chi_square_uniform_p(const std::vector<std::size_t> &counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  const double expected = static_cast<double>(total) / static_cast<double>(counts.size());
  double stat = 0;
  for (auto c : counts) stat += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace oracle
