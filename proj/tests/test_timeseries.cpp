// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mmtsa/timeseries.hpp"

using namespace mmtsa;

TEST(LoadCsv, MinimalInput) {
  auto s = parse_csv("t,x\n0.0,1.0\n0.01,2.0");
  EXPECT_EQ(s.size(), 2u);
  ASSERT_EQ(s.axes(), 1u);
  EXPECT_EQ(s.channels[0], (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(s.axis_names[0], "x");
}

TEST(LoadCsv, DecreasingTimestampReportsRow) {
  std::string text = "t,x\n0.0,1\n0.1,1\n0.2,1\n0.3,1\n0.25,1\n0.5,1\n";
  try {
    parse_csv(text);
    FAIL() << "expected NonMonotoneTimestamp";
  } catch (const NonMonotoneTimestamp &e) {
    EXPECT_EQ(e.row, 5u);
  }
}

TEST(LoadCsv, ErrorPaths) {
  EXPECT_THROW(parse_csv("t,x\n0.0,1.0\n"), TooFewSamples);
  EXPECT_THROW(parse_csv("t,x\n0.0,1.0\n0.1,abc\n"), MalformedRow);
  EXPECT_THROW(parse_csv("t,x\n0.0,1.0\n0.1\n"), MalformedRow);
  EXPECT_THROW(parse_csv("t,x\n0.0,1.0\n0.1,\n"), MalformedRow);
  EXPECT_THROW(parse_csv("time,x\n0.0,1.0\n0.1,2\n"), FormatError);
  EXPECT_THROW(parse_csv("t,x\n0.0,1\n0.0,2\n"), NonMonotoneTimestamp);
  EXPECT_THROW(load_csv("/nonexistent/file.csv"), IoError);
  try {
    parse_csv("t,x\n0,1\n1,2\n2,oops\n");
  } catch (const MalformedRow &e) {
    EXPECT_EQ(e.row, 3u);
  }
}

TEST(LoadCsv, SchemaSelectsAndScales) {
  ColumnSchema schema;
  schema.timestamp_column = "ms";
  schema.axis_columns = {"z", "x"};
  schema.seconds_per_unit = 1e-3;
  auto s = parse_csv("x,ms,z\r\n1,0,10\r\n2,20,20\r\n", schema);
  EXPECT_DOUBLE_EQ(s.timestamps[1], 0.02);
  EXPECT_EQ(s.axis_names, (std::vector<std::string>{"z", "x"}));
  EXPECT_EQ(s.channels[0], (std::vector<double>{10, 20}));
}

TEST(LoadCsv, HundredHertzFileDuration) {
  const auto path = std::filesystem::temp_directory_path() / "mmtsa_100hz.csv";
  {
    std::ofstream out(path);
    out << "t,x,y,z\n";
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 100; ++i) out << i / 100.0 << ',' << nd(gen) << ',' << nd(gen) << ',' << nd(gen) << '\n';
  }
  auto s = load_csv(path.string());
  EXPECT_EQ(s.size(), 100u);
  EXPECT_EQ(s.axes(), 3u);
  EXPECT_NEAR(s.duration(), (100 - 1) / 100.0, 1e-12);
  EXPECT_EQ(s.sensor_id, "mmtsa_100hz");
  std::filesystem::remove(path);
}

TEST(LoadCsv, WriteReadIsExact) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::vector<double> t, x, y;
  for (int i = 0; i < 40; ++i) {
    t.push_back(i * 0.013 + 0.001);
    x.push_back(u(gen));
    y.push_back(u(gen));
  }
  auto s = make_series(t, {x, y});
  const auto path = std::filesystem::temp_directory_path() / "mmtsa_rt.csv";
  write_csv(s, path.string());
  auto back = load_csv(path.string());
  EXPECT_EQ(back.timestamps, s.timestamps);
  EXPECT_EQ(back.channels, s.channels);
  std::filesystem::remove(path);
}

TEST(Rescale, Examples) {
  auto r = rescale(make_series({0, 1, 2}, {{0, 5, 10}}));
  EXPECT_EQ(r.values[0], (std::vector<double>{-1, 0, 1}));
  EXPECT_EQ(r.source_min[0], 0);
  EXPECT_EQ(r.source_max[0], 10);
  auto id = rescale(make_series({0, 1}, {{-1, 1}}));
  EXPECT_EQ(id.values[0], (std::vector<double>{-1, 1}));
}

TEST(Rescale, ConstantAxisPolicy) {
  auto s = make_series({0, 1, 2}, {{1, 2, 3}, {4, 4, 4}});
  try {
    rescale(s);
    FAIL();
  } catch (const ConstantSeries &e) {
    EXPECT_EQ(e.axis, 1u);
  }
  auto z = rescale(s, ConstantPolicy::Zero);
  EXPECT_EQ(z.values[1], (std::vector<double>{0, 0, 0}));
}

class RescaleProperty : public ::testing::TestWithParam<int> {};

TEST_P(RescaleProperty, RangeOrderAffineIdempotent) {
  std::mt19937_64 gen(GetParam());
  std::uniform_real_distribution<double> u(-8, 8);
  std::vector<double> t(64), v(64);
  for (int i = 0; i < 64; ++i) {
    t[i] = i;
    v[i] = u(gen);
  }
  auto r = rescale(make_series(t, {v})).values[0];
  // Brute-force min, max and order recomputed from the input.
  std::size_t imin = 0, imax = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] < v[imin]) imin = i;
    if (v[i] > v[imax]) imax = i;
  }
  EXPECT_EQ(r[imin], -1.0);
  EXPECT_EQ(r[imax], 1.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_GE(r[i], -1.0 - 1e-12);
    EXPECT_LE(r[i], 1.0 + 1e-12);
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (v[i] < v[j]) {
        EXPECT_LT(r[i], r[j]);
      }
    }
  }

  std::uniform_real_distribution<double> ua(0.01, 100), ub(-50, 50);
  const double a = ua(gen), b = ub(gen);
  std::vector<double> w(v);
  for (auto &x : w) x = a * x + b;
  auto ra = rescale(make_series(t, {w})).values[0];
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(ra[i], r[i], 1e-12);

  auto rr = rescale(make_series(t, {r})).values[0];
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(rr[i], r[i], 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RescaleProperty, ::testing::Range(0, 20));
