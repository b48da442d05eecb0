// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <sstream>

#include "mmtsa/io.hpp"

using namespace mmtsa;

TEST(Pgm, HeaderAndPayload) {
  std::ostringstream out;
  std::vector<std::uint8_t> px{0, 1, 2, 3, 4, 5};
  write_pgm(out, 2, 3, px);
  EXPECT_EQ(out.str().substr(0, 11), "P5\n3 2\n255\n");
  std::istringstream in(out.str());
  auto img = read_pgm(in);
  EXPECT_EQ(img.shape, (Shape{2, 3}));
  EXPECT_EQ(img.data, px);
}

TEST(Pgm, CommentsAndErrors) {
  std::string text = std::string("P5\n# made by hand\n2 1\n255\n") + '\x07' + '\x09';
  std::istringstream in(text);
  EXPECT_EQ(read_pgm(in).data, (std::vector<std::uint8_t>{7, 9}));
  std::istringstream p2("P2\n1 1\n255\n0");
  EXPECT_THROW(read_pgm(p2), FormatError);
  std::istringstream wide("P5\n1 1\n65535\n00");
  EXPECT_THROW(read_pgm(wide), FormatError);
  std::istringstream cut(std::string("P5\n2 2\n255\n") + "ab");
  EXPECT_THROW(read_pgm(cut), FormatError);
}

TEST(Gaft, LayoutIsLittleEndian) {
  std::ostringstream out;
  write_gaft(out, Tensor<float>({2}, std::vector<float>{1.0f, -2.0f}));
  const std::string s = out.str();
  ASSERT_EQ(s.size(), 4u + 4 + 4 + 1 + 4 + 8);
  EXPECT_EQ(s.substr(0, 4), "GAFT");
  EXPECT_EQ(s[4], 1);  // version
  EXPECT_EQ(s[8], 1);  // ndim
  EXPECT_EQ(s[12], 0);  // dtype f32
  EXPECT_EQ(s[13], 2);  // dims[0]
  // 1.0f = 0x3f800000 stored as 00 00 80 3f.
  EXPECT_EQ(static_cast<unsigned char>(s[17]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(s[19]), 0x80);
  EXPECT_EQ(static_cast<unsigned char>(s[20]), 0x3f);
}

TEST(Gaft, RejectsCorruptInput) {
  std::istringstream bad_magic("GAFX");
  EXPECT_THROW(read_gaft(bad_magic), FormatError);
  std::ostringstream out;
  write_gaft(out, Tensor<std::uint8_t>({3}, std::vector<std::uint8_t>{1, 2, 3}));
  std::string s = out.str();
  std::istringstream truncated(s.substr(0, s.size() - 1));
  EXPECT_THROW(read_gaft(truncated), FormatError);
  s[12] = 9;
  std::istringstream bad_dtype(s);
  EXPECT_THROW(read_gaft(bad_dtype), FormatError);
  s[12] = 1;
  s[4] = 2;
  std::istringstream bad_version(s);
  EXPECT_THROW(read_gaft(bad_version), FormatError);
  EXPECT_THROW(Tensor<float>({2, 2}, std::vector<float>{1}), ShapeMismatch);
}

TEST(Gaft, RandomRoundTripsAreBitExact) {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 20; ++trial) {
    Shape shape;
    const auto rank = 1 + gen() % 4;
    for (std::size_t r = 0; r < rank; ++r) shape.push_back(1 + gen() % 7);
    Tensor<float> f(shape);
    Tensor<double> d(shape);
    Tensor<std::uint8_t> u(shape);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const std::uint32_t fb = static_cast<std::uint32_t>(gen());
      std::memcpy(&f.data[k], &fb, 4);
      const std::uint64_t db = gen();
      std::memcpy(&d.data[k], &db, 8);
      u.data[k] = static_cast<std::uint8_t>(gen());
    }
    for (const AnyTensor &any : {AnyTensor(f), AnyTensor(d), AnyTensor(u)}) {
      std::stringstream io;
      write_gaft(io, any);
      auto back = read_gaft(io);
      ASSERT_EQ(back.index(), any.index());
      std::visit(
          [&](const auto &orig) {
            const auto &got = std::get<std::decay_t<decltype(orig)>>(back);
            EXPECT_EQ(got.shape, orig.shape);
            EXPECT_EQ(0, std::memcmp(got.data.data(), orig.data.data(), orig.size() * sizeof(orig.data[0])));
          },
          any);
    }
  }
}

TEST(UnitDoubles, ScalesBytes) {
  auto t = to_unit_doubles(Tensor<std::uint8_t>({2}, std::vector<std::uint8_t>{0, 255}));
  EXPECT_EQ(t.data, (std::vector<double>{0.0, 1.0}));
  auto f = to_unit_doubles(Tensor<float>({1}, std::vector<float>{0.25f}));
  EXPECT_EQ(f.data[0], 0.25);
}
