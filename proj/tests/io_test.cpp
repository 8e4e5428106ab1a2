/* Copyright 2026 The dtstereo Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dtstereo/errors.hpp"
#include "dtstereo/io.hpp"

namespace dts {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dts_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const char* name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(IoTest, FlatRoundTrip) {
  FlatArray a{2, 3, 4, {}};
  for (int i = 0; i < 24; ++i) a.values.push_back(0.25f * i - 3.0f);
  a.values[5] = -0.0f;
  write_flat(path("a.dtsb"), a);
  EXPECT_EQ(fs::file_size(path("a.dtsb")), 16u + 24u * 4u);
  const auto b = read_flat(path("a.dtsb"));
  EXPECT_EQ(b.height, 2u);
  EXPECT_EQ(b.width, 3u);
  EXPECT_EQ(b.depth, 4u);
  EXPECT_EQ(b.values, a.values);
  EXPECT_TRUE(std::signbit(b.values[5]));
}

TEST_F(IoTest, FlatLayoutIsLittleEndian) {
  write_flat(path("one.dtsb"), FlatArray{1, 1, 1, {1.0f}});
  std::ifstream in(path("one.dtsb"), std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
  const std::vector<unsigned char> expect = {'D', 'T', 'S', 'B', 1, 0, 0, 0, 1, 0,
                                             0,   0,   1,   0,   0, 0, 0, 0, 0x80, 0x3f};
  EXPECT_EQ(bytes, expect);
}

TEST_F(IoTest, FlatRejectsCorruptFiles) {
  EXPECT_THROW(read_flat(path("missing.dtsb")), DataError);
  write_text(path("magic.dtsb"), "NOPE000000000000");
  EXPECT_THROW(read_flat(path("magic.dtsb")), DataError);
  write_text(path("short.dtsb"), "DTS");
  EXPECT_THROW(read_flat(path("short.dtsb")), DataError);
  write_flat(path("trunc.dtsb"), FlatArray{2, 2, 1, {1, 2, 3, 4}});
  fs::resize_file(path("trunc.dtsb"), 20);
  EXPECT_THROW(read_flat(path("trunc.dtsb")), DataError);
  EXPECT_THROW(write_flat(path("bad.dtsb"), FlatArray{2, 2, 1, {1}}), ConfigError);
}

TEST_F(IoTest, GridAndFeatureConversions) {
  Grid g(2, 3);
  for (std::size_t i = 0; i < g.size(); ++i) g.data[i] = 0.5 * i;
  EXPECT_EQ(grid_from_flat(to_flat(g)).data, g.data);
  EXPECT_THROW(grid_from_flat(FlatArray{1, 1, 2, {1, 2}}), DataError);

  FeatureMap f(2, 2, 3);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = static_cast<float>(i);
  f.valid = {1, 0, 1, 1};
  const auto back = features_from_flat(to_flat(f), mask_to_flat(2, 2, f.valid));
  EXPECT_EQ(back.values, f.values);
  EXPECT_EQ(back.valid, f.valid);
  EXPECT_THROW(features_from_flat(to_flat(f), mask_to_flat(1, 2, {1, 1})), DataError);

  Volume v(1, 2, 3);
  v.data = {1, 2, 3, 4, 5, 6};
  EXPECT_EQ(volume_from_flat(to_flat(v)).data, v.data);
}

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(-1.5e-7), "-1.5e-07");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST_F(IoTest, CsvTable) {
  CsvTable t({"a", "b"});
  t.add_row({"1", "2"});
  t.add_row({"x", "y"});
  EXPECT_EQ(t.str(), "a,b\n1,2\nx,y\n");
  EXPECT_THROW(t.add_row({"1"}), ConfigError);
  t.write(path("t.csv"));
  std::ifstream in(path("t.csv"));
  std::string s((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(s, t.str());
}

TEST_F(IoTest, JsonRoundTripAndErrors) {
  const nlohmann::json doc = {{"k", 1.5}, {"list", {1, 2, 3}}};
  write_json(path("d.json"), doc);
  EXPECT_EQ(read_json(path("d.json")), doc);
  write_text(path("bad.json"), "{not json");
  EXPECT_THROW(read_json(path("bad.json")), DataError);
  EXPECT_THROW(read_json(path("none.json")), DataError);
}

}  // namespace
}  // namespace dts
