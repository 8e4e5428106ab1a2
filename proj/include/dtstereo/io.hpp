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
#ifndef DTSTEREO_IO_HPP_
#define DTSTEREO_IO_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dtstereo/image.hpp"
#include "dtstereo/stereo.hpp"

namespace dts {

// Flat binary layout: 16-byte header {magic "DTSB", H, W, B as little-endian
// uint32} followed by H*W*B little-endian float32 values in row-major order.
inline constexpr char kFlatMagic[4] = {'D', 'T', 'S', 'B'};

struct FlatArray {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t depth = 0;
  std::vector<float> values;
};

void write_flat(const std::string& path, const FlatArray& array);
FlatArray read_flat(const std::string& path);

FlatArray to_flat(const Grid& grid);
FlatArray to_flat(const Volume& volume);
FlatArray to_flat(const FeatureMap& features);
FlatArray mask_to_flat(int height, int width, const std::vector<std::uint8_t>& mask);
Grid grid_from_flat(const FlatArray& array);
Volume volume_from_flat(const FlatArray& array);
// Valid mask read from a separate H x W x 1 array of 0/1 values.
FeatureMap features_from_flat(const FlatArray& values, const FlatArray& mask);

// Shortest round-trippable decimal form, stable across runs.
std::string format_number(double x);

// Rows of W comma-separated values, one line per image row.
void write_grid_csv(const std::string& path, const Grid& grid);

// Small CSV table writer; fields are written verbatim.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(std::vector<std::string> row);
  std::string str() const;
  void write(const std::string& path) const;
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& doc);
void write_text(const std::string& path, const std::string& text);

}  // namespace dts

#endif  // DTSTEREO_IO_HPP_
