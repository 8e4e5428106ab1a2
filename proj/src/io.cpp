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
#include "dtstereo/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dtstereo/errors.hpp"

namespace dts {

namespace {

void put_u32(std::ostream& out, std::uint32_t x) {
  const char bytes[4] = {static_cast<char>(x & 0xff), static_cast<char>((x >> 8) & 0xff),
                         static_cast<char>((x >> 16) & 0xff), static_cast<char>((x >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32(const unsigned char* b) {
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

}  // namespace

void write_flat(const std::string& path, const FlatArray& a) {
  const std::size_t n = std::size_t(a.height) * a.width * a.depth;
  if (a.values.size() != n) throw ConfigError("write_flat: value count does not match shape");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.write(kFlatMagic, 4);
  put_u32(out, a.height);
  put_u32(out, a.width);
  put_u32(out, a.depth);
  for (float v : a.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
  }
  if (!out) throw DataError("write failed for " + path);
}

FlatArray read_flat(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  unsigned char header[16];
  if (!in.read(reinterpret_cast<char*>(header), 16)) throw DataError(path + ": truncated header");
  if (std::memcmp(header, kFlatMagic, 4) != 0) throw DataError(path + ": bad magic");
  FlatArray a;
  a.height = get_u32(header + 4);
  a.width = get_u32(header + 8);
  a.depth = get_u32(header + 12);
  const std::size_t n = std::size_t(a.height) * a.width * a.depth;
  std::vector<unsigned char> raw(n * 4);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw DataError(path + ": truncated payload");
  }
  a.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = get_u32(raw.data() + 4 * i);
    std::memcpy(&a.values[i], &bits, 4);
  }
  return a;
}

FlatArray to_flat(const Grid& g) {
  FlatArray a{std::uint32_t(g.height), std::uint32_t(g.width), 1, {}};
  a.values.assign(g.data.begin(), g.data.end());
  return a;
}

FlatArray to_flat(const Volume& v) {
  FlatArray a{std::uint32_t(v.height), std::uint32_t(v.width), std::uint32_t(v.depth), {}};
  a.values.assign(v.data.begin(), v.data.end());
  return a;
}

FlatArray to_flat(const FeatureMap& f) {
  return {std::uint32_t(f.height), std::uint32_t(f.width), std::uint32_t(f.channels), f.values};
}

FlatArray mask_to_flat(int height, int width, const std::vector<std::uint8_t>& mask) {
  FlatArray a{std::uint32_t(height), std::uint32_t(width), 1, {}};
  a.values.assign(mask.begin(), mask.end());
  return a;
}

Grid grid_from_flat(const FlatArray& a) {
  if (a.depth != 1) throw DataError("expected a single-channel array");
  Grid g(int(a.height), int(a.width));
  g.data.assign(a.values.begin(), a.values.end());
  return g;
}

Volume volume_from_flat(const FlatArray& a) {
  Volume v(int(a.height), int(a.width), int(a.depth));
  v.data.assign(a.values.begin(), a.values.end());
  return v;
}

FeatureMap features_from_flat(const FlatArray& values, const FlatArray& mask) {
  if (mask.height != values.height || mask.width != values.width || mask.depth != 1) {
    throw DataError("feature mask shape does not match features");
  }
  FeatureMap f(int(values.height), int(values.width), int(values.depth));
  f.values = values.values;
  for (std::size_t i = 0; i < f.valid.size(); ++i) f.valid[i] = mask.values[i] != 0.0f;
  return f;
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_grid_csv(const std::string& path, const Grid& g) {
  std::ostringstream out;
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      if (c) out << ',';
      out << format_number(g(r, c));
    }
    out << '\n';
  }
  write_text(path, out.str());
}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw ConfigError("csv: row width does not match header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return out.str();
}

void CsvTable::write(const std::string& path) const { write_text(path, str()); }

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace dts
