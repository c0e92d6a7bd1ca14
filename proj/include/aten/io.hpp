// Copyright 2026 The ATEN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aten/tensor.hpp"

namespace aten {

// 8-bit single-channel image, row-major.
struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  LabelMap() = default;
  LabelMap(int h, int w, std::uint8_t fill = 0)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

  std::uint8_t& at(int y, int x) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::uint8_t at(int y, int x) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t size() const { return pixels.size(); }
  bool operator==(const LabelMap&) const = default;
};

// ATEN-T1 tensor files: "ATN1", u32 rank, rank x u32 dims, f32 payload,
// all little-endian.
std::vector<std::uint8_t> encode_t1(const Tensor& t);
Tensor decode_t1(const std::vector<std::uint8_t>& bytes,
                 const std::string& origin = "<memory>");
void write_t1(const std::filesystem::path& path, const Tensor& t);
Tensor read_t1(const std::filesystem::path& path);

// Binary 8-bit PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const LabelMap& map);
LabelMap read_pgm(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes);
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace aten
