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

#include "aten/io.hpp"

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace aten {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'N', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[off + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_t1(const Tensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + 4 * t.dims().size() + 4 * t.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.dims()) put_u32(out, static_cast<std::uint32_t>(d));
  for (double v : t.values()) {
    put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

Tensor decode_t1(const std::vector<std::uint8_t>& bytes,
                 const std::string& origin) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError(origin + ": missing ATN1 magic");
  }
  const std::uint32_t rank = get_u32(bytes, 4);
  if (rank < 1 || rank > 4 || bytes.size() < 8 + 4 * rank) {
    throw DataError(origin + ": bad rank " + std::to_string(rank));
  }
  Shape dims(rank);
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = get_u32(bytes, 8 + 4 * i);
    if (d == 0 || d > (1u << 24)) {
      throw DataError(origin + ": bad extent " + std::to_string(d));
    }
    dims[i] = static_cast<int>(d);
    count *= d;
  }
  const std::size_t header = 8 + 4 * rank;
  if (bytes.size() != header + 4 * count) {
    throw DataError(origin + ": payload length mismatch");
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  }
  return Tensor(std::move(dims), std::move(data));
}

void write_t1(const std::filesystem::path& path, const Tensor& t) {
  write_file_bytes(path, encode_t1(t));
}

Tensor read_t1(const std::filesystem::path& path) {
  return decode_t1(read_file_bytes(path), path.string());
}

void write_pgm(const std::filesystem::path& path, const LabelMap& map) {
  std::ostringstream header;
  header << "P5\n" << map.width << ' ' << map.height << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> bytes(h.begin(), h.end());
  bytes.insert(bytes.end(), map.pixels.begin(), map.pixels.end());
  write_file_bytes(path, bytes);
}

LabelMap read_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto next_token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string tok;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) {
      tok.push_back(static_cast<char>(bytes[pos++]));
    }
    return tok;
  };
  if (next_token() != "P5") throw DataError(path.string() + ": not a P5 PGM");
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_token());
    h = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw DataError(path.string() + ": malformed PGM header");
  }
  ++pos;  // single whitespace before the raster
  if (w <= 0 || h <= 0 || maxval != 255 ||
      bytes.size() != pos + static_cast<std::size_t>(w) * h) {
    throw DataError(path.string() + ": unsupported PGM layout");
  }
  LabelMap map(h, w);
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end(),
            map.pixels.begin());
  return map;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace aten
