/*
 * Copyright 2026 The PRISm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "prism/error.hpp"
#include "prism/numerics/tensor.hpp"

// Matrix blob layout (all integers little-endian):
//
//   offset  size  field
//   0       4     magic "PRSM"
//   4       2     version (1)
//   6       2     dtype code (1 = float32)
//   8       4     rows
//   12      4     cols
//   16      4*rows*cols  row-major IEEE-754 float32 data
namespace prism::graphcore {

inline constexpr std::array<char, 4> kBlobMagic = {'P', 'R', 'S', 'M'};
inline constexpr std::uint16_t kBlobVersion = 1;
inline constexpr std::uint16_t kDtypeFloat32 = 1;
inline constexpr std::size_t kBlobHeaderBytes = 16;

namespace detail {

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(U));
  if (!in) fail(ErrorKind::kIoFailure, "truncated blob header");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(bytes[i]) << (8 * i));
  return value;
}

}  // namespace detail

inline void write_blob(std::ostream& out, const numerics::Tensor& t) {
  const std::uint64_t rows = t.rows(), cols = t.cols();
  require(rows <= UINT32_MAX && cols <= UINT32_MAX, ErrorKind::kIoFailure, "blob too large");
  out.write(kBlobMagic.data(), kBlobMagic.size());
  detail::put_le<std::uint16_t>(out, kBlobVersion);
  detail::put_le<std::uint16_t>(out, kDtypeFloat32);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(rows));
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cols));
  for (float v : t.values()) detail::put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  if (!out) fail(ErrorKind::kIoFailure, "failed writing blob");
}

inline numerics::Tensor read_blob(std::istream& in, const std::string& source = "blob") {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kBlobMagic) fail(ErrorKind::kIoFailure, source + ": bad blob magic");
  const auto version = detail::get_le<std::uint16_t>(in);
  if (version != kBlobVersion)
    fail(ErrorKind::kIoFailure, source + ": unsupported blob version " + std::to_string(version));
  const auto dtype = detail::get_le<std::uint16_t>(in);
  if (dtype != kDtypeFloat32)
    fail(ErrorKind::kIoFailure, source + ": unsupported dtype code " + std::to_string(dtype));
  const auto rows = detail::get_le<std::uint32_t>(in);
  const auto cols = detail::get_le<std::uint32_t>(in);
  numerics::Tensor t(rows, cols);
  for (auto& v : t.values()) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) fail(ErrorKind::kIoFailure, source + ": truncated blob data");
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                               (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    v = std::bit_cast<float>(bits);
  }
  return t;
}

inline void write_blob_file(const std::filesystem::path& path, const numerics::Tensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIoFailure, "cannot open " + path.string() + " for writing");
  write_blob(out, t);
}

inline numerics::Tensor read_blob_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::kMissingBlob, path.string() + " does not exist");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIoFailure, "cannot open " + path.string());
  return read_blob(in, path.string());
}

}  // namespace prism::graphcore
