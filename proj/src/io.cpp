/*
 * Copyright 2026 The dtpca Authors
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

#include "dtpca/io.hpp"

#include <cstring>
#include <fstream>

namespace dtpca {

namespace {

constexpr char kMagic[4] = {'D', 'T', 'P', 'T'};
constexpr std::uint8_t kVersion = 0x01;

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64le(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f64le(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64le(out, bits);
}

double get_f64le(const std::uint8_t* p) {
  std::uint64_t bits = get_u64le(p);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const DenseTensor& t) {
  std::vector<std::uint8_t> out;
  out.reserve(6 + 8 * t.order() + 8 * t.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(t.order()));
  for (std::size_t d : t.dims) put_u64le(out, d);
  for (double v : t.data) put_f64le(out, v);
  return out;
}

DenseTensor decode_tensor(const std::vector<std::uint8_t>& bytes,
                          const std::string& origin) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IoError(origin + ": not a DTPT file (bad magic)");
  }
  if (bytes[4] != kVersion) {
    throw IoError(origin + ": unsupported DTPT version " +
                  std::to_string(bytes[4]));
  }
  const std::size_t j = bytes[5];
  if (j < 2) throw IoError(origin + ": tensor order must be >= 2");
  std::size_t offset = 6;
  if (bytes.size() < offset + 8 * j) {
    throw IoError(origin + ": truncated dimension table");
  }
  std::vector<std::size_t> dims(j);
  std::size_t count = 1;
  for (std::size_t k = 0; k < j; ++k) {
    dims[k] = static_cast<std::size_t>(get_u64le(bytes.data() + offset));
    offset += 8;
    if (dims[k] == 0) throw IoError(origin + ": zero dimension");
    count *= dims[k];
  }
  if (bytes.size() != offset + 8 * count) {
    throw IoError(origin + ": payload size does not match dims");
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = get_f64le(bytes.data() + offset + 8 * i);
  }
  return DenseTensor(std::move(dims), std::move(data));
}

void write_tensor_file(const DenseTensor& t, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path + ": cannot open for writing");
  std::vector<std::uint8_t> bytes = encode_tensor(t);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(path + ": write failed");
}

DenseTensor read_tensor_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError(path + ": cannot open");
  const std::streamsize n = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
  f.read(reinterpret_cast<char*>(bytes.data()), n);
  if (!f) throw IoError(path + ": read failed");
  return decode_tensor(bytes, path);
}

void write_matrix_file(const Matrix& m, const std::string& path) {
  write_tensor_file(DenseTensor({m.rows, m.cols}, m.data), path);
}

Matrix read_matrix_file(const std::string& path) {
  DenseTensor t = read_tensor_file(path);
  if (t.order() != 2) {
    throw IoError(path + ": expected a 2-mode tensor (matrix)");
  }
  return Matrix(t.dims[0], t.dims[1], std::move(t.data));
}

}  // namespace dtpca
