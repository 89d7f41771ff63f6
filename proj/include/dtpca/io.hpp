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

#ifndef DTPCA_IO_HPP_
#define DTPCA_IO_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "dtpca/types.hpp"

namespace dtpca {

/// Thrown on malformed files or unwritable paths; the message names the file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Portable tensor container "DTPT1":
//   magic "DTPT" | version u8 = 0x01 | J u8 | J x u64le dims |
//   prod(dims) x f64le values, row-major.
// Writer and reader round-trip bit-exactly.

std::vector<std::uint8_t> encode_tensor(const DenseTensor& t);
DenseTensor decode_tensor(const std::vector<std::uint8_t>& bytes,
                          const std::string& origin = "<memory>");

void write_tensor_file(const DenseTensor& t, const std::string& path);
DenseTensor read_tensor_file(const std::string& path);

/// Matrices ride the same container as 2-mode tensors (dims = rows x cols).
void write_matrix_file(const Matrix& m, const std::string& path);
Matrix read_matrix_file(const std::string& path);

}  // namespace dtpca

#endif  // DTPCA_IO_HPP_
