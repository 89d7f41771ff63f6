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

#ifndef DTPCA_TYPES_HPP_
#define DTPCA_TYPES_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dtpca {

/// Thrown when an argument violates a documented precondition
/// (dimension mismatch, out-of-range mode/rank, bad configuration).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a valid result
/// (rank-deficient QR input, non-finite entries, failed construction).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix. Row-major means entry (i, j) lives at
/// data[i * cols + j].
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != rows * cols) {
      throw InvalidArgument("Matrix: data length " +
                            std::to_string(data.size()) + " != rows*cols " +
                            std::to_string(rows * cols));
    }
  }

  double& operator()(std::size_t i, std::size_t j) {
    return data[i * cols + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

/// Dense J-mode tensor, J >= 2. Entries are stored row-major: the last
/// index varies fastest.
struct DenseTensor {
  std::vector<std::size_t> dims;
  std::vector<double> data;

  DenseTensor() = default;
  explicit DenseTensor(std::vector<std::size_t> d)
      : dims(std::move(d)), data(element_count(dims), 0.0) {
    validate_dims(dims);
  }
  DenseTensor(std::vector<std::size_t> d, std::vector<double> values)
      : dims(std::move(d)), data(std::move(values)) {
    validate_dims(dims);
    if (data.size() != element_count(dims)) {
      throw InvalidArgument("DenseTensor: data length does not match dims");
    }
  }

  std::size_t order() const { return dims.size(); }
  std::size_t size() const { return data.size(); }

  static std::size_t element_count(const std::vector<std::size_t>& d) {
    std::size_t n = 1;
    for (std::size_t v : d) n *= v;
    return n;
  }

 private:
  static void validate_dims(const std::vector<std::size_t>& d) {
    if (d.size() < 2) {
      throw InvalidArgument("DenseTensor: need at least 2 modes");
    }
    for (std::size_t v : d) {
      if (v == 0) throw InvalidArgument("DenseTensor: zero dimension");
    }
  }
};

/// A p x r matrix with orthonormal columns, representing an r-dimensional
/// singular subspace of R^p. Construction verifies U'U = I_r to 1e-8 in
/// Frobenius norm. r = 0 (the trivial subspace) is permitted.
class OrthonormalBasis {
 public:
  OrthonormalBasis() = default;
  explicit OrthonormalBasis(Matrix m);

  std::size_t p() const { return m_.rows; }
  std::size_t r() const { return m_.cols; }
  const Matrix& matrix() const { return m_; }

  /// Orthonormality defect ||U'U - I||_F of an arbitrary matrix.
  static double orthonormality_defect(const Matrix& m);

 private:
  Matrix m_;
};

}  // namespace dtpca

#endif  // DTPCA_TYPES_HPP_
