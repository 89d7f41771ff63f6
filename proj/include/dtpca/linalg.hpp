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

#ifndef DTPCA_LINALG_HPP_
#define DTPCA_LINALG_HPP_

#include <cstddef>
#include <vector>

#include "dtpca/types.hpp"

namespace dtpca {

/// Mode-j unfolding. Row i of the result is the slice of the tensor with
/// the mode-j index fixed at i; columns run over the remaining modes in
/// ascending order with the last one varying fastest, so that
///   matricize(G x_1 U_1 ... x_J U_J, j) = U_j * matricize(G, j) * kron_skip(U, j)'
/// holds exactly (see kron_skipping). Modes are 0-based.
Matrix matricize(const DenseTensor& t, std::size_t mode);

/// Inverse of matricize: folds a p_j x (prod dims / p_j) matrix back into a
/// tensor with the given dims. Bitwise inverse of matricize.
DenseTensor tensorize(const Matrix& m, const std::vector<std::size_t>& dims,
                      std::size_t mode);

/// Mode-j product T x_j M: contracts mode j of the tensor with the columns
/// of M (M.cols must equal dims[mode]); the result has dims[mode] = M.rows.
DenseTensor mode_product(const DenseTensor& t, const Matrix& m,
                         std::size_t mode);

/// Kronecker product A (x) B of shape (A.rows*B.rows) x (A.cols*B.cols).
Matrix kron(const Matrix& a, const Matrix& b);

/// kron(m[0], ..., m[J-1]) with index `skip` omitted. Factors multiply in
/// ascending order; an empty selection yields the 1x1 identity.
Matrix kron_skipping(const std::vector<Matrix>& factors, std::size_t skip);

struct SvdResult {
  OrthonormalBasis basis;              // top-r left singular vectors
  std::vector<double> singular_values; // nonincreasing, length r
};

/// Top-r left singular vectors and singular values. Uses a symmetric
/// eigendecomposition of the Gram matrix M*M' when rows <= cols and a
/// Jacobi SVD otherwise. The sign of each vector is fixed so that its
/// largest-magnitude entry is nonnegative; only the spanned subspace is
/// contractual.
SvdResult svd_top_r(const Matrix& m, std::size_t r);

/// All singular values of m, nonincreasing.
std::vector<double> singular_values(const Matrix& m);

/// Column-orthonormal basis with the same column span as m. Requires full
/// column rank (any |R(i,i)| < 1e-12 in the QR factorization is an error).
OrthonormalBasis qr_orthonormalize(const Matrix& m);

/// Projection distance ||AA' - BB'||_F, evaluated as sqrt(2r - 2||A'B||_F^2)
/// so the p x p projections are never formed.
double rho(const OrthonormalBasis& a, const OrthonormalBasis& b);

/// sin-Theta distance sqrt(r - sum_i s_i^2), s_i the singular values of A'B.
/// Satisfies rho^2 = 2 * sin_theta^2.
double sin_theta(const OrthonormalBasis& a, const OrthonormalBasis& b);

/// a' * b as a Matrix (a: p x ra, b: p x rb -> ra x rb).
Matrix gram_cross(const Matrix& a, const Matrix& b);

/// C = A * B.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Projection of each column of m onto the orthocomplement of the basis:
/// (I - UU') * m, computed as m - U*(U'm).
Matrix project_out(const OrthonormalBasis& u, const Matrix& m);

/// Rank-r projector sum: accumulate += scale * U U' (accumulate must be p x p).
void add_scaled_projection(Matrix& accumulate, const OrthonormalBasis& u,
                           double scale);

/// Frobenius norm of a tensor (= Frobenius norm of any unfolding).
double frobenius_norm(const DenseTensor& t);
double frobenius_norm(const Matrix& m);

}  // namespace dtpca

#endif  // DTPCA_LINALG_HPP_
