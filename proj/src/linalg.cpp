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

#include "dtpca/linalg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace dtpca {

namespace {

using EMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMat>;
using CEMap = Eigen::Map<const EMat>;

CEMap emap(const Matrix& m) {
  return CEMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
               static_cast<Eigen::Index>(m.cols));
}

EMap emap(Matrix& m) {
  return EMap(m.data.data(), static_cast<Eigen::Index>(m.rows),
              static_cast<Eigen::Index>(m.cols));
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Make the largest-magnitude entry of each column nonnegative. Pure test
// reproducibility; no caller relies on signs.
void normalize_column_signs(Matrix& m) {
  for (std::size_t j = 0; j < m.cols; ++j) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < m.rows; ++i) {
      double a = std::abs(m(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (m(arg, j) < 0.0) {
      for (std::size_t i = 0; i < m.rows; ++i) m(i, j) = -m(i, j);
    }
  }
}

struct ModeSplit {
  std::size_t outer;  // product of dims before `mode`
  std::size_t size;   // dims[mode]
  std::size_t inner;  // product of dims after `mode`
};

ModeSplit split_dims(const std::vector<std::size_t>& dims, std::size_t mode) {
  ModeSplit s{1, dims[mode], 1};
  for (std::size_t k = 0; k < mode; ++k) s.outer *= dims[k];
  for (std::size_t k = mode + 1; k < dims.size(); ++k) s.inner *= dims[k];
  return s;
}

}  // namespace

OrthonormalBasis::OrthonormalBasis(Matrix m) : m_(std::move(m)) {
  if (m_.cols > m_.rows) {
    throw InvalidArgument("OrthonormalBasis: r > p");
  }
  double defect = orthonormality_defect(m_);
  if (!(defect <= 1e-8)) {
    throw NumericalError("OrthonormalBasis: columns not orthonormal, defect " +
                         std::to_string(defect));
  }
}

double OrthonormalBasis::orthonormality_defect(const Matrix& m) {
  if (!all_finite(m.data)) return std::numeric_limits<double>::infinity();
  EMat g = emap(m).transpose() * emap(m);
  g -= EMat::Identity(g.rows(), g.cols());
  return g.norm();
}

Matrix matricize(const DenseTensor& t, std::size_t mode) {
  if (mode >= t.order()) {
    throw InvalidArgument("matricize: mode out of range");
  }
  const ModeSplit s = split_dims(t.dims, mode);
  Matrix out(s.size, s.outer * s.inner);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.size; ++i) {
      const double* src = t.data.data() + (o * s.size + i) * s.inner;
      double* dst = out.data.data() + i * out.cols + o * s.inner;
      std::memcpy(dst, src, s.inner * sizeof(double));
    }
  }
  return out;
}

DenseTensor tensorize(const Matrix& m, const std::vector<std::size_t>& dims,
                      std::size_t mode) {
  if (mode >= dims.size()) {
    throw InvalidArgument("tensorize: mode out of range");
  }
  const ModeSplit s = split_dims(dims, mode);
  if (m.rows != s.size || m.cols != s.outer * s.inner) {
    throw InvalidArgument("tensorize: matrix shape inconsistent with dims");
  }
  DenseTensor t(dims);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.size; ++i) {
      const double* src = m.data.data() + i * m.cols + o * s.inner;
      double* dst = t.data.data() + (o * s.size + i) * s.inner;
      std::memcpy(dst, src, s.inner * sizeof(double));
    }
  }
  return t;
}

DenseTensor mode_product(const DenseTensor& t, const Matrix& m,
                         std::size_t mode) {
  if (mode >= t.order()) {
    throw InvalidArgument("mode_product: mode out of range");
  }
  if (m.cols != t.dims[mode]) {
    throw InvalidArgument("mode_product: M.cols != dims[mode]");
  }
  Matrix unfolded = matricize(t, mode);
  Matrix product(m.rows, unfolded.cols);
  emap(product) = emap(m) * emap(unfolded);
  std::vector<std::size_t> new_dims = t.dims;
  new_dims[mode] = m.rows;
  return tensorize(product, new_dims, mode);
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows * b.rows, a.cols * b.cols);
  for (std::size_t ia = 0; ia < a.rows; ++ia) {
    for (std::size_t ja = 0; ja < a.cols; ++ja) {
      const double av = a(ia, ja);
      if (av == 0.0) continue;
      for (std::size_t ib = 0; ib < b.rows; ++ib) {
        for (std::size_t jb = 0; jb < b.cols; ++jb) {
          out(ia * b.rows + ib, ja * b.cols + jb) = av * b(ib, jb);
        }
      }
    }
  }
  return out;
}

Matrix kron_skipping(const std::vector<Matrix>& factors, std::size_t skip) {
  Matrix acc = Matrix::identity(1);
  for (std::size_t k = 0; k < factors.size(); ++k) {
    if (k == skip) continue;
    acc = kron(acc, factors[k]);
  }
  return acc;
}

SvdResult svd_top_r(const Matrix& m, std::size_t r) {
  if (r > std::min(m.rows, m.cols)) {
    throw InvalidArgument("svd_top_r: r exceeds min(rows, cols)");
  }
  if (!all_finite(m.data)) {
    throw NumericalError("svd_top_r: non-finite entries");
  }
  Matrix u(m.rows, r);
  std::vector<double> values(r, 0.0);
  if (m.rows <= m.cols) {
    // Gram route: eigenvectors of M*M'. All downstream consumers only use
    // the projection UU', which is insensitive to the basis returned for
    // (near-)degenerate eigenvalues.
    EMat gram = emap(m) * emap(m).transpose();
    Eigen::SelfAdjointEigenSolver<EMat> eig(gram);
    if (eig.info() != Eigen::Success) {
      throw NumericalError("svd_top_r: eigendecomposition failed");
    }
    const auto& vals = eig.eigenvalues();   // ascending
    const auto& vecs = eig.eigenvectors();  // columns match vals
    const Eigen::Index n = vals.size();
    for (std::size_t k = 0; k < r; ++k) {
      const Eigen::Index src = n - 1 - static_cast<Eigen::Index>(k);
      values[k] = std::sqrt(std::max(0.0, vals(src)));
      for (std::size_t i = 0; i < m.rows; ++i) {
        u(i, k) = vecs(static_cast<Eigen::Index>(i), src);
      }
    }
  } else {
    Eigen::JacobiSVD<EMat> svd(emap(m), Eigen::ComputeThinU);
    const auto& vals = svd.singularValues();
    const auto& uu = svd.matrixU();
    for (std::size_t k = 0; k < r; ++k) {
      values[k] = vals(static_cast<Eigen::Index>(k));
      for (std::size_t i = 0; i < m.rows; ++i) {
        u(i, k) = uu(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(k));
      }
    }
  }
  normalize_column_signs(u);
  return SvdResult{OrthonormalBasis(std::move(u)), std::move(values)};
}

std::vector<double> singular_values(const Matrix& m) {
  if (!all_finite(m.data)) {
    throw NumericalError("singular_values: non-finite entries");
  }
  Eigen::JacobiSVD<EMat> svd(emap(m));
  const auto& vals = svd.singularValues();
  return std::vector<double>(vals.data(), vals.data() + vals.size());
}

OrthonormalBasis qr_orthonormalize(const Matrix& m) {
  if (m.cols == 0 || m.rows < m.cols) {
    throw InvalidArgument("qr_orthonormalize: need p >= r >= 1");
  }
  if (!all_finite(m.data)) {
    throw NumericalError("qr_orthonormalize: non-finite entries");
  }
  Eigen::HouseholderQR<EMat> qr(emap(m));
  EMat rfac = qr.matrixQR().topRows(static_cast<Eigen::Index>(m.cols))
                  .triangularView<Eigen::Upper>();
  for (std::size_t i = 0; i < m.cols; ++i) {
    if (std::abs(rfac(static_cast<Eigen::Index>(i),
                      static_cast<Eigen::Index>(i))) < 1e-12) {
      throw NumericalError("qr_orthonormalize: rank-deficient input");
    }
  }
  EMat thin_q = qr.householderQ() *
                EMat::Identity(static_cast<Eigen::Index>(m.rows),
                               static_cast<Eigen::Index>(m.cols));
  Matrix q(m.rows, m.cols);
  emap(q) = thin_q;
  return OrthonormalBasis(std::move(q));
}

Matrix gram_cross(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) {
    throw InvalidArgument("gram_cross: row mismatch");
  }
  Matrix out(a.cols, b.cols);
  emap(out) = emap(a).transpose() * emap(b);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw InvalidArgument("matmul: inner dimension mismatch");
  }
  Matrix out(a.rows, b.cols);
  emap(out) = emap(a) * emap(b);
  return out;
}

double rho(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  if (a.p() != b.p() || a.r() != b.r()) {
    throw InvalidArgument("rho: shape mismatch");
  }
  if (a.r() == 0) return 0.0;
  // rho^2 = 2r - 2||A'B||_F^2 = 2 ||(I - AA')B||_F^2, evaluated in the
  // residual form: it avoids the cancellation of the first expression for
  // nearly equal subspaces and never forms a p x p matrix.
  EMat cross = emap(a.matrix()).transpose() * emap(b.matrix());
  EMat residual = emap(b.matrix()) - emap(a.matrix()) * cross;
  return std::sqrt(2.0) * residual.norm();
}

double sin_theta(const OrthonormalBasis& a, const OrthonormalBasis& b) {
  if (a.p() != b.p() || a.r() != b.r()) {
    throw InvalidArgument("sin_theta: shape mismatch");
  }
  if (a.r() == 0) return 0.0;
  Matrix cross = gram_cross(a.matrix(), b.matrix());
  std::vector<double> sv = singular_values(cross);
  double sum = 0.0;
  for (double s : sv) sum += s * s;
  return std::sqrt(std::max(0.0, static_cast<double>(a.r()) - sum));
}

Matrix project_out(const OrthonormalBasis& u, const Matrix& m) {
  if (u.p() != m.rows) {
    throw InvalidArgument("project_out: row mismatch");
  }
  Matrix out = m;
  if (u.r() == 0) return out;
  EMat coeffs = emap(u.matrix()).transpose() * emap(m);
  emap(out) -= emap(u.matrix()) * coeffs;
  return out;
}

void add_scaled_projection(Matrix& accumulate, const OrthonormalBasis& u,
                           double scale) {
  if (accumulate.rows != u.p() || accumulate.cols != u.p()) {
    throw InvalidArgument("add_scaled_projection: accumulator must be p x p");
  }
  if (u.r() == 0) return;
  emap(accumulate) +=
      scale * (emap(u.matrix()) * emap(u.matrix()).transpose());
}

double frobenius_norm(const DenseTensor& t) {
  double sum = 0.0;
  for (double x : t.data) sum += x * x;
  return std::sqrt(sum);
}

double frobenius_norm(const Matrix& m) {
  double sum = 0.0;
  for (double x : m.data) sum += x * x;
  return std::sqrt(sum);
}

}  // namespace dtpca
