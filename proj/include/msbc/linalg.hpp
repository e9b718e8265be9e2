// SPDX-License-Identifier: Apache-2.0
//
// msbc -- power minimization in the multiple-stream MIMO broadcast channel
// under statistical transmitter-side channel knowledge.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cmath>

#include "msbc/types.hpp"

namespace msbc {

/// Hermitian part of a numerically almost-Hermitian matrix.
template <class Real>
MatrixC<Real> hermitian_part(const MatrixC<Real>& a) {
  return ((a + a.adjoint()) / Real(2)).eval();
}

template <class Real>
bool is_hermitian(const MatrixC<Real>& a, Real tol = Real(1e-10)) {
  if (a.rows() != a.cols()) return false;
  Real scale = std::max(Real(1), a.template lpNorm<Eigen::Infinity>());
  return (a - a.adjoint().eval()).template lpNorm<Eigen::Infinity>() <= tol * scale;
}

/// Inverse Hermitian square root C^{-1/2} of a Hermitian positive definite
/// matrix. Throws NumericError when the smallest eigenvalue is not positive.
template <class Real>
MatrixC<Real> hermitian_inverse_sqrt(const MatrixC<Real>& c) {
  if (!is_hermitian(c)) throw NumericError("matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixC<Real>> eig(c);
  if (eig.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed");
  const VectorR<Real>& ev = eig.eigenvalues();
  Real floor = Real(1e-14) * std::max(Real(1), ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() <= floor)
    throw NumericError("matrix is not positive definite");
  VectorR<Real> inv_sqrt = ev.array().sqrt().inverse();
  return eig.eigenvectors() * inv_sqrt.asDiagonal() *
         eig.eigenvectors().adjoint();
}

/// Hermitian square root of a Hermitian positive semidefinite matrix.
/// Eigenvalues below a small relative floor are treated as zero.
template <class Real>
MatrixC<Real> hermitian_sqrt(const MatrixC<Real>& c) {
  if (!is_hermitian(c)) throw NumericError("matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixC<Real>> eig(c);
  if (eig.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed");
  VectorR<Real> ev = eig.eigenvalues();
  Real scale = std::max(Real(1), ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -Real(1e-10) * scale)
    throw NumericError("matrix is not positive semidefinite");
  VectorR<Real> root = ev.cwiseMax(Real(0)).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
}

/// Moore-Penrose pseudoinverse of a Hermitian PSD matrix; eigenvalues below
/// rel_tol * lambda_max are inverted to zero.
template <class Real>
MatrixC<Real> hermitian_pinv(const MatrixC<Real>& c, Real rel_tol = Real(1e-12)) {
  Eigen::SelfAdjointEigenSolver<MatrixC<Real>> eig(hermitian_part(c));
  if (eig.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed");
  const VectorR<Real>& ev = eig.eigenvalues();
  Real cutoff = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), Real(0));
  VectorR<Real> inv = VectorR<Real>::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff) inv(i) = Real(1) / ev(i);
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().adjoint();
}

/// Rotates each column so that its first component of non-negligible
/// magnitude is real and positive. Makes eigenbases deterministic.
template <class Real>
void fix_column_phases(MatrixC<Real>& u) {
  for (Index j = 0; j < u.cols(); ++j) {
    Real colnorm = u.col(j).norm();
    if (colnorm == Real(0)) continue;
    for (Index i = 0; i < u.rows(); ++i) {
      Real mag = std::abs(u(i, j));
      if (mag > Real(1e-12) * colnorm) {
        u.col(j) *= std::conj(u(i, j)) / mag;
        break;
      }
    }
  }
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order, unit-norm eigenvectors and fixed column phases.
template <class Real>
void sorted_hermitian_eig(const MatrixC<Real>& a, VectorR<Real>& values,
                          MatrixC<Real>& vectors) {
  Eigen::SelfAdjointEigenSolver<MatrixC<Real>> eig(hermitian_part(a));
  if (eig.info() != Eigen::Success)
    throw NumericError("eigendecomposition failed");
  values = eig.eigenvalues().reverse();
  vectors = eig.eigenvectors().rowwise().reverse();
  fix_column_phases(vectors);
}

/// log2 det of a Hermitian positive definite matrix via LDL^H.
template <class Real>
Real log2_det_hermitian(const MatrixC<Real>& a) {
  Eigen::LDLT<MatrixC<Real>> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("LDL^H factorization failed");
  VectorR<Real> d = ldlt.vectorD().real();
  if (d.minCoeff() <= Real(0))
    throw NumericError("matrix is not positive definite");
  return d.array().log().sum() / std::log(Real(2));
}

}  // namespace msbc
