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
//
// MSE and rate algebra of the downlink: per-user MSE and MMSE receivers,
// averaged error covariance with its eigenbasis, spatial decorrelation,
// the determinant-based average rate and its Jensen lower bound, the
// scalarized dual-uplink average MMSE, and the feasibility test for
// per-stream MMSE targets.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "msbc/channel.hpp"
#include "msbc/linalg.hpp"
#include "msbc/types.hpp"

namespace msbc {

/// Downlink transmit/receive filter pair: P[k] is N x d_k, F[k] is R x d_k
/// for one channel realization.
template <class Real>
struct BcFilters {
  std::vector<MatrixC<Real>> P;
  std::vector<MatrixC<Real>> F;
};

/// Averaged per-user error covariance Sigma_bar_k = avg_m Sigma_k(H^(m))
/// together with its eigenvalues (descending) and eigenbasis. The diagonal
/// of Sigma_bar_k holds the per-stream average MMSEs for the given stream
/// ordering; the eigenvalues are the per-stream average MMSEs after
/// decorrelation.
template <class Real>
struct SigmaStats {
  std::vector<MatrixC<Real>> sigma_bar;  // per user, d_k x d_k Hermitian
  std::vector<VectorR<Real>> lambda;     // per user, descending
  std::vector<MatrixC<Real>> basis;      // per user, unitary d_k x d_k
};

/// Feasibility summary for per-stream MMSE targets: the d x d average MMSE
/// matrix E, the zero-noise bound d - trace(E[Y]^H E[YY^H]^+ E[Y]), the
/// target sum lhs = sum 2^{-rho_a} and the verdict lhs <= bound.
template <class Real>
struct FeasibilityReport {
  MatrixC<Real> e_matrix;   // at the sigma2 the report was built with
  Real sigma2 = Real(0);
  Real bound_rhs = Real(0); // always evaluated at sigma2 = 0
  Real lhs = Real(0);
  bool feasible = false;
  Index total_streams() const { return e_matrix.rows(); }
};

// ------------------------------------------------------------ downlink MSE --

/// Received-signal covariance at user k: H^H (sum_i P_i P_i^H) H + C_eta.
template <class Real>
MatrixC<Real> received_covariance(const std::vector<MatrixC<Real>>& precoders,
                                  const MatrixC<Real>& h,
                                  const MatrixC<Real>& c_eta) {
  MatrixC<Real> a = c_eta;
  for (const auto& p : precoders) {
    MatrixC<Real> b = h.adjoint() * p;
    a += b * b.adjoint();
  }
  return a;
}

/// MSE of user k for one channel realization:
///   d_k - 2 Re tr(F^H H^H P_k) + sum_i ||F^H H^H P_i||_F^2 + tr(F^H C_eta F).
template <class Real>
Real bc_mse(const std::vector<MatrixC<Real>>& precoders, const MatrixC<Real>& f,
            Index user, const MatrixC<Real>& h, const MatrixC<Real>& c_eta) {
  const Index dk = precoders[user].cols();
  if (f.cols() != dk || f.rows() != h.cols())
    throw ConfigError("receive filter has inconsistent dimensions");
  MatrixC<Real> fhh = f.adjoint() * h.adjoint();  // d_k x N
  Real mse = static_cast<Real>(dk);
  mse -= Real(2) * (fhh * precoders[user]).trace().real();
  for (const auto& p : precoders) mse += (fhh * p).squaredNorm();
  mse += (f.adjoint() * c_eta * f).trace().real();
  return mse;
}

/// MMSE receive filter of user k for one realization:
///   F = (H^H sum_i P_i P_i^H H + C_eta)^{-1} H^H P_k.
template <class Real>
MatrixC<Real> bc_mmse_receiver(const std::vector<MatrixC<Real>>& precoders,
                               Index user, const MatrixC<Real>& h,
                               const MatrixC<Real>& c_eta) {
  MatrixC<Real> a = received_covariance(precoders, h, c_eta);
  Eigen::LDLT<MatrixC<Real>> ldlt(a);
  if (ldlt.info() != Eigen::Success ||
      ldlt.vectorD().real().minCoeff() <= Real(0))
    throw NumericError("received-signal covariance is singular");
  return ldlt.solve((h.adjoint() * precoders[user]).eval());
}

/// Error covariance of user k with MMSE receivers for one realization,
///   Sigma_k = I - P_k^H H A^{-1} H^H P_k,  A = received covariance,
/// which equals (I + P_k^H H X_k^{-1} H^H P_k)^{-1} with X_k the
/// interference-plus-noise covariance.
template <class Real>
MatrixC<Real> mmse_error_covariance(const std::vector<MatrixC<Real>>& precoders,
                                    Index user, const MatrixC<Real>& h,
                                    const MatrixC<Real>& c_eta) {
  const Index dk = precoders[user].cols();
  MatrixC<Real> a = received_covariance(precoders, h, c_eta);
  MatrixC<Real> b = h.adjoint() * precoders[user];  // R x d_k
  Eigen::LDLT<MatrixC<Real>> ldlt(a);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("received-signal covariance factorization failed");
  MatrixC<Real> sigma = MatrixC<Real>::Identity(dk, dk) -
                        b.adjoint() * ldlt.solve(b).eval();
  return hermitian_part(sigma);
}

/// Sample average of the per-user MMSE error covariance with its sorted
/// eigendecomposition.
template <class Real>
SigmaStats<Real> sigma_stats(const std::vector<MatrixC<Real>>& precoders,
                             const ChannelSampleSet<Real>& set,
                             const PartialCsi<Real>& csi) {
  SigmaStats<Real> stats;
  for (Index k = 0; k < set.K; ++k) {
    const Index dk = precoders[k].cols();
    MatrixC<Real> sigma = MatrixC<Real>::Zero(dk, dk);
    for (Index m = 0; m < set.M; ++m)
      sigma += mmse_error_covariance(precoders, k, set.at(k, m), csi.C_eta[k]);
    sigma /= Real(set.M);
    VectorR<Real> lambda;
    MatrixC<Real> basis;
    sorted_hermitian_eig(sigma, lambda, basis);
    stats.sigma_bar.push_back(std::move(sigma));
    stats.lambda.push_back(std::move(lambda));
    stats.basis.push_back(std::move(basis));
  }
  return stats;
}

/// Right-multiplies each precoder by the eigenbasis of its averaged error
/// covariance. Diagonalizes the average error covariance without changing
/// transmit power or rates.
template <class Real>
std::vector<MatrixC<Real>> decorrelate(const std::vector<MatrixC<Real>>& precoders,
                                       const SigmaStats<Real>& stats) {
  std::vector<MatrixC<Real>> rotated;
  rotated.reserve(precoders.size());
  for (std::size_t k = 0; k < precoders.size(); ++k)
    rotated.push_back(precoders[k] * stats.basis[k]);
  return rotated;
}

/// Conditional average rate per user in bits per channel use, as the sample
/// average of log2 det(I + H^H P_k P_k^H H X_k^{-1}). The determinant
/// identity form -log2 det Sigma_k is evaluated on every sample as a
/// cross-check; disagreement beyond 1e-8 raises NumericError.
template <class Real>
VectorR<Real> average_rate(const std::vector<MatrixC<Real>>& precoders,
                           const ChannelSampleSet<Real>& set,
                           const PartialCsi<Real>& csi) {
  VectorR<Real> rates = VectorR<Real>::Zero(set.K);
  for (Index k = 0; k < set.K; ++k) {
    Real acc = Real(0);
    for (Index m = 0; m < set.M; ++m) {
      const MatrixC<Real>& h = set.at(k, m);
      MatrixC<Real> a = received_covariance(precoders, h, csi.C_eta[k]);
      MatrixC<Real> b = h.adjoint() * precoders[k];
      MatrixC<Real> x = hermitian_part<Real>(a - b * b.adjoint());
      Real direct = log2_det_hermitian(hermitian_part(a)) - log2_det_hermitian(x);
      MatrixC<Real> sigma = mmse_error_covariance(precoders, k, h, csi.C_eta[k]);
      Real via_sigma = -log2_det_hermitian(sigma);
      if (std::abs(direct - via_sigma) > Real(1e-8) * std::max(Real(1), std::abs(direct)))
        throw NumericError("rate determinant identity failed");
      acc += via_sigma;
    }
    rates(k) = acc / Real(set.M);
  }
  return rates;
}

/// Lower bound on the average rate from the averaged error covariance:
/// -sum_i log2 lambda_{k,i}. A zero eigenvalue yields +infinity.
template <class Real>
VectorR<Real> jensen_bound(const SigmaStats<Real>& stats) {
  VectorR<Real> bound(static_cast<Index>(stats.lambda.size()));
  for (std::size_t k = 0; k < stats.lambda.size(); ++k) {
    Real b = Real(0);
    for (Index i = 0; i < stats.lambda[k].size(); ++i) {
      Real lam = stats.lambda[k](i);
      if (lam <= Real(0)) {
        b = std::numeric_limits<Real>::infinity();
        break;
      }
      b -= std::log2(lam);
    }
    bound(static_cast<Index>(k)) = b;
  }
  return bound;
}

// ----------------------------------------------------------- dual uplink --

/// Quadratic couplings q[a][b] = g_a^H Theta_b g_a used by the average MMSE,
/// the power allocation and the Jacobian.
template <class Real>
MatrixR<Real> stream_couplings(const std::vector<VectorC<Real>>& g_tilde,
                               const Moments<Real>& moments) {
  const Index d = static_cast<Index>(g_tilde.size());
  MatrixR<Real> q(d, d);
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b)
      q(a, b) = (g_tilde[a].adjoint() * moments.theta[b] * g_tilde[a])(0).real();
  return q;
}

/// Scalarized average MMSE of each stream in the dual uplink:
///   1 - xi_a |g_a^H mu_a|^2 / y_a,
///   y_a = g_a^H (sum_b xi_b Theta_b) g_a + ||g_a||^2.
/// Invariant to rescaling any g_a by a nonzero complex scalar.
template <class Real, class Derived>
VectorR<Real> mac_mmse(const std::vector<VectorC<Real>>& g_tilde,
                       const Moments<Real>& moments,
                       const Eigen::MatrixBase<Derived>& xi_expr) {
  const VectorR<Real> xi = xi_expr;
  const Index d = static_cast<Index>(g_tilde.size());
  if (xi.size() != d) throw ConfigError("xi has the wrong number of streams");
  if (xi.minCoeff() < Real(0)) throw ConfigError("stream powers must be >= 0");
  MatrixR<Real> q = stream_couplings(g_tilde, moments);
  VectorR<Real> mmse(d);
  for (Index a = 0; a < d; ++a) {
    Real g_norm2 = g_tilde[a].squaredNorm();
    if (g_norm2 == Real(0)) throw NumericError("zero receive filter");
    Real y = q.row(a).dot(xi) + g_norm2;
    Real signal = std::norm((g_tilde[a].adjoint() * moments.mu[a])(0));
    mmse(a) = Real(1) - xi(a) * signal / y;
  }
  return mmse;
}

// ------------------------------------------------------------ feasibility --

/// Average MMSE matrix for the stacked effective uplink channel
/// Y^(m) = [sqrt(xi_a) W_k^(m) tau_a^(m)]_a:
///   E = I_d - E[Y]^H (E[Y Y^H] + sigma2 I_N)^{-1} E[Y].
/// The zero-noise bound uses the pseudoinverse, so rank-deficient
/// deterministic channels are handled.
template <class Real, class Derived>
FeasibilityReport<Real> feasibility_matrix(const SampleMatrices<Real>& whitened,
                                           const StreamLayout& layout,
                                           const TauSet<Real>& tau,
                                           const Eigen::MatrixBase<Derived>& xi_expr,
                                           Real sigma2) {
  if (sigma2 < Real(0)) throw ConfigError("sigma2 must be >= 0");
  const VectorR<Real> xi = xi_expr;
  const Index d = layout.total_streams();
  const Index n = whitened[0][0].rows();
  const Index m_count = static_cast<Index>(whitened[0].size());
  MatrixC<Real> upsilon_mean = MatrixC<Real>::Zero(n, d);
  MatrixC<Real> second_moment = MatrixC<Real>::Zero(n, n);
  for (Index m = 0; m < m_count; ++m) {
    MatrixC<Real> upsilon(n, d);
    for (Index a = 0; a < d; ++a) {
      const Index k = layout.user_of(a);
      upsilon.col(a) = std::sqrt(xi(a)) * (whitened[k][m] * tau[a][m]);
    }
    upsilon_mean += upsilon;
    second_moment += upsilon * upsilon.adjoint();
  }
  upsilon_mean /= Real(m_count);
  second_moment = hermitian_part<Real>(second_moment / Real(m_count));

  FeasibilityReport<Real> report;
  report.sigma2 = sigma2;
  MatrixC<Real> zero_noise_term =
      upsilon_mean.adjoint() * hermitian_pinv(second_moment) * upsilon_mean;
  report.bound_rhs = static_cast<Real>(d) - zero_noise_term.trace().real();
  if (sigma2 == Real(0)) {
    report.e_matrix = hermitian_part<Real>(
        MatrixC<Real>::Identity(d, d) - zero_noise_term);
  } else {
    MatrixC<Real> reg = second_moment +
                        sigma2 * MatrixC<Real>::Identity(n, n);
    Eigen::LDLT<MatrixC<Real>> ldlt(reg);
    report.e_matrix = hermitian_part<Real>(
        MatrixC<Real>::Identity(d, d) -
        upsilon_mean.adjoint() * ldlt.solve(upsilon_mean).eval());
  }
  return report;
}

/// Verdict for per-stream rate targets: sum_a 2^{-rho_a} <= bound_rhs
/// (non-strict). Depends on the targets only through the sum, so any
/// redistribution with equal sum gets the same verdict.
template <class Real, class Derived>
bool check_feasibility(const Eigen::MatrixBase<Derived>& rho_expr,
                       FeasibilityReport<Real>& report) {
  const VectorR<Real> rho_streams = rho_expr;
  if (rho_streams.minCoeff() < Real(0))
    throw ConfigError("per-stream rate targets must be >= 0");
  Real lhs = Real(0);
  for (Index a = 0; a < rho_streams.size(); ++a)
    lhs += std::exp2(-rho_streams(a));
  report.lhs = lhs;
  report.feasible = lhs <= report.bound_rhs;
  return report.feasible;
}

}  // namespace msbc
