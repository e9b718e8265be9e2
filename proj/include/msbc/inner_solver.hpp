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
// Minimum-power solver for fixed per-stream rate targets. Every stream is a
// virtual user in the dual uplink: base-station receive filters depend only
// on the statistical channel knowledge, while the per-sample unit-norm
// user-side precoders adapt to each realization. The solver alternates
//   receive filters -> power allocation -> per-sample precoders -> moments
// until the total power settles, then maps the result back to downlink
// precoders through an MSE-preserving conversion.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <type_traits>
#include <vector>

#include "msbc/channel.hpp"
#include "msbc/mse_core.hpp"
#include "msbc/types.hpp"

namespace msbc {

/// Dual-uplink solution state for one set of per-stream targets.
template <class Real>
struct MacState {
  StreamLayout layout;
  VectorR<Real> rho;              // per-stream rate targets (0 = inactive)
  std::vector<bool> active;       // rho > 0
  VectorR<Real> xi;               // per-stream average powers, 0 for inactive
  TauSet<Real> tau;               // [stream][sample] unit-norm R-vectors
  std::vector<VectorC<Real>> g_tilde;  // unit-norm N-vectors
  std::vector<Cplx<Real>> r;      // scalar equalizers (reporting only)
  Moments<Real> moments;
  VectorR<Real> achieved_mmse;    // 1 for inactive streams
  Real total_power = Real(0);
  bool converged = false;
  int iterations = 0;
  int tau_fallbacks = 0;
};

/// Downlink solution produced from a converged MacState.
template <class Real>
struct BcSolution {
  StreamLayout layout;
  std::vector<MatrixC<Real>> P;   // per user, N x d_k (zero column = off)
  VectorR<Real> rho_streams;
  std::vector<bool> active;
  VectorR<Real> xi;               // dual-uplink powers (reporting)
  VectorR<Real> mac_mmse;         // per-stream average MMSE in the dual MAC
  VectorR<Real> bc_mmse;          // per-stream, per-sample MMSE receivers
  VectorR<Real> user_rates;       // in-sample conditional average rates
  Real total_power = Real(0);
  Real duality_power_residual = Real(0);
  Real duality_mse_residual = Real(0);
};

/// Infeasible per-stream targets, with the zero-noise feasibility summary
/// for the filters the solver had when the power allocation failed.
template <class Real>
class InfeasibleProblemError : public InfeasibleTargetsError {
 public:
  InfeasibleProblemError(const std::string& msg, FeasibilityReport<Real> rep)
      : InfeasibleTargetsError(msg), report(std::move(rep)) {}
  FeasibilityReport<Real> report;
};

/// Inner iteration cap reached; carries the best state found.
template <class Real>
class InnerStallError : public ConvergenceError {
 public:
  InnerStallError(const std::string& msg, MacState<Real> state)
      : ConvergenceError(msg, static_cast<double>(state.total_power),
                         state.iterations),
        best(std::move(state)) {}
  MacState<Real> best;
};

template <class Real>
struct InnerOptions {
  Real tol = Real(1e-8);  // absolute tolerance on the total power
  int max_iters = 500;
};

// -------------------------------------------------------------- receivers --

/// Average-MMSE receive filters g_a = (sum_b xi_b Theta_b + I_N)^{-1} mu_a.
/// Returned unnormalized; the scalarized average MMSE is invariant to the
/// scale of g_a.
template <class Real, class Derived>
std::vector<VectorC<Real>> update_receivers(const Moments<Real>& moments,
                                            const Eigen::MatrixBase<Derived>& xi_expr) {
  const VectorR<Real> xi = xi_expr;
  const Index d = static_cast<Index>(moments.mu.size());
  if (xi.size() != d) throw ConfigError("xi has the wrong number of streams");
  if (d == 0) return {};
  const Index n = moments.mu[0].size();
  MatrixC<Real> phi = MatrixC<Real>::Identity(n, n);
  for (Index b = 0; b < d; ++b) phi += xi(b) * moments.theta[b];
  Eigen::LDLT<MatrixC<Real>> ldlt(phi);
  std::vector<VectorC<Real>> g;
  g.reserve(d);
  for (Index a = 0; a < d; ++a) g.push_back(ldlt.solve(moments.mu[a]));
  return g;
}

// -------------------------------------------------------- power allocation --

/// Powers meeting the average-MMSE targets with equality for the current
/// filters. Setting each stream's scalarized MMSE to its target eps_a gives
/// the linear system
///   xi_a |g_a^H mu_a|^2 - (1 - eps_a) sum_b q_ab xi_b = (1 - eps_a) ||g_a||^2
/// over the streams with eps_a < 1; streams with eps_a = 1 get zero power
/// and cause no interference. Throws InfeasibleTargetsError when the system
/// has no positive solution.
template <class Real, class Derived>
VectorR<Real> solve_power_allocation(const std::vector<VectorC<Real>>& g_tilde,
                                     const Moments<Real>& moments,
                                     const Eigen::MatrixBase<Derived>& eps_expr) {
  const VectorR<Real> eps_targets = eps_expr;
  const Index d = static_cast<Index>(g_tilde.size());
  if (eps_targets.size() != d)
    throw ConfigError("targets have the wrong number of streams");
  for (Index a = 0; a < d; ++a)
    if (!(eps_targets(a) > Real(0)) || eps_targets(a) > Real(1))
      throw ConfigError("MMSE targets must lie in (0, 1]");

  std::vector<Index> on;
  for (Index a = 0; a < d; ++a)
    if (eps_targets(a) < Real(1)) on.push_back(a);
  VectorR<Real> xi = VectorR<Real>::Zero(d);
  if (on.empty()) return xi;

  MatrixR<Real> q = stream_couplings(g_tilde, moments);
  const Index na = static_cast<Index>(on.size());
  MatrixR<Real> sys(na, na);
  VectorR<Real> rhs(na);
  for (Index ia = 0; ia < na; ++ia) {
    const Index a = on[ia];
    const Real eps = eps_targets(a);
    const Real signal = std::norm((g_tilde[a].adjoint() * moments.mu[a])(0));
    for (Index ib = 0; ib < na; ++ib) {
      const Index b = on[ib];
      sys(ia, ib) = (a == b ? signal : Real(0)) - (Real(1) - eps) * q(a, b);
    }
    rhs(ia) = (Real(1) - eps) * g_tilde[a].squaredNorm();
  }
  Eigen::FullPivLU<MatrixR<Real>> lu(sys);
  if (!lu.isInvertible())
    throw InfeasibleTargetsError("targets infeasible for current filters");
  VectorR<Real> sol = lu.solve(rhs);
  if (sol.minCoeff() <= Real(0))
    throw InfeasibleTargetsError("targets infeasible for current filters");
  for (Index ia = 0; ia < na; ++ia) xi(on[ia]) = sol(ia);

  VectorR<Real> achieved = mac_mmse(g_tilde, moments, xi);
  for (Index a : on)
    if (std::abs(achieved(a) - eps_targets(a)) > Real(1e-10))
      throw NumericError("power allocation missed its targets");
  return xi;
}

// -------------------------------------------------------------- precoders --

/// Per-sample user-side precoders: for realization m, tau_a is the
/// normalized MMSE receiver of the conjugate downlink that transmits
/// sqrt(xi_b) g_b over the whitened channel,
///   tau_a ~ (I_R + W^H G Xi G^H W)^{-1} W^H g_a.
/// A numerically zero direction keeps the previous precoder; the number of
/// such fallbacks is reported through fallback_count.
template <class Real, class Derived>
TauSet<Real> update_precoders_per_sample(const std::vector<VectorC<Real>>& g_tilde,
                                         const Eigen::MatrixBase<Derived>& xi_expr,
                                         const SampleMatrices<Real>& whitened,
                                         const StreamLayout& layout,
                                         const TauSet<Real>* previous = nullptr,
                                         int* fallback_count = nullptr) {
  const VectorR<Real> xi = xi_expr;
  const Index d = layout.total_streams();
  const Index n = g_tilde.empty() ? 0 : g_tilde[0].size();
  MatrixC<Real> gxg = MatrixC<Real>::Zero(n, n);
  for (Index b = 0; b < d; ++b)
    gxg += xi(b) * (g_tilde[b] * g_tilde[b].adjoint());

  TauSet<Real> tau(d);
  for (Index k = 0; k < layout.users(); ++k) {
    const Index m_count = static_cast<Index>(whitened[k].size());
    for (Index i = 0; i < layout.streams_of(k); ++i)
      tau[layout.flat(k, i)].resize(m_count);
    for (Index m = 0; m < m_count; ++m) {
      const MatrixC<Real>& w = whitened[k][m];
      const Index r_dim = w.cols();
      MatrixC<Real> cov = MatrixC<Real>::Identity(r_dim, r_dim) +
                          w.adjoint() * gxg * w;
      Eigen::LDLT<MatrixC<Real>> ldlt(cov);
      for (Index i = 0; i < layout.streams_of(k); ++i) {
        const Index a = layout.flat(k, i);
        VectorC<Real> dir = ldlt.solve((w.adjoint() * g_tilde[a]).eval());
        Real norm = dir.norm();
        if (norm > Real(0)) {
          tau[a][m] = dir / norm;
        } else if (previous) {
          tau[a][m] = (*previous)[a][m];
          if (fallback_count) ++*fallback_count;
        } else {
          tau[a][m] = VectorC<Real>::Unit(r_dim, 0);
          if (fallback_count) ++*fallback_count;
        }
      }
    }
  }
  return tau;
}

namespace detail {

/// Cold-start precoders: stream i of user k starts from the i-th right
/// singular vector of each whitened realization, phases fixed.
template <class Real>
TauSet<Real> initial_tau(const SampleMatrices<Real>& whitened,
                         const StreamLayout& layout) {
  TauSet<Real> tau(layout.total_streams());
  for (Index k = 0; k < layout.users(); ++k) {
    const Index m_count = static_cast<Index>(whitened[k].size());
    for (Index i = 0; i < layout.streams_of(k); ++i)
      tau[layout.flat(k, i)].resize(m_count);
    for (Index m = 0; m < m_count; ++m) {
      Eigen::JacobiSVD<MatrixC<Real>> svd(whitened[k][m], Eigen::ComputeThinV);
      MatrixC<Real> v = svd.matrixV();
      fix_column_phases(v);
      for (Index i = 0; i < layout.streams_of(k); ++i)
        tau[layout.flat(k, i)][m] = v.col(i);
    }
  }
  return tau;
}

/// Receive filters with the dummy-stream rule: active streams see the full
/// active interference; an inactive stream is updated with unit virtual
/// power on itself and no contribution from other inactive streams. All
/// filters are normalized to unit norm.
template <class Real>
std::vector<VectorC<Real>> masked_receivers(const Moments<Real>& moments,
                                            const VectorR<Real>& xi,
                                            const std::vector<bool>& active) {
  const Index d = static_cast<Index>(moments.mu.size());
  const Index n = moments.mu.empty() ? 0 : moments.mu[0].size();
  MatrixC<Real> phi = MatrixC<Real>::Identity(n, n);
  for (Index b = 0; b < d; ++b)
    if (active[b]) phi += xi(b) * moments.theta[b];
  Eigen::LDLT<MatrixC<Real>> base(phi);
  std::vector<VectorC<Real>> g(d);
  for (Index a = 0; a < d; ++a) {
    if (active[a]) {
      g[a] = base.solve(moments.mu[a]);
    } else {
      Eigen::LDLT<MatrixC<Real>> own(
          (phi + moments.theta[a]).eval());
      g[a] = own.solve(moments.mu[a]);
    }
    Real norm = g[a].norm();
    if (norm > Real(0)) g[a] /= norm;
  }
  return g;
}

template <class Real>
FeasibilityReport<Real> feasibility_snapshot(const SampleMatrices<Real>& whitened,
                                             const StreamLayout& layout,
                                             const TauSet<Real>& tau,
                                             const VectorR<Real>& xi,
                                             const std::vector<bool>& active) {
  // With no powers solved yet, probe with unit power on active streams.
  VectorR<Real> weights = xi;
  if (weights.maxCoeff() <= Real(0))
    for (Index a = 0; a < weights.size(); ++a)
      weights(a) = active[a] ? Real(1) : Real(0);
  return feasibility_matrix(whitened, layout, tau, weights, Real(0));
}

/// Core alternating solver on pre-whitened samples.
template <class Real>
MacState<Real> solve_inner_whitened(const VectorR<Real>& rho_streams,
                                    const StreamLayout& layout,
                                    const SampleMatrices<Real>& whitened,
                                    const MacState<Real>* warm_start = nullptr,
                                    const InnerOptions<Real>& opts = {}) {
  const Index d = layout.total_streams();
  if (rho_streams.size() != d)
    throw ConfigError("rho has the wrong number of streams");
  if (rho_streams.minCoeff() < Real(0))
    throw ConfigError("per-stream rate targets must be >= 0");

  MacState<Real> state;
  state.layout = layout;
  state.rho = rho_streams;
  state.active.resize(d);
  VectorR<Real> eps(d);
  bool any_active = false;
  for (Index a = 0; a < d; ++a) {
    state.active[a] = rho_streams(a) > Real(0);
    eps(a) = std::exp2(-rho_streams(a));
    any_active = any_active || state.active[a];
  }

  VectorR<Real> probe = VectorR<Real>::Zero(d);
  for (Index a = 0; a < d; ++a)
    if (state.active[a]) probe(a) = Real(1);

  int iteration = 0;
  if (warm_start && !warm_start->tau.empty()) {
    state.tau = warm_start->tau;
    state.xi = warm_start->xi;
    for (Index a = 0; a < d; ++a)
      if (!state.active[a]) state.xi(a) = Real(0);
    state.moments = estimate_moments_whitened(whitened, layout, state.tau);
  } else {
    // Cold start: the equality system only admits a positive solution once
    // the filters point somewhere useful, so refine them at unit probe
    // powers until the targets become reachable (capped).
    state.tau = initial_tau(whitened, layout);
    state.xi = probe;
    state.moments = estimate_moments_whitened(whitened, layout, state.tau);
    for (int round = 0; any_active && round < 5; ++round) {
      ++iteration;
      state.g_tilde = masked_receivers(state.moments, probe, state.active);
      bool reachable = true;
      try {
        solve_power_allocation(state.g_tilde, state.moments, eps);
      } catch (const InfeasibleTargetsError&) {
        reachable = false;
      }
      if (reachable) break;
      state.tau = update_precoders_per_sample(state.g_tilde, probe, whitened,
                                              layout, &state.tau,
                                              &state.tau_fallbacks);
      state.moments = estimate_moments_whitened(whitened, layout, state.tau);
    }
  }

  Real prev_power = std::numeric_limits<Real>::infinity();
  for (int it = 1; it <= opts.max_iters; ++it) {
    state.iterations = ++iteration;
    state.g_tilde = masked_receivers(state.moments, state.xi, state.active);
    if (!any_active) break;
    try {
      state.xi = solve_power_allocation(state.g_tilde, state.moments, eps);
    } catch (const InfeasibleTargetsError&) {
      throw InfeasibleProblemError<Real>(
          "per-stream targets are infeasible",
          feasibility_snapshot(whitened, layout, state.tau, state.xi,
                               state.active));
    }
    state.total_power = state.xi.sum();
    if (std::abs(prev_power - state.total_power) < opts.tol) {
      state.converged = true;
      break;
    }
    prev_power = state.total_power;
    state.tau = update_precoders_per_sample(state.g_tilde, state.xi, whitened,
                                            layout, &state.tau,
                                            &state.tau_fallbacks);
    state.moments = estimate_moments_whitened(whitened, layout, state.tau);
  }
  if (!any_active) {
    state.total_power = Real(0);
    state.converged = true;
  }

  state.achieved_mmse = mac_mmse(state.g_tilde, state.moments, state.xi);
  state.r.resize(d);
  MatrixR<Real> q = stream_couplings(state.g_tilde, state.moments);
  for (Index a = 0; a < d; ++a) {
    Real y = q.row(a).dot(state.xi) + state.g_tilde[a].squaredNorm();
    Cplx<Real> u = (state.g_tilde[a].adjoint() * state.moments.mu[a])(0);
    state.r[a] = std::sqrt(state.xi(a)) * u / y;
  }

  if (!state.converged)
    throw InnerStallError<Real>("inner solver hit its iteration cap", state);
  return state;
}

}  // namespace detail

/// Minimum total power for the given per-stream rate targets. Streams with
/// a zero target are inactive: they carry no power and no interference but
/// their filters keep updating with unit virtual power so gradients stay
/// informative. Throws InfeasibleProblemError (with a feasibility summary)
/// when the targets cannot be met, InnerStallError past the iteration cap.
template <class Real, class Derived>
MacState<Real> solve_inner(const Eigen::MatrixBase<Derived>& rho_streams,
                           const StreamLayout& layout,
                           const ChannelSampleSet<Real>& samples,
                           const PartialCsi<Real>& csi,
                           std::type_identity_t<const MacState<Real>*> warm_start = nullptr,
                           const InnerOptions<Real>& opts = {}) {
  return detail::solve_inner_whitened(VectorR<Real>(rho_streams), layout,
                                      whiten_samples(samples, csi), warm_start,
                                      opts);
}

// ---------------------------------------------------------------- duality --

/// Converts a converged dual-uplink state to downlink precoders. The column
/// for stream a is beta_a * g_a, where the power shares x = beta^2 solve the
/// linear system equating every stream's downlink average MSE (with the
/// conversion receivers) to its uplink average MMSE:
///   x_a y_a - xi_a sum_b (g_b^H Theta_a g_b) x_b = xi_a.
/// Unit-norm receive filters make the conversion conserve the total power
/// exactly; both conservation contracts are verified numerically.
template <class Real>
BcSolution<Real> mac_to_bc(const MacState<Real>& state,
                           const ChannelSampleSet<Real>& samples,
                           const PartialCsi<Real>& csi) {
  const StreamLayout& layout = state.layout;
  const Index d = layout.total_streams();

  std::vector<Index> on;
  for (Index a = 0; a < d; ++a)
    if (state.active[a] && state.xi(a) > Real(0)) on.push_back(a);

  BcSolution<Real> bc;
  bc.layout = layout;
  bc.rho_streams = state.rho;
  bc.active = state.active;
  bc.xi = state.xi;
  bc.mac_mmse = state.achieved_mmse;

  VectorR<Real> beta_sq = VectorR<Real>::Zero(d);
  if (!on.empty()) {
    MatrixR<Real> q = stream_couplings(state.g_tilde, state.moments);
    const Index na = static_cast<Index>(on.size());
    MatrixR<Real> sys(na, na);
    VectorR<Real> rhs(na);
    for (Index ia = 0; ia < na; ++ia) {
      const Index a = on[ia];
      Real y = state.g_tilde[a].squaredNorm();
      for (Index b : on) y += state.xi(b) * q(a, b);
      for (Index ib = 0; ib < na; ++ib) {
        const Index b = on[ib];
        sys(ia, ib) = (a == b ? y : Real(0)) - state.xi(a) * q(b, a);
      }
      rhs(ia) = state.xi(a);
    }
    Eigen::FullPivLU<MatrixR<Real>> lu(sys);
    if (!lu.isInvertible())
      throw DualityError("downlink conversion system is singular");
    VectorR<Real> x = lu.solve(rhs);
    if (x.minCoeff() <= Real(0))
      throw DualityError("downlink conversion produced nonpositive powers");
    for (Index ia = 0; ia < na; ++ia) beta_sq(on[ia]) = x(ia);

    Real mac_total = state.xi.sum();
    bc.duality_power_residual =
        std::abs(beta_sq.sum() - mac_total) / std::max(mac_total, Real(1e-300));
    if (bc.duality_power_residual > Real(1e-8))
      throw DualityError("downlink conversion broke power conservation");
  }

  bc.P.reserve(layout.users());
  for (Index k = 0; k < layout.users(); ++k) {
    MatrixC<Real> p = MatrixC<Real>::Zero(csi.tx_antennas(), layout.streams_of(k));
    for (Index i = 0; i < layout.streams_of(k); ++i) {
      const Index a = layout.flat(k, i);
      if (beta_sq(a) > Real(0))
        p.col(i) = std::sqrt(beta_sq(a)) * state.g_tilde[a];
    }
    bc.P.push_back(std::move(p));
  }
  bc.total_power = beta_sq.sum();

  // Per-stream downlink average MMSE with per-sample MMSE receivers.
  bc.bc_mmse = VectorR<Real>::Zero(d);
  for (Index k = 0; k < layout.users(); ++k) {
    VectorR<Real> diag = VectorR<Real>::Zero(layout.streams_of(k));
    for (Index m = 0; m < samples.M; ++m)
      diag += mmse_error_covariance(bc.P, k, samples.at(k, m), csi.C_eta[k])
                  .diagonal()
                  .real();
    diag /= Real(samples.M);
    for (Index i = 0; i < layout.streams_of(k); ++i)
      bc.bc_mmse(layout.flat(k, i)) = diag(i);
  }
  Real mse_resid = Real(0);
  for (Index a : on)
    mse_resid = std::max(mse_resid,
                         std::abs(bc.bc_mmse(a) - state.achieved_mmse(a)));
  bc.duality_mse_residual = mse_resid;

  bc.user_rates = average_rate(bc.P, samples, csi);
  return bc;
}

}  // namespace msbc
