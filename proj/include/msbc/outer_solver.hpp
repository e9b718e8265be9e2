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
// Projected-gradient search over the per-stream rate split. Each outer
// iteration differentiates the minimum total power with respect to the
// per-stream targets through the Jacobian of the average MMSEs in the
// stream powers, steps against the gradient, projects every user's targets
// back onto its simplex, re-solves the inner problem and accepts the step
// only if the power decreased (halving the step otherwise).

#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "msbc/inner_solver.hpp"
#include "msbc/random.hpp"
#include "msbc/types.hpp"

namespace msbc {

/// Per-stream rate split: nonnegative targets whose per-user sums equal the
/// user rate targets.
template <class Real>
struct RateAllocation {
  StreamLayout layout;
  VectorR<Real> rho_streams;
  std::vector<Real> rho_users;

  std::vector<bool> active_mask() const {
    std::vector<bool> mask(rho_streams.size());
    for (Index a = 0; a < rho_streams.size(); ++a)
      mask[a] = rho_streams(a) > Real(0);
    return mask;
  }

  void validate(Real tol = Real(1e-12)) const {
    if (rho_streams.minCoeff() < Real(0))
      throw ConfigError("per-stream targets must be >= 0");
    for (Index k = 0; k < layout.users(); ++k) {
      Real sum = rho_streams.segment(layout.offset(k), layout.streams_of(k)).sum();
      if (std::abs(sum - rho_users[k]) > tol * std::max(Real(1), rho_users[k]))
        throw ConfigError("per-stream targets do not sum to the user rate");
    }
  }
};

/// Equal split rho_k / d_k on every stream of user k.
template <class Real>
RateAllocation<Real> equal_split(const StreamLayout& layout,
                                 const std::vector<Real>& rho_users) {
  RateAllocation<Real> alloc{layout, VectorR<Real>(layout.total_streams()),
                             rho_users};
  for (Index k = 0; k < layout.users(); ++k)
    alloc.rho_streams.segment(layout.offset(k), layout.streams_of(k))
        .setConstant(rho_users[k] / Real(layout.streams_of(k)));
  return alloc;
}

/// Uniformly random split of each user's rate over its streams.
template <class Real>
RateAllocation<Real> random_split(const StreamLayout& layout,
                                  const std::vector<Real>& rho_users,
                                  std::mt19937_64& rng) {
  RateAllocation<Real> alloc{layout, VectorR<Real>(layout.total_streams()),
                             rho_users};
  for (Index k = 0; k < layout.users(); ++k)
    alloc.rho_streams.segment(layout.offset(k), layout.streams_of(k)) =
        random_simplex_point<Real>(layout.streams_of(k), rho_users[k], rng);
  return alloc;
}

/// Jacobian of the per-stream average MMSEs in the stream powers together
/// with the resulting gradient of the total power in the targets.
template <class Real>
struct GradientBundle {
  MatrixR<Real> jacobian;     // d x d, [a][b] = d MMSE_a / d xi_b
  VectorR<Real> target_diag;  // 2^{-rho_a}
  VectorR<Real> grad;         // d P_T / d rho_a, positive
};

/// Trace row for one accepted outer iteration.
template <class Real>
struct OuterTraceRow {
  int iter = 0;
  Real total_power = Real(0);
  Real step = Real(0);
  int halvings = 0;
  std::vector<bool> active;
  VectorR<Real> rho;
  VectorR<Real> xi;
};

enum class OuterStatus { converged, stalled };

template <class Real>
struct OuterTrace {
  std::vector<OuterTraceRow<Real>> rows;
  OuterStatus status = OuterStatus::stalled;
  int outer_iterations = 0;
};

// ---------------------------------------------------------------- Jacobian --

/// d MMSE_a / d xi_b at the converged state. Inactive streams use unit
/// virtual power on themselves and are invisible to every other stream, so
/// the active sub-block is unaffected by dummies while dummy rows stay
/// informative:
///   J_aa = -(|u_a|^2 / y_a^2) (y_a - xi_a q_aa),
///   J_ab = xi_a |u_a|^2 q_ab / y_a^2   (b active),   J_ab = 0 otherwise,
/// with u_a = g_a^H mu_a and q_ab = g_a^H Theta_b g_a.
template <class Real>
MatrixR<Real> compute_jacobian(const MacState<Real>& state) {
  const Index d = state.layout.total_streams();
  MatrixR<Real> q = stream_couplings(state.g_tilde, state.moments);
  MatrixR<Real> jac = MatrixR<Real>::Zero(d, d);
  for (Index a = 0; a < d; ++a) {
    const Real virtual_xi = state.active[a] ? state.xi(a) : Real(1);
    Real y = state.g_tilde[a].squaredNorm();
    for (Index b = 0; b < d; ++b)
      if (state.active[b]) y += state.xi(b) * q(a, b);
    if (!state.active[a]) y += virtual_xi * q(a, a);
    const Real signal = std::norm((state.g_tilde[a].adjoint() *
                                   state.moments.mu[a])(0));
    const Real y2 = y * y;
    jac(a, a) = -(signal / y2) * (y - virtual_xi * q(a, a));
    for (Index b = 0; b < d; ++b) {
      if (b == a || !state.active[b]) continue;
      jac(a, b) = virtual_xi * signal * q(a, b) / y2;
    }
  }
  return jac;
}

/// Gradient of the minimum total power in the per-stream targets,
///   grad_a = -ln(2) * 2^{-rho_a} * [J^{-T} 1]_a,
/// positive elementwise because -J is a nonsingular M-matrix.
template <class Real, class Derived>
VectorR<Real> power_gradient(const MatrixR<Real>& jacobian,
                             const Eigen::MatrixBase<Derived>& rho_expr) {
  const VectorR<Real> rho_streams = rho_expr;
  const Index d = jacobian.rows();
  Eigen::FullPivLU<MatrixR<Real>> lu(jacobian.transpose());
  if (!lu.isInvertible())
    throw NumericError("MMSE Jacobian is singular");
  VectorR<Real> z = lu.solve(VectorR<Real>::Ones(d));
  VectorR<Real> grad(d);
  const Real ln2 = std::log(Real(2));
  for (Index a = 0; a < d; ++a)
    grad(a) = -ln2 * std::exp2(-rho_streams(a)) * z(a);
  return grad;
}

template <class Real>
GradientBundle<Real> gradient_bundle(const MacState<Real>& state) {
  GradientBundle<Real> bundle;
  bundle.jacobian = compute_jacobian(state);
  bundle.target_diag = state.rho.unaryExpr([](Real r) { return std::exp2(-r); });
  bundle.grad = power_gradient(bundle.jacobian, state.rho);
  return bundle;
}

// -------------------------------------------------------------- projection --

/// Exact Euclidean projection onto {x >= 0, sum x = rho_k}. The water level
/// is re-solved over the surviving positive support until no entry clips,
/// which handles inputs where the single-pass level would go negative.
template <class Derived>
VectorR<typename Derived::Scalar> project_per_user(
    const Eigen::MatrixBase<Derived>& rho_prime_expr,
    typename Derived::Scalar rho_k) {
  using Real = typename Derived::Scalar;
  if (!(rho_k > Real(0))) throw ConfigError("user rate target must be > 0");
  const VectorR<Real> rho_prime = rho_prime_expr;
  const Index n = rho_prime.size();
  std::vector<bool> support(n, true);
  Real level = Real(0);
  for (;;) {
    Real sum = Real(0);
    Index count = 0;
    for (Index i = 0; i < n; ++i)
      if (support[i]) {
        sum += rho_prime(i);
        ++count;
      }
    level = (sum - rho_k) / Real(count);
    bool clipped = false;
    for (Index i = 0; i < n; ++i)
      if (support[i] && rho_prime(i) - level <= Real(0)) {
        support[i] = false;
        clipped = true;
      }
    if (!clipped) break;
  }
  VectorR<Real> out = VectorR<Real>::Zero(n);
  for (Index i = 0; i < n; ++i)
    if (support[i]) out(i) = rho_prime(i) - level;
  return out;
}

/// Applies the per-user projection to a full per-stream vector.
template <class Real>
VectorR<Real> project_allocation(const VectorR<Real>& rho_prime,
                                 const StreamLayout& layout,
                                 const std::vector<Real>& rho_users) {
  VectorR<Real> out(rho_prime.size());
  for (Index k = 0; k < layout.users(); ++k)
    out.segment(layout.offset(k), layout.streams_of(k)) = project_per_user(
        rho_prime.segment(layout.offset(k), layout.streams_of(k)).eval(),
        rho_users[k]);
  return out;
}

// ----------------------------------------------------------- dummy filters --

/// Re-marks streams as active/inactive on an existing state: inactive
/// streams drop to zero power and get their receive filter refreshed with
/// unit virtual power, active streams are untouched.
template <class Real>
MacState<Real> apply_dummy_filters(const MacState<Real>& state,
                                   const std::vector<bool>& active_mask) {
  MacState<Real> out = state;
  out.active = active_mask;
  bool changed = false;
  for (Index a = 0; a < state.layout.total_streams(); ++a)
    if (!active_mask[a]) {
      out.xi(a) = Real(0);
      changed = true;
    }
  if (!changed) return out;
  out.g_tilde = detail::masked_receivers(out.moments, out.xi, out.active);
  out.total_power = out.xi.sum();
  out.achieved_mmse = mac_mmse(out.g_tilde, out.moments, out.xi);
  return out;
}

// --------------------------------------------------------------- main loop --

template <class Real>
struct OuterOptions {
  Real s0 = Real(2);
  Real gamma = Real(1e-5);
  int max_outer_iters = 100;
  int max_step_halvings = 40;
  InnerOptions<Real> inner;
  /// Called after the initial solve and after every accepted iteration.
  std::function<void(const OuterTraceRow<Real>&, const MacState<Real>&)>
      on_accept;
};

template <class Real>
struct OuterResult {
  BcSolution<Real> solution;
  OuterTrace<Real> trace;
  MacState<Real> state;
  RateAllocation<Real> allocation;
};

/// State needed to continue an interrupted run bit-exactly.
template <class Real>
struct OuterResume {
  MacState<Real> state;
  std::vector<OuterTraceRow<Real>> rows;
  int next_iter = 1;
};

namespace detail {

template <class Real>
OuterTraceRow<Real> make_row(int iter, const MacState<Real>& state, Real step,
                             int halvings) {
  OuterTraceRow<Real> row;
  row.iter = iter;
  row.total_power = state.total_power;
  row.step = step;
  row.halvings = halvings;
  row.active = state.active;
  row.rho = state.rho;
  row.xi = state.xi;
  return row;
}

}  // namespace detail

/// Full outer optimization. Starts from the given split, accepts a step as
/// soon as the inner power strictly decreases, halves the step otherwise,
/// and stops once an accepted improvement is at most gamma (converged), the
/// halving or iteration caps are hit (stalled), or the projected step stops
/// moving the targets (converged; nothing left to optimize).
template <class Real>
OuterResult<Real> minimize_power(const RateAllocation<Real>& initial,
                                 const ChannelSampleSet<Real>& samples,
                                 const PartialCsi<Real>& csi,
                                 const OuterOptions<Real>& opts = {},
                                 const OuterResume<Real>* resume = nullptr) {
  initial.validate();
  const StreamLayout& layout = initial.layout;
  SampleMatrices<Real> whitened = whiten_samples(samples, csi);

  OuterResult<Real> result;
  result.allocation = initial;
  OuterTrace<Real>& trace = result.trace;

  MacState<Real> best;
  int first_iter = 1;
  if (resume) {
    best = resume->state;
    result.allocation.rho_streams = best.rho;
    trace.rows = resume->rows;
    first_iter = resume->next_iter;
  } else {
    best = detail::solve_inner_whitened(initial.rho_streams, layout, whitened,
                                        static_cast<MacState<Real>*>(nullptr),
                                        opts.inner);
    trace.rows.push_back(detail::make_row(0, best, Real(0), 0));
    if (opts.on_accept) opts.on_accept(trace.rows.back(), best);
  }

  OuterStatus status = OuterStatus::stalled;
  int iter = first_iter;
  for (; iter <= opts.max_outer_iters; ++iter) {
    VectorR<Real> grad = power_gradient(compute_jacobian(best), best.rho);
    Real step = opts.s0;
    bool found = false;
    MacState<Real> candidate;
    int halvings = 0;
    for (; halvings <= opts.max_step_halvings; ++halvings, step /= Real(2)) {
      VectorR<Real> rho_cand = project_allocation<Real>(
          best.rho - step * grad, layout, initial.rho_users);
      Real move = (rho_cand - best.rho).template lpNorm<Eigen::Infinity>();
      if (move <= Real(1e-14)) {
        // The projection maps the step back onto the current split; the
        // split cannot improve.
        status = OuterStatus::converged;
        found = false;
        break;
      }
      try {
        candidate = detail::solve_inner_whitened(rho_cand, layout, whitened,
                                                 &best, opts.inner);
      } catch (const InfeasibleTargetsError&) {
        continue;  // step moved into an infeasible split; halve
      } catch (const ConvergenceError&) {
        continue;
      }
      if (best.total_power - candidate.total_power > Real(0)) {
        found = true;
        break;
      }
    }
    if (!found) {
      if (status != OuterStatus::converged && halvings > opts.max_step_halvings)
        status = OuterStatus::stalled;
      break;
    }
    Real improvement = best.total_power - candidate.total_power;
    best = std::move(candidate);
    result.allocation.rho_streams = best.rho;
    trace.rows.push_back(detail::make_row(iter, best, step, halvings));
    if (opts.on_accept) opts.on_accept(trace.rows.back(), best);
    if (improvement <= opts.gamma) {
      status = OuterStatus::converged;
      ++iter;
      break;
    }
  }
  trace.status = status;
  trace.outer_iterations = static_cast<int>(trace.rows.size()) - 1;

  result.state = best;
  result.solution = mac_to_bc(best, samples, csi);
  return result;
}

/// Convenience entry point: equal split from the scenario config.
template <class Real>
OuterResult<Real> minimize_power(const ScenarioConfig<Real>& config,
                                 const PartialCsi<Real>& csi,
                                 const ChannelSampleSet<Real>& samples) {
  config.validate();
  OuterOptions<Real> opts;
  opts.s0 = config.s0;
  opts.gamma = config.gamma;
  opts.max_outer_iters = config.max_outer_iters;
  opts.max_step_halvings = config.max_step_halvings;
  opts.inner.tol = config.inner_tol;
  return minimize_power(equal_split(config.stream_layout(), config.rho), samples,
                        csi, opts);
}

}  // namespace msbc
