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

#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace msbc {

using Index = Eigen::Index;

template <class Real> using Cplx = std::complex<Real>;
template <class Real>
using MatrixC = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using VectorC = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <class Real>
using MatrixR = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <class Real>
using VectorR = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

/// Per-stream vectors indexed per sample: tau[a][m] is an R-vector.
template <class Real>
using TauSet = std::vector<std::vector<VectorC<Real>>>;

/// Whitened (or raw) channel realizations: [user][sample], each N x R.
template <class Real>
using SampleMatrices = std::vector<std::vector<MatrixC<Real>>>;

// ---------------------------------------------------------------- errors --

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario/solver parameters or inconsistent dimensions.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numeric precondition failed (matrix not positive definite, singular
/// system in a place where the model guarantees regularity, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An input violated a documented call contract (e.g. non-unit-norm
/// per-sample precoder).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Per-stream MSE targets cannot be met with the current filters: the
/// power-allocation system has no positive solution.
class InfeasibleTargetsError : public Error {
 public:
  using Error::Error;
};

/// MAC-to-BC conversion produced an inconsistent result (nonpositive
/// power share or broken conservation); signals a corrupted state.
class DualityError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver hit its iteration cap before meeting its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double best_power, int iterations)
      : Error(msg), best_power(best_power), iterations(iterations) {}
  double best_power;
  int iterations;
};

// --------------------------------------------------------- stream layout --

/// Flattening of (user k, stream i) pairs into a single index
/// a = d_1 + ... + d_{k-1} + i used by all per-stream vectors.
class StreamLayout {
 public:
  StreamLayout() = default;

  explicit StreamLayout(const std::vector<int>& streams_per_user) {
    offsets_.assign(1, 0);
    offsets_.reserve(streams_per_user.size() + 1);
    for (int dk : streams_per_user) {
      if (dk < 1) throw ConfigError("stream counts must be positive");
      offsets_.push_back(offsets_.back() + dk);
    }
  }

  Index users() const { return static_cast<Index>(offsets_.size()) - 1; }
  Index total_streams() const { return offsets_.empty() ? 0 : offsets_.back(); }
  Index streams_of(Index k) const { return offsets_[k + 1] - offsets_[k]; }
  Index offset(Index k) const { return offsets_[k]; }
  Index flat(Index k, Index i) const { return offsets_[k] + i; }

  Index user_of(Index a) const {
    Index k = 0;
    while (offsets_[k + 1] <= a) ++k;
    return k;
  }
  Index stream_of(Index a) const { return a - offsets_[user_of(a)]; }

  bool operator==(const StreamLayout& other) const {
    return offsets_ == other.offsets_;
  }

 private:
  std::vector<Index> offsets_{0};
};

// -------------------------------------------------------------- scenario --

/// Scenario and solver parameters. K users with R receive antennas each,
/// N transmit antennas, d[k] streams and a rate target rho[k] (bits per
/// channel use) per user; M Monte Carlo channel realizations.
template <class Real>
struct ScenarioConfig {
  int K = 2;
  int N = 8;
  int R = 6;
  std::vector<int> d = {4, 4};
  std::vector<Real> rho = {Real(8.5), Real(7.5)};
  int M = 1000;
  Real s0 = Real(2);           // initial gradient step size
  Real gamma = Real(1e-5);     // outer stop threshold on the power decrease
  std::uint64_t seed = 1;
  int max_outer_iters = 100;
  int max_step_halvings = 40;
  Real inner_tol = Real(1e-8); // absolute tolerance on the inner total power

  StreamLayout stream_layout() const { return StreamLayout(d); }

  void validate() const {
    if (K < 1 || N < 1 || R < 1) throw ConfigError("K, N, R must be >= 1");
    if (static_cast<int>(d.size()) != K || static_cast<int>(rho.size()) != K)
      throw ConfigError("d and rho must have one entry per user");
    for (int k = 0; k < K; ++k) {
      if (d[k] < 1) throw ConfigError("d_k must be >= 1");
      if (d[k] > std::min(N, R))
        throw ConfigError("d_k exceeds min(N, R); streams need spatial dimensions");
      if (!(rho[k] > Real(0))) throw ConfigError("rho_k must be > 0");
    }
    if (M < 1) throw ConfigError("M must be >= 1");
    if (!(s0 > Real(0))) throw ConfigError("s0 must be > 0");
    if (!(gamma > Real(0))) throw ConfigError("gamma must be > 0");
    if (max_outer_iters < 1) throw ConfigError("max_outer_iters must be >= 1");
    if (max_step_halvings < 1) throw ConfigError("max_step_halvings must be >= 1");
    if (!(inner_tol > Real(0))) throw ConfigError("inner_tol must be > 0");
  }
};

// ------------------------------------------------------------------- CSI --

/// Transmitter-side statistical channel knowledge: per user a channel mean
/// H_bar (N x R), a column error covariance C_err (N x N, Hermitian PSD)
/// and a noise covariance C_eta (R x R, Hermitian PD).
template <class Real>
struct PartialCsi {
  std::vector<MatrixC<Real>> H_bar;
  std::vector<MatrixC<Real>> C_err;
  std::vector<MatrixC<Real>> C_eta;

  Index users() const { return static_cast<Index>(H_bar.size()); }
  Index tx_antennas() const { return H_bar.empty() ? 0 : H_bar[0].rows(); }
  Index rx_antennas() const { return H_bar.empty() ? 0 : H_bar[0].cols(); }
};

// --------------------------------------------------------------- moments --

/// Sample-average first and second moments of the whitened effective
/// channel seen by each stream: mu[a] = avg_m W_k^(m) tau_a^(m) and
/// theta[a] = avg_m (W_k^(m) tau_a^(m))(W_k^(m) tau_a^(m))^H.
template <class Real>
struct Moments {
  StreamLayout layout;
  std::vector<VectorC<Real>> mu;      // per stream, N-vector
  std::vector<MatrixC<Real>> theta;   // per stream, N x N Hermitian PSD
};

}  // namespace msbc
