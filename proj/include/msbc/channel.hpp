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

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "msbc/linalg.hpp"
#include "msbc/random.hpp"
#include "msbc/types.hpp"

namespace msbc {

/// Monte Carlo channel realizations, fixed for the lifetime of one
/// optimization run (common random numbers across all iterations).
template <class Real>
struct ChannelSampleSet {
  Index K = 0, N = 0, R = 0, M = 0;
  std::uint64_t seed = 0;
  SampleMatrices<Real> samples;  // [user][sample], each N x R

  const MatrixC<Real>& at(Index k, Index m) const { return samples[k][m]; }
};

/// Phase-ramp column exp(j (n-1) phi), n = 1..N.
template <class Real>
VectorC<Real> mean_column(Index n_antennas, Real phi) {
  VectorC<Real> u(n_antennas);
  for (Index n = 0; n < n_antennas; ++n)
    u(n) = std::polar(Real(1), Real(n) * phi);
  return u;
}

/// Instantiates the simulation CSI model: every column of the channel mean
/// of user k is the phase ramp exp(j (n-1) phi_k) with phi_k drawn uniformly
/// on [0, 2pi), the column error covariance is R * I_N and the noise
/// covariance is I_R. Deterministic given config.seed.
template <class Real>
PartialCsi<Real> build_scenario(const ScenarioConfig<Real>& config) {
  config.validate();
  PartialCsi<Real> csi;
  csi.H_bar.reserve(config.K);
  csi.C_err.reserve(config.K);
  csi.C_eta.reserve(config.K);
  std::mt19937_64 rng(config.seed);
  for (int k = 0; k < config.K; ++k) {
    Real phi = static_cast<Real>(2.0 * M_PI * uniform01(rng));
    VectorC<Real> u = mean_column<Real>(config.N, phi);
    MatrixC<Real> h_bar(config.N, config.R);
    for (int r = 0; r < config.R; ++r) h_bar.col(r) = u;
    csi.H_bar.push_back(std::move(h_bar));
    csi.C_err.push_back(Real(config.R) *
                        MatrixC<Real>::Identity(config.N, config.N));
    csi.C_eta.push_back(MatrixC<Real>::Identity(config.R, config.R));
  }
  return csi;
}

/// Draws M realizations H_k^(m) = H_bar_k + E^(m) per user, where the
/// columns of E^(m) are independent zero-mean circular complex Gaussians
/// with covariance C_err_k. Draw order is user-major, then sample, then
/// column, then row, so the set is bit-reproducible from the seed.
template <class Real>
ChannelSampleSet<Real> sample_channels(const PartialCsi<Real>& csi, Index m_samples,
                                       std::uint64_t seed) {
  if (m_samples < 1) throw ConfigError("sample count must be >= 1");
  ChannelSampleSet<Real> set;
  set.K = csi.users();
  set.N = csi.tx_antennas();
  set.R = csi.rx_antennas();
  set.M = m_samples;
  set.seed = seed;
  set.samples.resize(set.K);
  std::mt19937_64 rng(seed);
  for (Index k = 0; k < set.K; ++k) {
    MatrixC<Real> sqrt_err = hermitian_sqrt(csi.C_err[k]);
    set.samples[k].reserve(m_samples);
    for (Index m = 0; m < m_samples; ++m) {
      MatrixC<Real> h = csi.H_bar[k];
      for (Index r = 0; r < set.R; ++r)
        h.col(r) += sqrt_err * complex_gaussian_vector<Real>(set.N, rng);
      set.samples[k].push_back(std::move(h));
    }
  }
  return set;
}

/// Right-whitening H * C_eta^{-1/2} with the Hermitian inverse square root,
/// so that the receiver-side noise becomes white.
template <class Real>
MatrixC<Real> whiten_channel(const MatrixC<Real>& h, const MatrixC<Real>& c_eta) {
  if (c_eta.rows() != h.cols() || c_eta.rows() != c_eta.cols())
    throw ConfigError("noise covariance dimension does not match the channel");
  return h * hermitian_inverse_sqrt(c_eta);
}

/// Whitens every realization against the per-user noise covariance.
template <class Real>
SampleMatrices<Real> whiten_samples(const ChannelSampleSet<Real>& set,
                                    const PartialCsi<Real>& csi) {
  SampleMatrices<Real> w(set.K);
  for (Index k = 0; k < set.K; ++k) {
    MatrixC<Real> inv_sqrt = hermitian_inverse_sqrt(csi.C_eta[k]);
    w[k].reserve(set.M);
    for (Index m = 0; m < set.M; ++m)
      w[k].push_back(set.samples[k][m] * inv_sqrt);
  }
  return w;
}

/// Sample-average moments over pre-whitened realizations. tau[a][m] must be
/// unit-norm R-vectors; the reduction runs in ascending sample order.
template <class Real>
Moments<Real> estimate_moments_whitened(const SampleMatrices<Real>& whitened,
                                        const StreamLayout& layout,
                                        const TauSet<Real>& tau) {
  const Index d = layout.total_streams();
  if (static_cast<Index>(tau.size()) != d)
    throw ConfigError("tau has the wrong number of streams");
  const Index n = whitened.empty() || whitened[0].empty() ? 0 : whitened[0][0].rows();
  Moments<Real> mom;
  mom.layout = layout;
  mom.mu.assign(d, VectorC<Real>::Zero(n));
  mom.theta.assign(d, MatrixC<Real>::Zero(n, n));
  for (Index a = 0; a < d; ++a) {
    const Index k = layout.user_of(a);
    const Index m_count = static_cast<Index>(whitened[k].size());
    if (static_cast<Index>(tau[a].size()) != m_count)
      throw ConfigError("tau has the wrong number of samples");
    for (Index m = 0; m < m_count; ++m) {
      if (std::abs(tau[a][m].norm() - Real(1)) > Real(1e-9))
        throw ContractViolation("per-sample precoder is not unit norm");
      VectorC<Real> wv = whitened[k][m] * tau[a][m];
      mom.mu[a] += wv;
      mom.theta[a] += wv * wv.adjoint();
    }
    mom.mu[a] /= Real(m_count);
    mom.theta[a] /= Real(m_count);
  }
  return mom;
}

/// Convenience overload taking raw samples plus the noise covariances.
template <class Real>
Moments<Real> estimate_moments(const ChannelSampleSet<Real>& set,
                               const PartialCsi<Real>& csi,
                               const StreamLayout& layout,
                               const TauSet<Real>& tau) {
  return estimate_moments_whitened(whiten_samples(set, csi), layout, tau);
}

// ------------------------------------------------------- sample archives --

namespace detail {
inline void write_value(std::FILE* f, double v) { std::fprintf(f, " %.17g", v); }
}  // namespace detail

/// Writes a sample set as a text archive: one header line with the
/// dimensions and seed, then one line per realization with row-major
/// "re im" pairs at 17 significant digits (exact double round trip).
template <class Real>
void save_samples(const std::string& path, const ChannelSampleSet<Real>& set) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot open sample archive for writing: " + path);
  std::fprintf(f, "msbc-samples 1 %lld %lld %lld %lld %llu\n",
               static_cast<long long>(set.K), static_cast<long long>(set.N),
               static_cast<long long>(set.R), static_cast<long long>(set.M),
               static_cast<unsigned long long>(set.seed));
  for (Index k = 0; k < set.K; ++k) {
    for (Index m = 0; m < set.M; ++m) {
      const MatrixC<Real>& h = set.samples[k][m];
      for (Index i = 0; i < set.N; ++i)
        for (Index j = 0; j < set.R; ++j) {
          detail::write_value(f, static_cast<double>(h(i, j).real()));
          detail::write_value(f, static_cast<double>(h(i, j).imag()));
        }
      std::fprintf(f, "\n");
    }
  }
  std::fclose(f);
}

template <class Real>
ChannelSampleSet<Real> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open sample archive: " + path);
  std::string magic;
  int version = 0;
  long long k_count, n, r, m_count;
  unsigned long long seed;
  in >> magic >> version >> k_count >> n >> r >> m_count >> seed;
  if (!in || magic != "msbc-samples" || version != 1)
    throw Error("not a sample archive: " + path);
  ChannelSampleSet<Real> set;
  set.K = k_count;
  set.N = n;
  set.R = r;
  set.M = m_count;
  set.seed = seed;
  set.samples.assign(set.K, std::vector<MatrixC<Real>>());
  for (Index k = 0; k < set.K; ++k) {
    set.samples[k].reserve(set.M);
    for (Index m = 0; m < set.M; ++m) {
      MatrixC<Real> h(set.N, set.R);
      for (Index i = 0; i < set.N; ++i)
        for (Index j = 0; j < set.R; ++j) {
          double re, im;
          in >> re >> im;
          h(i, j) = Cplx<Real>(static_cast<Real>(re), static_cast<Real>(im));
        }
      set.samples[k].push_back(std::move(h));
    }
  }
  if (!in) throw Error("truncated sample archive: " + path);
  return set;
}

}  // namespace msbc
