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
// Experiment front end: scenario configuration, end-to-end runs with
// comma-delimited artifact files (trace, targets, power, solution,
// validation, feasibility), out-of-sample validation and bit-exact
// checkpoint/resume. All numeric output uses 17 significant digits so
// files round-trip doubles exactly.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msbc/msbc.hpp"

namespace msbc::harness {

enum class RunStatus : int {
  converged = 0,
  usage_error = 1,
  stalled = 2,
  infeasible = 3,
};

struct ExperimentConfig {
  ScenarioConfig<double> scenario;
  std::string out_dir = "out";
  enum class Init { equal, random } init = Init::equal;
  std::uint64_t validate_seed = 0;  // 0 -> scenario.seed + 2
  int validation_samples = 0;       // 0 -> scenario.M
  bool export_samples = false;
  bool checkpoint = false;
  std::string resume_path;

  std::uint64_t sample_seed() const { return scenario.seed + 1; }
  std::uint64_t effective_validate_seed() const {
    return validate_seed ? validate_seed : scenario.seed + 2;
  }
  int effective_validation_samples() const {
    return validation_samples ? validation_samples : scenario.M;
  }
  void validate() const;
};

/// Reads a JSON config file (top-level keys mirror the CLI flags; per-user
/// values are arrays). Unknown keys are rejected.
ExperimentConfig load_config(const std::string& path);

struct ValidationReport {
  VectorR<double> user_rate, user_target, user_margin, jensen;  // per user
  VectorR<double> stream_mmse, stream_target, stream_margin;    // per stream
  double power_linear = 0, power_db = 0;
  double duality_power_residual = 0, duality_mse_residual = 0;
  std::uint64_t seed = 0;
  int samples = 0;
};

/// Re-evaluates a solution on a freshly drawn sample set: achieved
/// conditional average rates, per-stream average MMSEs with per-sample MMSE
/// receivers, and the Jensen rate bound from the averaged error covariance.
ValidationReport validate_solution(const BcSolution<double>& solution,
                                   const PartialCsi<double>& csi,
                                   std::uint64_t fresh_seed, int m_validation);

/// Writes targets.csv (per-stream targets per accepted iteration) and
/// power.csv (total power in dB, 10*log10) under out_dir.
void emit_convergence_report(const OuterTrace<double>& trace,
                             const StreamLayout& layout,
                             const std::string& out_dir);

void save_trace(const std::string& path, const OuterTrace<double>& trace,
                const StreamLayout& layout);
void save_solution(const std::string& path, const BcSolution<double>& solution);
BcSolution<double> load_solution(const std::string& path);
void save_validation(const std::string& path, const ValidationReport& report);
void save_feasibility(const std::string& path,
                      const FeasibilityReport<double>& report);

void save_checkpoint(const std::string& path, const MacState<double>& state,
                     const std::vector<OuterTraceRow<double>>& rows);
OuterResume<double> load_checkpoint(const std::string& path);

/// Runs one full experiment: scenario build, sampling, outer optimization,
/// downlink conversion, out-of-sample validation, artifact files. The exit
/// status distinguishes converged / stalled / infeasible runs.
RunStatus run_experiment(const ExperimentConfig& config);

}  // namespace msbc::harness
