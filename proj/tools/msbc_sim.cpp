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

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "msbc/harness.hpp"

namespace {

const char* status_name(msbc::harness::RunStatus status) {
  switch (status) {
    case msbc::harness::RunStatus::converged: return "converged";
    case msbc::harness::RunStatus::stalled: return "stalled";
    case msbc::harness::RunStatus::infeasible: return "infeasible";
    default: return "usage error";
  }
}

}  // namespace

int main(int argc, char** argv) {
  using msbc::harness::ExperimentConfig;
  using msbc::harness::RunStatus;

  CLI::App app{
      "Minimum-power transceiver design for the multiple-stream MIMO "
      "broadcast channel with per-user average-rate constraints"};

  std::string config_path, out_dir, init_mode, resume_path;
  std::uint64_t seed = 0, validate_seed = 0;
  int samples = 0, max_iters = 0, validation_samples = 0, batch = 0;
  double gamma = 0, step = 0;
  bool export_samples = false, checkpoint = false;

  auto* config_opt = app.add_option("--config", config_path,
                                    "JSON config file; flags override it");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* init_opt = app.add_option("--init", init_mode,
                                  "initial rate split: equal or random");
  init_opt->check(CLI::IsMember({"equal", "random"}));
  auto* samples_opt = app.add_option("--samples", samples,
                                     "Monte Carlo channel realizations M");
  auto* iters_opt = app.add_option("--max-iters", max_iters,
                                   "outer iteration cap");
  auto* gamma_opt = app.add_option("--gamma", gamma,
                                   "outer stop threshold on the power decrease");
  auto* step_opt = app.add_option("--step", step, "initial gradient step size");
  auto* vseed_opt = app.add_option("--validate-seed", validate_seed,
                                   "seed for the out-of-sample validation set");
  auto* vsamples_opt = app.add_option("--validate-samples", validation_samples,
                                      "validation sample count (>= M)");
  app.add_flag("--export-samples", export_samples,
               "write the channel sample archive");
  app.add_flag("--checkpoint", checkpoint,
               "write a checkpoint after every accepted iteration");
  auto* resume_opt = app.add_option("--resume", resume_path,
                                    "continue from a checkpoint file");
  auto* batch_opt = app.add_option("--batch", batch,
                                   "run this many consecutive seeds, one "
                                   "output subdirectory per run");
  batch_opt->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig cfg;
  try {
    if (config_opt->count()) cfg = msbc::harness::load_config(config_path);
    if (seed_opt->count()) cfg.scenario.seed = seed;
    if (out_opt->count()) cfg.out_dir = out_dir;
    if (init_opt->count())
      cfg.init = init_mode == "random" ? ExperimentConfig::Init::random
                                       : ExperimentConfig::Init::equal;
    if (samples_opt->count()) cfg.scenario.M = samples;
    if (iters_opt->count()) cfg.scenario.max_outer_iters = max_iters;
    if (gamma_opt->count()) cfg.scenario.gamma = gamma;
    if (step_opt->count()) cfg.scenario.s0 = step;
    if (vseed_opt->count()) cfg.validate_seed = validate_seed;
    if (vsamples_opt->count()) cfg.validation_samples = validation_samples;
    if (export_samples) cfg.export_samples = true;
    if (checkpoint) cfg.checkpoint = true;
    if (resume_opt->count()) cfg.resume_path = resume_path;

    if (batch_opt->count()) {
      RunStatus worst = RunStatus::converged;
      const std::string base = cfg.out_dir;
      const std::uint64_t base_seed = cfg.scenario.seed;
      for (int b = 0; b < batch; ++b) {
        ExperimentConfig run_cfg = cfg;
        run_cfg.scenario.seed = base_seed + static_cast<std::uint64_t>(b);
        run_cfg.out_dir = base + "/seed_" + std::to_string(run_cfg.scenario.seed);
        RunStatus status = msbc::harness::run_experiment(run_cfg);
        std::printf("seed %llu: %s\n",
                    static_cast<unsigned long long>(run_cfg.scenario.seed),
                    status_name(status));
        if (static_cast<int>(status) > static_cast<int>(worst)) worst = status;
      }
      return static_cast<int>(worst);
    }

    RunStatus status = msbc::harness::run_experiment(cfg);
    std::printf("%s (artifacts in %s)\n", status_name(status),
                cfg.out_dir.c_str());
    return static_cast<int>(status);
  } catch (const msbc::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return static_cast<int>(RunStatus::usage_error);
  } catch (const msbc::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(RunStatus::usage_error);
  }
}
