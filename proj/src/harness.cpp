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

#include "msbc/harness.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace msbc::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string mask_string(const std::vector<bool>& active) {
  std::string s;
  s.reserve(active.size());
  for (bool b : active) s.push_back(b ? '1' : '0');
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path) : f_(std::fopen(path.c_str(), "w")) {
    if (!f_) throw Error("cannot open for writing: " + path);
  }
  ~CsvWriter() {
    if (f_) std::fclose(f_);
  }
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void raw(const std::string& s) { std::fputs(s.c_str(), f_); }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) std::fputc(',', f_);
      std::fputs(fields[i].c_str(), f_);
    }
    std::fputc('\n', f_);
  }

 private:
  std::FILE* f_;
};

std::vector<std::string> stream_headers(const StreamLayout& layout,
                                        const std::string& prefix) {
  std::vector<std::string> names;
  for (Index k = 0; k < layout.users(); ++k)
    for (Index i = 0; i < layout.streams_of(k); ++i)
      names.push_back(prefix + "_" + std::to_string(k + 1) + "_" +
                      std::to_string(i + 1));
  return names;
}

// ------------------------------------------------------- json helpers --

json to_json(const VectorR<double>& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const VectorC<double>& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i)
    a.push_back(json::array({v(i).real(), v(i).imag()}));
  return a;
}

json to_json(const MatrixC<double>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j)
      row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(row);
  }
  return rows;
}

VectorR<double> real_vector_from(const json& a) {
  VectorR<double> v(static_cast<Index>(a.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

VectorC<double> complex_vector_from(const json& a) {
  VectorC<double> v(static_cast<Index>(a.size()));
  for (Index i = 0; i < v.size(); ++i)
    v(i) = {a[i][0].get<double>(), a[i][1].get<double>()};
  return v;
}

MatrixC<double> complex_matrix_from(const json& rows) {
  const Index r = static_cast<Index>(rows.size());
  const Index c = r ? static_cast<Index>(rows[0].size()) : 0;
  MatrixC<double> m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      m(i, j) = {rows[i][j][0].get<double>(), rows[i][j][1].get<double>()};
  return m;
}

}  // namespace

// ------------------------------------------------------------ config --

void ExperimentConfig::validate() const {
  scenario.validate();
  if (out_dir.empty()) throw ConfigError("output directory must be set");
  if (validation_samples && validation_samples < scenario.M)
    throw ConfigError("validation sample count must be >= M");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  ExperimentConfig cfg;
  ScenarioConfig<double>& sc = cfg.scenario;
  for (auto& [key, value] : j.items()) {
    if (key == "K") sc.K = value.get<int>();
    else if (key == "N") sc.N = value.get<int>();
    else if (key == "R") sc.R = value.get<int>();
    else if (key == "d") sc.d = value.get<std::vector<int>>();
    else if (key == "rho") sc.rho = value.get<std::vector<double>>();
    else if (key == "M") sc.M = value.get<int>();
    else if (key == "seed") sc.seed = value.get<std::uint64_t>();
    else if (key == "s0") sc.s0 = value.get<double>();
    else if (key == "gamma") sc.gamma = value.get<double>();
    else if (key == "max_outer_iters") sc.max_outer_iters = value.get<int>();
    else if (key == "max_step_halvings") sc.max_step_halvings = value.get<int>();
    else if (key == "inner_tol") sc.inner_tol = value.get<double>();
    else if (key == "out") cfg.out_dir = value.get<std::string>();
    else if (key == "init") {
      std::string mode = value.get<std::string>();
      if (mode == "equal") cfg.init = ExperimentConfig::Init::equal;
      else if (mode == "random") cfg.init = ExperimentConfig::Init::random;
      else throw ConfigError("init must be 'equal' or 'random'");
    } else if (key == "validate_seed") cfg.validate_seed = value.get<std::uint64_t>();
    else if (key == "validation_samples") cfg.validation_samples = value.get<int>();
    else if (key == "export_samples") cfg.export_samples = value.get<bool>();
    else if (key == "checkpoint") cfg.checkpoint = value.get<bool>();
    else if (key == "resume") cfg.resume_path = value.get<std::string>();
    else throw ConfigError("unknown config key: " + key);
  }
  return cfg;
}

// -------------------------------------------------------- validation --

ValidationReport validate_solution(const BcSolution<double>& solution,
                                   const PartialCsi<double>& csi,
                                   std::uint64_t fresh_seed, int m_validation) {
  ValidationReport rep;
  rep.seed = fresh_seed;
  rep.samples = m_validation;

  ChannelSampleSet<double> fresh = sample_channels(csi, m_validation, fresh_seed);
  const StreamLayout& layout = solution.layout;

  rep.user_rate = average_rate(solution.P, fresh, csi);
  SigmaStats<double> stats = sigma_stats(solution.P, fresh, csi);
  rep.jensen = jensen_bound(stats);

  const Index d = layout.total_streams();
  rep.stream_mmse.resize(d);
  rep.stream_target.resize(d);
  rep.stream_margin.resize(d);
  for (Index k = 0; k < layout.users(); ++k)
    for (Index i = 0; i < layout.streams_of(k); ++i) {
      const Index a = layout.flat(k, i);
      rep.stream_mmse(a) = stats.sigma_bar[k](i, i).real();
      rep.stream_target(a) = std::exp2(-solution.rho_streams(a));
      rep.stream_margin(a) = rep.stream_target(a) - rep.stream_mmse(a);
    }

  rep.user_target.resize(layout.users());
  rep.user_margin.resize(layout.users());
  for (Index k = 0; k < layout.users(); ++k) {
    rep.user_target(k) =
        solution.rho_streams.segment(layout.offset(k), layout.streams_of(k)).sum();
    rep.user_margin(k) = rep.user_rate(k) - rep.user_target(k);
  }

  rep.power_linear = 0;
  for (const auto& p : solution.P) rep.power_linear += p.squaredNorm();
  rep.power_db = 10.0 * std::log10(rep.power_linear);
  rep.duality_power_residual = solution.duality_power_residual;
  rep.duality_mse_residual = solution.duality_mse_residual;
  return rep;
}

// ------------------------------------------------------------- files --

void save_trace(const std::string& path, const OuterTrace<double>& trace,
                const StreamLayout& layout) {
  CsvWriter out(path);
  std::vector<std::string> header = {"iter", "total_power", "step", "halvings",
                                     "active"};
  for (const auto& h : stream_headers(layout, "rho")) header.push_back(h);
  for (const auto& h : stream_headers(layout, "xi")) header.push_back(h);
  out.row(header);
  for (const auto& row : trace.rows) {
    std::vector<std::string> fields = {std::to_string(row.iter),
                                       fmt17(row.total_power), fmt17(row.step),
                                       std::to_string(row.halvings),
                                       mask_string(row.active)};
    for (Index a = 0; a < row.rho.size(); ++a) fields.push_back(fmt17(row.rho(a)));
    for (Index a = 0; a < row.xi.size(); ++a) fields.push_back(fmt17(row.xi(a)));
    out.row(fields);
  }
}

void emit_convergence_report(const OuterTrace<double>& trace,
                             const StreamLayout& layout,
                             const std::string& out_dir) {
  if (trace.rows.empty()) throw ConfigError("trace is empty");
  {
    CsvWriter targets(out_dir + "/targets.csv");
    std::vector<std::string> header = {"iter"};
    for (const auto& h : stream_headers(layout, "rho")) header.push_back(h);
    targets.row(header);
    for (const auto& row : trace.rows) {
      std::vector<std::string> fields = {std::to_string(row.iter)};
      for (Index a = 0; a < row.rho.size(); ++a)
        fields.push_back(fmt17(row.rho(a)));
      targets.row(fields);
    }
  }
  {
    CsvWriter power(out_dir + "/power.csv");
    power.row({"iter", "sum_power_db"});
    for (const auto& row : trace.rows)
      power.row({std::to_string(row.iter),
                 fmt17(10.0 * std::log10(row.total_power))});
  }
}

void save_solution(const std::string& path, const BcSolution<double>& solution) {
  const StreamLayout& layout = solution.layout;
  CsvWriter out(path);
  out.row({"msbc-solution", "1"});
  out.row({"K", std::to_string(layout.users())});
  out.row({"N", std::to_string(solution.P.empty() ? 0 : solution.P[0].rows())});
  std::vector<std::string> d_row = {"d"};
  for (Index k = 0; k < layout.users(); ++k)
    d_row.push_back(std::to_string(layout.streams_of(k)));
  out.row(d_row);

  auto vec_row = [&](const std::string& name, const VectorR<double>& v) {
    std::vector<std::string> fields = {name};
    for (Index i = 0; i < v.size(); ++i) fields.push_back(fmt17(v(i)));
    out.row(fields);
  };
  vec_row("rho_stream", solution.rho_streams);
  std::vector<std::string> act = {"active"};
  for (bool b : solution.active) act.push_back(b ? "1" : "0");
  out.row(act);
  vec_row("xi", solution.xi);
  vec_row("mac_mmse", solution.mac_mmse);
  vec_row("bc_mmse", solution.bc_mmse);
  vec_row("user_rate", solution.user_rates);
  out.row({"total_power", fmt17(solution.total_power)});
  out.row({"duality_power_residual", fmt17(solution.duality_power_residual)});
  out.row({"duality_mse_residual", fmt17(solution.duality_mse_residual)});
  for (Index k = 0; k < layout.users(); ++k) {
    out.row({"P", std::to_string(k + 1)});
    const MatrixC<double>& p = solution.P[k];
    for (Index i = 0; i < p.rows(); ++i) {
      std::vector<std::string> fields;
      for (Index j = 0; j < p.cols(); ++j) {
        fields.push_back(fmt17(p(i, j).real()));
        fields.push_back(fmt17(p(i, j).imag()));
      }
      out.row(fields);
    }
  }
  out.row({"end"});
}

BcSolution<double> load_solution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open solution file: " + path);
  std::string line;
  auto next = [&]() -> std::vector<std::string> {
    if (!std::getline(in, line)) throw Error("truncated solution file: " + path);
    return split_csv(line);
  };
  auto expect = [&](const std::string& key) -> std::vector<std::string> {
    auto fields = next();
    if (fields.empty() || fields[0] != key)
      throw Error("malformed solution file, expected " + key);
    return fields;
  };
  auto as_vector = [](const std::vector<std::string>& fields) {
    VectorR<double> v(static_cast<Index>(fields.size()) - 1);
    for (Index i = 0; i < v.size(); ++i) v(i) = std::stod(fields[i + 1]);
    return v;
  };

  auto magic = expect("msbc-solution");
  if (magic.size() < 2 || magic[1] != "1")
    throw Error("unsupported solution file version");
  const int k_count = std::stoi(expect("K")[1]);
  const int n = std::stoi(expect("N")[1]);
  auto d_fields = expect("d");
  std::vector<int> d;
  for (std::size_t i = 1; i < d_fields.size(); ++i)
    d.push_back(std::stoi(d_fields[i]));
  if (static_cast<int>(d.size()) != k_count)
    throw Error("solution file user count mismatch");

  BcSolution<double> sol;
  sol.layout = StreamLayout(d);
  sol.rho_streams = as_vector(expect("rho_stream"));
  auto act = expect("active");
  sol.active.clear();
  for (std::size_t i = 1; i < act.size(); ++i) sol.active.push_back(act[i] == "1");
  sol.xi = as_vector(expect("xi"));
  sol.mac_mmse = as_vector(expect("mac_mmse"));
  sol.bc_mmse = as_vector(expect("bc_mmse"));
  sol.user_rates = as_vector(expect("user_rate"));
  sol.total_power = std::stod(expect("total_power")[1]);
  sol.duality_power_residual = std::stod(expect("duality_power_residual")[1]);
  sol.duality_mse_residual = std::stod(expect("duality_mse_residual")[1]);
  for (int k = 0; k < k_count; ++k) {
    auto head = expect("P");
    if (std::stoi(head[1]) != k + 1) throw Error("solution precoders out of order");
    MatrixC<double> p(n, d[k]);
    for (Index i = 0; i < n; ++i) {
      auto fields = next();
      if (static_cast<Index>(fields.size()) != 2 * p.cols())
        throw Error("solution precoder row has wrong width");
      for (Index j = 0; j < p.cols(); ++j)
        p(i, j) = {std::stod(fields[2 * j]), std::stod(fields[2 * j + 1])};
    }
    sol.P.push_back(std::move(p));
  }
  expect("end");
  return sol;
}

void save_validation(const std::string& path, const ValidationReport& report) {
  CsvWriter out(path);
  out.row({"metric", "user", "stream", "value"});
  for (Index k = 0; k < report.user_rate.size(); ++k) {
    std::string u = std::to_string(k + 1);
    out.row({"rate", u, "", fmt17(report.user_rate(k))});
    out.row({"rate_target", u, "", fmt17(report.user_target(k))});
    out.row({"rate_margin", u, "", fmt17(report.user_margin(k))});
    out.row({"jensen_bound", u, "", fmt17(report.jensen(k))});
  }
  for (Index a = 0; a < report.stream_mmse.size(); ++a) {
    std::string s = std::to_string(a + 1);
    out.row({"mmse", "", s, fmt17(report.stream_mmse(a))});
    out.row({"mmse_target", "", s, fmt17(report.stream_target(a))});
    out.row({"mmse_margin", "", s, fmt17(report.stream_margin(a))});
  }
  out.row({"power_linear", "", "", fmt17(report.power_linear)});
  out.row({"power_db", "", "", fmt17(report.power_db)});
  out.row({"duality_power_residual", "", "", fmt17(report.duality_power_residual)});
  out.row({"duality_mse_residual", "", "", fmt17(report.duality_mse_residual)});
  out.row({"validate_seed", "", "", std::to_string(report.seed)});
  out.row({"validate_samples", "", "", std::to_string(report.samples)});
}

void save_feasibility(const std::string& path,
                      const FeasibilityReport<double>& report) {
  CsvWriter out(path);
  out.row({"field", "i", "j", "value", "value_im"});
  out.row({"d", "", "", std::to_string(report.total_streams()), ""});
  out.row({"sigma2", "", "", fmt17(report.sigma2), ""});
  out.row({"lhs", "", "", fmt17(report.lhs), ""});
  out.row({"bound_rhs", "", "", fmt17(report.bound_rhs), ""});
  out.row({"feasible", "", "", report.feasible ? "1" : "0", ""});
  for (Index a = 0; a < report.e_matrix.rows(); ++a)
    for (Index b = 0; b < report.e_matrix.cols(); ++b)
      out.row({"E", std::to_string(a + 1), std::to_string(b + 1),
               fmt17(report.e_matrix(a, b).real()),
               fmt17(report.e_matrix(a, b).imag())});
}

// -------------------------------------------------------- checkpoints --

void save_checkpoint(const std::string& path, const MacState<double>& state,
                     const std::vector<OuterTraceRow<double>>& rows) {
  const StreamLayout& layout = state.layout;
  json j;
  j["format"] = "msbc-checkpoint";
  j["version"] = 1;
  j["next_iter"] = rows.empty() ? 1 : rows.back().iter + 1;

  json d = json::array();
  for (Index k = 0; k < layout.users(); ++k)
    d.push_back(static_cast<int>(layout.streams_of(k)));
  json st;
  st["d_per_user"] = d;
  st["rho"] = to_json(state.rho);
  st["xi"] = to_json(state.xi);
  st["achieved_mmse"] = to_json(state.achieved_mmse);
  st["active"] = json(state.active);
  st["total_power"] = state.total_power;
  st["iterations"] = state.iterations;
  st["tau_fallbacks"] = state.tau_fallbacks;
  st["converged"] = state.converged;
  json g = json::array();
  for (const auto& v : state.g_tilde) g.push_back(to_json(v));
  st["g_tilde"] = g;
  json r = json::array();
  for (const auto& s : state.r) r.push_back(json::array({s.real(), s.imag()}));
  st["r"] = r;
  json tau = json::array();
  for (const auto& per_stream : state.tau) {
    json per_m = json::array();
    for (const auto& v : per_stream) per_m.push_back(to_json(v));
    tau.push_back(per_m);
  }
  st["tau"] = tau;
  json mu = json::array(), theta = json::array();
  for (const auto& v : state.moments.mu) mu.push_back(to_json(v));
  for (const auto& m : state.moments.theta) theta.push_back(to_json(m));
  st["mu"] = mu;
  st["theta"] = theta;
  j["state"] = st;

  json jrows = json::array();
  for (const auto& row : rows) {
    json jr;
    jr["iter"] = row.iter;
    jr["total_power"] = row.total_power;
    jr["step"] = row.step;
    jr["halvings"] = row.halvings;
    jr["active"] = json(row.active);
    jr["rho"] = to_json(row.rho);
    jr["xi"] = to_json(row.xi);
    jrows.push_back(jr);
  }
  j["rows"] = jrows;

  std::ofstream out(path);
  if (!out) throw Error("cannot open checkpoint for writing: " + path);
  out << j.dump();
}

OuterResume<double> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint: " + path);
  json j;
  in >> j;
  if (j.value("format", "") != "msbc-checkpoint" || j.value("version", 0) != 1)
    throw Error("not a checkpoint file: " + path);

  OuterResume<double> resume;
  resume.next_iter = j["next_iter"].get<int>();

  const json& st = j["state"];
  MacState<double>& state = resume.state;
  std::vector<int> d = st["d_per_user"].get<std::vector<int>>();
  state.layout = StreamLayout(d);
  state.rho = real_vector_from(st["rho"]);
  state.xi = real_vector_from(st["xi"]);
  state.achieved_mmse = real_vector_from(st["achieved_mmse"]);
  state.active = st["active"].get<std::vector<bool>>();
  state.total_power = st["total_power"].get<double>();
  state.iterations = st["iterations"].get<int>();
  state.tau_fallbacks = st["tau_fallbacks"].get<int>();
  state.converged = st["converged"].get<bool>();
  for (const auto& v : st["g_tilde"]) state.g_tilde.push_back(complex_vector_from(v));
  for (const auto& s : st["r"])
    state.r.push_back({s[0].get<double>(), s[1].get<double>()});
  for (const auto& per_stream : st["tau"]) {
    std::vector<VectorC<double>> per_m;
    for (const auto& v : per_stream) per_m.push_back(complex_vector_from(v));
    state.tau.push_back(std::move(per_m));
  }
  state.moments.layout = state.layout;
  for (const auto& v : st["mu"]) state.moments.mu.push_back(complex_vector_from(v));
  for (const auto& m : st["theta"])
    state.moments.theta.push_back(complex_matrix_from(m));

  for (const auto& jr : j["rows"]) {
    OuterTraceRow<double> row;
    row.iter = jr["iter"].get<int>();
    row.total_power = jr["total_power"].get<double>();
    row.step = jr["step"].get<double>();
    row.halvings = jr["halvings"].get<int>();
    row.active = jr["active"].get<std::vector<bool>>();
    row.rho = real_vector_from(jr["rho"]);
    row.xi = real_vector_from(jr["xi"]);
    resume.rows.push_back(std::move(row));
  }
  return resume;
}

// -------------------------------------------------------- experiments --

RunStatus run_experiment(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);

  PartialCsi<double> csi = build_scenario(config.scenario);
  ChannelSampleSet<double> samples =
      sample_channels(csi, config.scenario.M, config.sample_seed());
  if (config.export_samples)
    save_samples(config.out_dir + "/samples.txt", samples);
  const StreamLayout layout = config.scenario.stream_layout();

  RateAllocation<double> initial;
  if (config.init == ExperimentConfig::Init::random) {
    std::mt19937_64 rng(config.scenario.seed + 3);
    initial = random_split(layout, config.scenario.rho, rng);
  } else {
    initial = equal_split(layout, config.scenario.rho);
  }

  OuterOptions<double> opts;
  opts.s0 = config.scenario.s0;
  opts.gamma = config.scenario.gamma;
  opts.max_outer_iters = config.scenario.max_outer_iters;
  opts.max_step_halvings = config.scenario.max_step_halvings;
  opts.inner.tol = config.scenario.inner_tol;

  std::vector<OuterTraceRow<double>> accepted_rows;
  if (config.checkpoint) {
    opts.on_accept = [&](const OuterTraceRow<double>& row,
                         const MacState<double>& state) {
      accepted_rows.push_back(row);
      save_checkpoint(config.out_dir + "/checkpoint.json", state, accepted_rows);
    };
  }

  OuterResult<double> result;
  try {
    if (!config.resume_path.empty()) {
      OuterResume<double> resume = load_checkpoint(config.resume_path);
      accepted_rows = resume.rows;
      result = minimize_power(initial, samples, csi, opts, &resume);
    } else {
      result = minimize_power(initial, samples, csi, opts);
    }
  } catch (const InfeasibleTargetsError& e) {
    if (const auto* typed =
            dynamic_cast<const InfeasibleProblemError<double>*>(&e)) {
      FeasibilityReport<double> rep = typed->report;
      check_feasibility(initial.rho_streams, rep);
      save_feasibility(config.out_dir + "/feasibility.csv", rep);
    }
    std::fprintf(stderr, "infeasible targets: %s\n", e.what());
    return RunStatus::infeasible;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "solver stalled: %s\n", e.what());
    return RunStatus::stalled;
  }

  // Zero-noise feasibility summary of the final state.
  {
    SampleMatrices<double> whitened = whiten_samples(samples, csi);
    FeasibilityReport<double> rep = feasibility_matrix(
        whitened, layout, result.state.tau, result.state.xi, 0.0);
    check_feasibility(result.state.rho, rep);
    save_feasibility(config.out_dir + "/feasibility.csv", rep);
  }

  save_trace(config.out_dir + "/trace.csv", result.trace, layout);
  emit_convergence_report(result.trace, layout, config.out_dir);
  save_solution(config.out_dir + "/solution.csv", result.solution);

  ValidationReport validation = validate_solution(
      result.solution, csi, config.effective_validate_seed(),
      config.effective_validation_samples());
  save_validation(config.out_dir + "/validation.csv", validation);

  return result.trace.status == OuterStatus::converged ? RunStatus::converged
                                                       : RunStatus::stalled;
}

}  // namespace msbc::harness
