// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one case per release criterion, each printing a
// [PASS]/[FAIL] line with its runtime.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "msbc/harness.hpp"
#include "oracles.hpp"

using namespace msbc;

namespace {

class Criterion {
 public:
  Criterion(int number, std::string name, double budget_seconds)
      : number_(number), name_(std::move(name)), budget_(budget_seconds),
        start_(std::chrono::steady_clock::now()) {}

  void expect(bool condition, const std::string& what) {
    if (!condition) failures_.push_back(what);
  }

  ~Criterion() {
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    if (elapsed > budget_) failures_.push_back("runtime budget exceeded");
    std::printf("[%s] criterion %d: %s (%.2f s)\n",
                failures_.empty() ? "PASS" : "FAIL", number_, name_.c_str(),
                elapsed);
    for (const auto& f : failures_) std::printf("       - %s\n", f.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(failures_.empty(), "criterion ", number_, " failed");
  }

 private:
  int number_;
  std::string name_;
  double budget_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> failures_;
};

PartialCsi<double> unit_scalar_csi(double err_var) {
  PartialCsi<double> csi;
  csi.H_bar = {MatrixC<double>::Identity(1, 1)};
  csi.C_err = {err_var * MatrixC<double>::Identity(1, 1)};
  csi.C_eta = {MatrixC<double>::Identity(1, 1)};
  return csi;
}

}  // namespace

TEST_CASE("C1 scalar closed forms") {
  Criterion crit(1, "scalar closed-form suite", 1.0);

  PartialCsi<double> csi = unit_scalar_csi(0.0);
  ChannelSampleSet<double> samples = sample_channels(csi, 1, 1);
  StreamLayout layout(std::vector<int>{1});
  for (double rho : {0.5, 1.0, 1.7, 2.5}) {
    MacState<double> state =
        solve_inner(VectorR<double>::Constant(1, rho), layout, samples, csi);
    crit.expect(std::abs(state.total_power - (std::exp2(rho) - 1.0)) < 1e-8,
                "inner power differs from 2^rho - 1");
  }

  Moments<double> mom;
  mom.layout = layout;
  mom.mu = {VectorC<double>::Ones(1)};
  mom.theta = {MatrixC<double>::Identity(1, 1)};
  std::vector<VectorC<double>> g = {VectorC<double>::Ones(1)};
  crit.expect(mac_mmse(g, mom, VectorR<double>::Constant(1, 3.0))(0) == 0.25,
              "mac_mmse(xi=3) != 0.25");

  MacState<double> state =
      solve_inner(VectorR<double>::Constant(1, 1.0), layout, samples, csi);
  VectorR<double> grad =
      power_gradient(compute_jacobian(state), VectorR<double>::Constant(1, 1.0));
  crit.expect(std::abs(grad(0) - 2.0 * std::log(2.0)) < 1e-8,
              "gradient at rho=1 differs from 2 ln 2");
}

TEST_CASE("C2 gradient against end-to-end finite differences") {
  Criterion crit(2, "gradient vs finite differences", 120.0);
  std::mt19937_64 rng(2001);
  InnerOptions<double> opts;
  opts.tol = 1e-12;
  const double h = 1e-4;
  for (int t = 0; t < 20; ++t) {
    StreamLayout layout(std::vector<int>{2, 2});
    PartialCsi<double> csi = oracles::random_csi(2, 4, 3, 0.8, rng);
    ChannelSampleSet<double> samples = sample_channels(csi, 50, rng());
    VectorR<double> rho(4);
    for (Index a = 0; a < 4; ++a) rho(a) = 0.4 + 0.8 * uniform01(rng);
    MacState<double> state;
    try {
      state = solve_inner(rho, layout, samples, csi, nullptr, opts);
    } catch (const InfeasibleTargetsError&) {
      crit.expect(false, "random instance unexpectedly infeasible");
      continue;
    }
    VectorR<double> grad = power_gradient(compute_jacobian(state), rho);
    for (Index a = 0; a < 4; ++a) {
      VectorR<double> hi = rho, lo = rho;
      hi(a) += h;
      lo(a) -= h;
      double up = solve_inner(hi, layout, samples, csi, &state, opts).total_power;
      double down =
          solve_inner(lo, layout, samples, csi, &state, opts).total_power;
      double fd = (up - down) / (2.0 * h);
      crit.expect(std::abs(grad(a) - fd) <= 1e-3 * std::abs(fd),
                  "gradient component off by more than 1e-3 relative");
    }
  }
}

TEST_CASE("C3 M-matrix structure of the MMSE Jacobian") {
  Criterion crit(3, "M-matrix suite", 120.0);
  std::mt19937_64 rng(3001);
  int tested = 0;
  while (tested < 100) {
    int users = 1 + static_cast<int>(uniform01(rng) * 2.0);
    std::vector<int> d(users);
    for (int& dk : d) dk = 1 + static_cast<int>(uniform01(rng) * 2.0);
    StreamLayout layout(d);
    PartialCsi<double> csi = oracles::random_csi(users, 4, 3, 0.9, rng);
    ChannelSampleSet<double> samples = sample_channels(csi, 8, rng());
    VectorR<double> rho(layout.total_streams());
    for (Index a = 0; a < rho.size(); ++a) rho(a) = 0.3 + 0.9 * uniform01(rng);
    // a third of the states get one stream switched off
    if (layout.total_streams() > 1 && uniform01(rng) < 0.33)
      rho(static_cast<Index>(uniform01(rng) * layout.total_streams())) = 0.0;
    MacState<double> state;
    try {
      state = solve_inner(rho, layout, samples, csi);
    } catch (const InfeasibleTargetsError&) {
      continue;
    }
    ++tested;

    MatrixR<double> jac = compute_jacobian(state);
    const Index dim = layout.total_streams();
    VectorR<double> xi_virtual = state.xi;
    for (Index a = 0; a < dim; ++a)
      if (!state.active[a]) xi_virtual(a) = 1.0;
    for (Index a = 0; a < dim; ++a) {
      crit.expect(-jac(a, a) > 0.0, "Z-matrix diagonal must be positive");
      double off_sum = 0.0;
      for (Index b = 0; b < dim; ++b) {
        if (a == b) continue;
        crit.expect(-jac(a, b) <= 0.0, "Z-matrix off-diagonal must be <= 0");
        off_sum += std::abs(jac(a, b) * xi_virtual(b));
      }
      crit.expect(-jac(a, a) * xi_virtual(a) > off_sum,
                  "scaled Jacobian must be strictly diagonally dominant");
    }
    VectorR<double> grad = power_gradient(jac, state.rho);
    crit.expect(grad.minCoeff() > 0.0, "gradient must be positive");
  }
}

TEST_CASE("C4 simplex projection against the enumeration oracle") {
  Criterion crit(4, "projection oracle", 10.0);
  VectorR<double> clip_case(3);
  clip_case << 5.0, 0.2, 0.2;
  VectorR<double> projected = project_per_user(clip_case, 3.0);
  crit.expect(std::abs(projected(0) - 3.0) < 1e-12 && projected(1) == 0.0 &&
                  projected(2) == 0.0,
              "(5, 0.2, 0.2) with rho=3 must project to (3, 0, 0)");

  std::mt19937_64 rng(4001);
  for (int t = 0; t < 1000; ++t) {
    Index n = 1 + static_cast<Index>(uniform01(rng) * 6.0);
    if (n > 6) n = 6;
    VectorR<double> v(n);
    for (Index i = 0; i < n; ++i) v(i) = -5.0 + 12.0 * uniform01(rng);
    double rho = 0.05 + 6.0 * uniform01(rng);
    VectorR<double> mine = project_per_user(v, rho);
    VectorR<double> oracle = oracles::qp_project(v, rho);
    crit.expect((mine - oracle).cwiseAbs().maxCoeff() < 1e-9,
                "projection differs from the QP oracle");
    crit.expect(std::abs(mine.sum() - rho) < 1e-12 * std::max(1.0, rho),
                "projection sum drifted");
  }
}

TEST_CASE("C5 power allocation against the fixed-point oracle") {
  Criterion crit(5, "power-allocation oracle", 30.0);
  std::mt19937_64 rng(5001);
  int compared = 0;
  while (compared < 100) {
    int users = 1 + static_cast<int>(uniform01(rng) * 2.0);
    std::vector<int> d(users, 1);
    if (uniform01(rng) < 0.5) d[0] = 2;
    StreamLayout layout(d);
    PartialCsi<double> csi = oracles::random_csi(users, 3, 2, 0.8, rng);
    ChannelSampleSet<double> samples = sample_channels(csi, 5, rng());
    TauSet<double> tau = oracles::random_tau(layout, 2, 5, rng);
    Moments<double> mom = estimate_moments(samples, csi, layout, tau);
    std::vector<VectorC<double>> g;
    for (Index a = 0; a < layout.total_streams(); ++a)
      g.push_back(random_unit_vector<double>(3, rng));
    VectorR<double> eps(layout.total_streams());
    for (Index a = 0; a < eps.size(); ++a) eps(a) = 0.45 + 0.5 * uniform01(rng);

    auto oracle = oracles::fixed_point_power(g, mom, eps);
    VectorR<double> xi;
    try {
      xi = solve_power_allocation(g, mom, eps);
    } catch (const InfeasibleTargetsError&) {
      crit.expect(!oracle.has_value(),
                  "solver infeasible where the oracle converged");
      continue;
    }
    crit.expect(oracle.has_value(), "oracle infeasible where the solver solved");
    if (!oracle.has_value()) continue;
    crit.expect((xi - *oracle).cwiseAbs().maxCoeff() < 1e-8,
                "power allocation differs from the fixed point");
    ++compared;
  }
}

TEST_CASE("C6 duality conservation") {
  Criterion crit(6, "duality conservation", 120.0);
  std::mt19937_64 rng(6001);
  InnerOptions<double> opts;
  opts.tol = 1e-12;
  int tested = 0;
  while (tested < 50) {
    int users = 1 + static_cast<int>(uniform01(rng) * 2.0);
    std::vector<int> d(users);
    for (int& dk : d) dk = 1 + static_cast<int>(uniform01(rng) * 2.0);
    StreamLayout layout(d);
    // deterministic conditional channels: the regime where per-sample MMSE
    // receivers meet the statistical filters exactly
    PartialCsi<double> csi = oracles::random_csi(users, 4, 3, 0.0, rng, true);
    ChannelSampleSet<double> samples = sample_channels(csi, 1, rng());
    VectorR<double> rho(layout.total_streams());
    for (Index a = 0; a < rho.size(); ++a) rho(a) = 0.4 + 1.0 * uniform01(rng);
    MacState<double> state;
    try {
      state = solve_inner(rho, layout, samples, csi, nullptr, opts);
    } catch (const InfeasibleTargetsError&) {
      continue;
    }
    BcSolution<double> bc = mac_to_bc(state, samples, csi);
    ++tested;
    crit.expect(bc.duality_power_residual < 1e-8,
                "total power not conserved to 1e-8");
    crit.expect(bc.duality_mse_residual < 1e-6,
                "per-stream MSEs not preserved to 1e-6");
  }
}

TEST_CASE("C7 rate identity and Jensen bound") {
  Criterion crit(7, "Jensen and determinant-identity suite", 60.0);
  std::mt19937_64 rng(7001);
  for (int t = 0; t < 100; ++t) {
    int users = 1 + static_cast<int>(uniform01(rng) * 2.0);
    std::vector<int> d(users);
    for (int& dk : d) dk = 1 + static_cast<int>(uniform01(rng) * 2.0);
    StreamLayout layout(d);
    PartialCsi<double> csi = oracles::random_csi(users, 4, 3, 1.0, rng, true);
    int m_count = (t % 10 == 0) ? 1 : 2 + static_cast<int>(uniform01(rng) * 30);
    ChannelSampleSet<double> samples = sample_channels(csi, m_count, rng());
    std::vector<MatrixC<double>> p =
        oracles::random_precoders(layout, 4, 0.9, rng);
    VectorR<double> rate;
    try {
      rate = average_rate(p, samples, csi);  // cross-checks both forms at 1e-8
    } catch (const NumericError&) {
      crit.expect(false, "rate determinant identity failed");
      continue;
    }
    VectorR<double> bound = jensen_bound(sigma_stats(p, samples, csi));
    for (Index k = 0; k < users; ++k) {
      crit.expect(bound(k) <= rate(k) + 1e-10, "Jensen bound above the rate");
      if (m_count == 1)
        crit.expect(std::abs(bound(k) - rate(k)) < 1e-8,
                    "Jensen bound strict at a point mass");
    }
  }
}

TEST_CASE("C8 reference scenario") {
  Criterion crit(8, "reference scenario end to end", 600.0);
  namespace fs = std::filesystem;
  harness::ExperimentConfig cfg;  // defaults are the reference scenario
  cfg.out_dir = "acceptance_tmp/reference";
  fs::remove_all("acceptance_tmp");
  harness::RunStatus status = harness::run_experiment(cfg);
  crit.expect(status == harness::RunStatus::converged, "run did not converge");

  std::ifstream trace(cfg.out_dir + "/trace.csv");
  crit.expect(static_cast<bool>(trace), "trace file missing");
  std::string line;
  std::getline(trace, line);  // header
  double previous = std::numeric_limits<double>::infinity();
  double final_power = 0.0;
  int accepted = -1;
  while (std::getline(trace, line)) {
    ++accepted;
    std::istringstream row(line);
    std::string field;
    std::getline(row, field, ',');  // iter
    std::getline(row, field, ',');
    double power = std::stod(field);
    crit.expect(power < previous, "accepted power not strictly decreasing");
    previous = power;
    final_power = power;
    std::getline(row, field, ',');  // step
    std::getline(row, field, ',');  // halvings
    std::getline(row, field, ',');  // active
    double sum1 = 0.0, sum2 = 0.0;
    for (int a = 0; a < 4; ++a) {
      std::getline(row, field, ',');
      sum1 += std::stod(field);
    }
    for (int a = 0; a < 4; ++a) {
      std::getline(row, field, ',');
      sum2 += std::stod(field);
    }
    crit.expect(std::abs(sum1 - 8.5) < 1e-12, "user 1 target sum drifted");
    crit.expect(std::abs(sum2 - 7.5) < 1e-12, "user 2 target sum drifted");
  }
  crit.expect(accepted >= 1 && accepted <= 30,
              "accepted iteration count outside [1, 30]");
  // regression band locked from the first verified run of this scenario
  double final_db = 10.0 * std::log10(final_power);
  crit.expect(final_db > 10.0 && final_db < 40.0,
              "final power far outside the expected band");

  std::ifstream validation(cfg.out_dir + "/validation.csv");
  crit.expect(static_cast<bool>(validation), "validation file missing");
  int margins_seen = 0;
  while (std::getline(validation, line)) {
    if (line.rfind("rate_margin,", 0) == 0) {
      double margin = std::stod(line.substr(line.rfind(',') + 1));
      crit.expect(margin >= -0.05, "out-of-sample rate beneath target - 0.05");
      ++margins_seen;
    }
  }
  crit.expect(margins_seen == 2, "expected one margin per user");
  fs::remove_all("acceptance_tmp");
}

TEST_CASE("C9 feasibility suite") {
  Criterion crit(9, "feasibility bound and rejection", 10.0);

  // closed form: error variance s^2 gives the bound s^2 / (1 + s^2)
  StreamLayout layout(std::vector<int>{1});
  for (double sigma_e : {0.5, 1.0, 2.0}) {
    SampleMatrices<double> w = {
        {MatrixC<double>::Constant(1, 1, Cplx<double>(1.0 + sigma_e, 0.0)),
         MatrixC<double>::Constant(1, 1, Cplx<double>(1.0 - sigma_e, 0.0))}};
    TauSet<double> tau = {{VectorC<double>::Ones(1), VectorC<double>::Ones(1)}};
    FeasibilityReport<double> rep = feasibility_matrix<double>(
        w, layout, tau, VectorR<double>::Ones(1), 0.0);
    double expected = sigma_e * sigma_e / (1.0 + sigma_e * sigma_e);
    crit.expect(std::abs(rep.bound_rhs - expected) < 1e-10,
                "zero-noise bound differs from the closed form");
    if (sigma_e == 1.0) {
      VectorR<double> rho = VectorR<double>::Constant(1, 1.0);
      crit.expect(check_feasibility(rho, rep), "boundary target must pass");
      rho(0) = 0.9;
      crit.expect(!check_feasibility(rho, rep), "looser target must fail");
    }
  }

  // the verdict depends on the split only through the target sum
  {
    std::mt19937_64 rng(9001);
    StreamLayout layout2(std::vector<int>{2});
    PartialCsi<double> csi = oracles::random_csi(1, 3, 2, 1.0, rng);
    ChannelSampleSet<double> samples = sample_channels(csi, 10, 13);
    SampleMatrices<double> w = whiten_samples(samples, csi);
    TauSet<double> tau = oracles::random_tau(layout2, 2, 10, rng);
    FeasibilityReport<double> rep = feasibility_matrix<double>(
        w, layout2, tau, VectorR<double>::Ones(2), 0.0);
    VectorR<double> split_a(2), split_b(2);
    split_a << 1.0, 1.0;
    split_b << 0.6, std::log2(1.0 / (1.0 - std::exp2(-0.6)));
    bool verdict_a = check_feasibility(split_a, rep);
    double lhs_a = rep.lhs;
    bool verdict_b = check_feasibility(split_b, rep);
    crit.expect(std::abs(rep.lhs - lhs_a) < 1e-12, "equal sums changed the lhs");
    crit.expect(verdict_a == verdict_b, "equal sums changed the verdict");
  }

  // crafted infeasible scenario is rejected with the infeasible status
  {
    namespace fs = std::filesystem;
    harness::ExperimentConfig cfg;
    cfg.scenario.K = 1;
    cfg.scenario.N = 1;
    cfg.scenario.R = 1;
    cfg.scenario.d = {1};
    cfg.scenario.rho = {3.0};
    cfg.scenario.M = 400;
    cfg.scenario.seed = 2;
    cfg.out_dir = "acceptance_tmp/infeasible";
    harness::RunStatus status = harness::run_experiment(cfg);
    crit.expect(status == harness::RunStatus::infeasible,
                "infeasible scenario not rejected with status 3");
    crit.expect(static_cast<int>(status) == 3, "infeasible status must map to 3");
    crit.expect(fs::exists(cfg.out_dir + "/feasibility.csv"),
                "feasibility report missing");
    fs::remove_all("acceptance_tmp");
  }
}

TEST_CASE("C10 determinism of repeated runs") {
  Criterion crit(10, "byte-identical repeated runs", 60.0);
  namespace fs = std::filesystem;
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  harness::ExperimentConfig cfg;
  cfg.scenario.K = 2;
  cfg.scenario.N = 4;
  cfg.scenario.R = 3;
  cfg.scenario.d = {2, 2};
  cfg.scenario.rho = {2.2, 1.8};
  cfg.scenario.M = 60;
  cfg.scenario.seed = 9;
  cfg.out_dir = "acceptance_tmp/det_a";
  harness::RunStatus status_a = harness::run_experiment(cfg);
  cfg.out_dir = "acceptance_tmp/det_b";
  harness::RunStatus status_b = harness::run_experiment(cfg);
  crit.expect(status_a == status_b, "statuses differ between runs");
  for (const char* name :
       {"trace.csv", "targets.csv", "power.csv", "solution.csv"}) {
    std::string a = slurp(std::string("acceptance_tmp/det_a/") + name);
    std::string b = slurp(std::string("acceptance_tmp/det_b/") + name);
    crit.expect(!a.empty() && a == b,
                std::string(name) + " differs between identical runs");
  }
  fs::remove_all("acceptance_tmp");
}
