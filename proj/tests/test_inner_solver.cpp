// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "msbc/msbc.hpp"
#include "oracles.hpp"

using namespace msbc;

namespace {

/// Scalar single-stream moments with mu = theta = 1.
Moments<double> unit_moments() {
  Moments<double> mom;
  mom.layout = StreamLayout(std::vector<int>{1});
  mom.mu = {VectorC<double>::Ones(1)};
  mom.theta = {MatrixC<double>::Identity(1, 1)};
  return mom;
}

PartialCsi<double> unit_scalar_csi() {
  PartialCsi<double> csi;
  csi.H_bar = {MatrixC<double>::Identity(1, 1)};
  csi.C_err = {MatrixC<double>::Zero(1, 1)};
  csi.C_eta = {MatrixC<double>::Identity(1, 1)};
  return csi;
}

/// Random instance with converged filters for the given targets.
struct SmallInstance {
  StreamLayout layout;
  PartialCsi<double> csi;
  ChannelSampleSet<double> samples;
  VectorR<double> rho;
};

SmallInstance make_instance(std::mt19937_64& rng, std::vector<int> d, int n,
                            int r, int m, double err, double rate_scale) {
  SmallInstance inst;
  inst.layout = StreamLayout(d);
  inst.csi = oracles::random_csi(static_cast<int>(d.size()), n, r, err, rng);
  inst.samples = sample_channels(inst.csi, m, rng());
  inst.rho = VectorR<double>(inst.layout.total_streams());
  for (Index a = 0; a < inst.rho.size(); ++a)
    inst.rho(a) = rate_scale * (0.5 + uniform01(rng));
  return inst;
}

}  // namespace

TEST_CASE("receive filter update") {
  SUBCASE("zero powers return the first moment") {
    Moments<double> mom = unit_moments();
    auto g = update_receivers(mom, VectorR<double>::Zero(1));
    CHECK((g[0] - mom.mu[0]).norm() < 1e-15);
  }
  SUBCASE("scalar regularized solve") {
    Moments<double> mom = unit_moments();
    auto g = update_receivers(mom, VectorR<double>::Constant(1, 3.0));
    CHECK(g[0](0).real() == doctest::Approx(0.25));
    // scale invariance: the quarter-scale filter achieves the same MMSE
    std::vector<VectorC<double>> unit = {VectorC<double>::Ones(1)};
    VectorR<double> xi = VectorR<double>::Constant(1, 3.0);
    CHECK(mac_mmse(g, mom, xi)(0) ==
          doctest::Approx(mac_mmse(unit, mom, xi)(0)).epsilon(1e-14));
  }
  SUBCASE("the update never increases any stream's average MMSE") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 10; ++t) {
      StreamLayout layout(std::vector<int>{2, 1});
      PartialCsi<double> csi = oracles::random_csi(2, 4, 3, 1.0, rng);
      ChannelSampleSet<double> set = sample_channels(csi, 8, rng());
      TauSet<double> tau = oracles::random_tau(layout, 3, 8, rng);
      Moments<double> mom = estimate_moments(set, csi, layout, tau);
      std::vector<VectorC<double>> g_old;
      for (int a = 0; a < 3; ++a)
        g_old.push_back(random_unit_vector<double>(4, rng));
      VectorR<double> xi(3);
      xi << 0.8, 1.4, 0.5;
      VectorR<double> before = mac_mmse(g_old, mom, xi);
      VectorR<double> after = mac_mmse(update_receivers(mom, xi), mom, xi);
      for (Index a = 0; a < 3; ++a) CHECK(after(a) <= before(a) + 1e-12);
    }
  }
}

TEST_CASE("power allocation") {
  SUBCASE("scalar closed form") {
    Moments<double> mom = unit_moments();
    std::vector<VectorC<double>> g = {VectorC<double>::Ones(1)};
    VectorR<double> xi =
        solve_power_allocation(g, mom, VectorR<double>::Constant(1, 0.25));
    CHECK(xi(0) == doctest::Approx(3.0).epsilon(1e-12));
  }
  SUBCASE("unit target switches the stream off") {
    std::mt19937_64 rng(42);
    StreamLayout layout(std::vector<int>{2});
    PartialCsi<double> csi = oracles::random_csi(1, 3, 2, 0.5, rng);
    ChannelSampleSet<double> set = sample_channels(csi, 5, 7);
    TauSet<double> tau = oracles::random_tau(layout, 2, 5, rng);
    Moments<double> mom = estimate_moments(set, csi, layout, tau);
    std::vector<VectorC<double>> g = {random_unit_vector<double>(3, rng),
                                      random_unit_vector<double>(3, rng)};
    VectorR<double> eps(2);
    eps << 0.6, 1.0;
    VectorR<double> xi = solve_power_allocation(g, mom, eps);
    CHECK(xi(1) == 0.0);
    // with the idle stream removed entirely, the active power is unchanged
    StreamLayout solo(std::vector<int>{1});
    Moments<double> mom1;
    mom1.layout = solo;
    mom1.mu = {mom.mu[0]};
    mom1.theta = {mom.theta[0]};
    VectorR<double> xi_solo = solve_power_allocation(
        {g[0]}, mom1, VectorR<double>::Constant(1, 0.6));
    CHECK(xi(0) == doctest::Approx(xi_solo(0)).epsilon(1e-14));
  }
  SUBCASE("matches the interference fixed point") {
    std::mt19937_64 rng(43);
    for (int t = 0; t < 20; ++t) {
      StreamLayout layout(std::vector<int>{1, 1});
      PartialCsi<double> csi = oracles::random_csi(2, 3, 2, 0.7, rng);
      ChannelSampleSet<double> set = sample_channels(csi, 4, rng());
      TauSet<double> tau = oracles::random_tau(layout, 2, 4, rng);
      Moments<double> mom = estimate_moments(set, csi, layout, tau);
      std::vector<VectorC<double>> g = {random_unit_vector<double>(3, rng),
                                        random_unit_vector<double>(3, rng)};
      VectorR<double> eps(2);
      eps << 0.5 + 0.4 * uniform01(rng), 0.5 + 0.4 * uniform01(rng);
      auto oracle = oracles::fixed_point_power(g, mom, eps);
      VectorR<double> xi;
      try {
        xi = solve_power_allocation(g, mom, eps);
      } catch (const InfeasibleTargetsError&) {
        CHECK_FALSE(oracle.has_value());
        continue;
      }
      REQUIRE(oracle.has_value());
      CHECK((xi - *oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
  SUBCASE("achieved MMSE hits the targets") {
    std::mt19937_64 rng(44);
    StreamLayout layout(std::vector<int>{2, 1});
    PartialCsi<double> csi = oracles::random_csi(2, 4, 3, 0.6, rng);
    ChannelSampleSet<double> set = sample_channels(csi, 6, 3);
    TauSet<double> tau = oracles::random_tau(layout, 3, 6, rng);
    Moments<double> mom = estimate_moments(set, csi, layout, tau);
    std::vector<VectorC<double>> g;
    for (int a = 0; a < 3; ++a) g.push_back(random_unit_vector<double>(4, rng));
    VectorR<double> eps = VectorR<double>::Constant(3, 0.7);
    VectorR<double> xi = solve_power_allocation(g, mom, eps);
    VectorR<double> achieved = mac_mmse(g, mom, xi);
    CHECK((achieved - eps).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("unreachable targets raise the typed error") {
    // zero-mean effective channel: |g^H mu|^2 = 0, nothing can be met
    Moments<double> mom = unit_moments();
    mom.mu[0](0) = 0.0;
    std::vector<VectorC<double>> g = {VectorC<double>::Ones(1)};
    CHECK_THROWS_AS(
        solve_power_allocation(g, mom, VectorR<double>::Constant(1, 0.5)),
        InfeasibleTargetsError);
    CHECK_THROWS_AS(
        solve_power_allocation(g, mom, VectorR<double>::Constant(1, 1.5)),
        ConfigError);  // out-of-range target is a usage error, not infeasibility
  }
}

TEST_CASE("per-sample precoder update") {
  std::mt19937_64 rng(45);
  SUBCASE("no interference reduces to the matched filter") {
    StreamLayout layout(std::vector<int>{1});
    PartialCsi<double> csi = oracles::random_csi(1, 4, 3, 0.8, rng);
    ChannelSampleSet<double> set = sample_channels(csi, 3, 6);
    SampleMatrices<double> w = whiten_samples(set, csi);
    std::vector<VectorC<double>> g = {random_unit_vector<double>(4, rng)};
    TauSet<double> tau = update_precoders_per_sample<double>(
        g, VectorR<double>::Zero(1), w, layout);
    for (Index m = 0; m < 3; ++m) {
      VectorC<double> matched = w[0][m].adjoint() * g[0];
      matched /= matched.norm();
      CHECK((tau[0][m] - matched).norm() < 1e-13);
    }
  }
  SUBCASE("scalar link gives the unit precoder") {
    StreamLayout layout(std::vector<int>{1});
    SampleMatrices<double> w = {{MatrixC<double>::Constant(1, 1, Cplx<double>(0.8, 0))}};
    std::vector<VectorC<double>> g = {VectorC<double>::Ones(1)};
    TauSet<double> tau = update_precoders_per_sample<double>(
        g, VectorR<double>::Ones(1), w, layout);
    CHECK(std::abs(tau[0][0](0) - Cplx<double>(1, 0)) < 1e-14);
  }
  SUBCASE("the update never increases the power needed for the targets") {
    for (int t = 0; t < 10; ++t) {
      StreamLayout layout(std::vector<int>{2, 1});
      PartialCsi<double> csi = oracles::random_csi(2, 4, 3, 0.8, rng);
      ChannelSampleSet<double> set = sample_channels(csi, 6, rng());
      SampleMatrices<double> w = whiten_samples(set, csi);
      TauSet<double> tau = oracles::random_tau(layout, 3, 6, rng);
      Moments<double> mom = estimate_moments_whitened(w, layout, tau);
      VectorR<double> eps = VectorR<double>::Constant(3, 0.75);
      std::vector<VectorC<double>> g = update_receivers(mom, VectorR<double>::Zero(3));
      for (auto& v : g) v /= v.norm();
      VectorR<double> xi;
      try {
        xi = solve_power_allocation(g, mom, eps);
      } catch (const InfeasibleTargetsError&) {
        continue;
      }
      double before = xi.sum();
      TauSet<double> tau2 =
          update_precoders_per_sample(g, xi, w, layout, &tau);
      Moments<double> mom2 = estimate_moments_whitened(w, layout, tau2);
      try {
        double after = solve_power_allocation(g, mom2, eps).sum();
        CHECK(after <= before + 1e-9);
      } catch (const InfeasibleTargetsError&) {
        CHECK(false);  // an improving precoder update cannot lose feasibility
      }
    }
  }
}

TEST_CASE("inner solver") {
  SUBCASE("all-zero targets are trivially solved") {
    std::mt19937_64 rng(46);
    StreamLayout layout(std::vector<int>{2});
    PartialCsi<double> csi = oracles::random_csi(1, 3, 2, 1.0, rng);
    ChannelSampleSet<double> set = sample_channels(csi, 4, 8);
    MacState<double> state =
        solve_inner(VectorR<double>::Zero(2), layout, set, csi);
    CHECK(state.converged);
    CHECK(state.total_power == 0.0);
    CHECK(state.achieved_mmse(0) == doctest::Approx(1.0));
  }
  SUBCASE("perfect-CSI scalar link has the closed-form power") {
    PartialCsi<double> csi = unit_scalar_csi();
    ChannelSampleSet<double> set = sample_channels(csi, 1, 1);
    StreamLayout layout(std::vector<int>{1});
    for (double rho : {0.5, 1.0, 2.0}) {
      MacState<double> state = solve_inner(
          VectorR<double>::Constant(1, rho), layout, set, csi);
      CHECK(state.total_power ==
            doctest::Approx(std::exp2(rho) - 1.0).epsilon(1e-10));
      CHECK(state.achieved_mmse(0) == doctest::Approx(std::exp2(-rho)));
    }
  }
  SUBCASE("total power decreases across alternating cycles") {
    std::mt19937_64 rng(47);
    SmallInstance inst = make_instance(rng, {2, 2}, 4, 3, 6, 1.0, 0.8);
    double previous = std::numeric_limits<double>::infinity();
    for (int cap = 1; cap <= 8; ++cap) {
      InnerOptions<double> opts;
      opts.max_iters = cap;
      opts.tol = 1e-14;
      double power;
      try {
        power = solve_inner(inst.rho, inst.layout, inst.samples, inst.csi,
                            nullptr, opts)
                    .total_power;
      } catch (const InnerStallError<double>& e) {
        power = e.best.total_power;
      }
      CHECK(power <= previous + 1e-9);
      previous = power;
    }
  }
  SUBCASE("warm start from the converged state returns immediately") {
    std::mt19937_64 rng(48);
    SmallInstance inst = make_instance(rng, {2, 1}, 3, 2, 5, 0.8, 0.7);
    MacState<double> state =
        solve_inner(inst.rho, inst.layout, inst.samples, inst.csi);
    MacState<double> again =
        solve_inner(inst.rho, inst.layout, inst.samples, inst.csi, &state);
    CHECK(again.converged);
    CHECK(again.iterations <= 2);
    CHECK(again.total_power == doctest::Approx(state.total_power).epsilon(1e-10));
  }
  SUBCASE("iteration cap raises a stall carrying the best state") {
    std::mt19937_64 rng(49);
    SmallInstance inst = make_instance(rng, {2, 2}, 4, 3, 8, 1.2, 0.9);
    InnerOptions<double> opts;
    opts.max_iters = 2;
    opts.tol = 1e-16;
    CHECK_THROWS_AS(solve_inner(inst.rho, inst.layout, inst.samples, inst.csi,
                                nullptr, opts),
                    InnerStallError<double>);
  }
  SUBCASE("impossible targets raise the infeasibility error with a report") {
    // scalar fading link: the average MMSE cannot go below the error floor
    PartialCsi<double> csi;
    csi.H_bar = {MatrixC<double>::Identity(1, 1)};
    csi.C_err = {MatrixC<double>::Identity(1, 1)};
    csi.C_eta = {MatrixC<double>::Identity(1, 1)};
    ChannelSampleSet<double> set = sample_channels(csi, 400, 10);
    StreamLayout layout(std::vector<int>{1});
    try {
      solve_inner(VectorR<double>::Constant(1, 3.0), layout, set, csi);
      CHECK(false);
    } catch (const InfeasibleProblemError<double>& e) {
      CHECK(e.report.total_streams() == 1);
      CHECK(e.report.bound_rhs > 0.0);
    }
  }
}

TEST_CASE("downlink conversion") {
  SUBCASE("single stream transfers its power exactly") {
    std::mt19937_64 rng(50);
    SmallInstance inst = make_instance(rng, {1}, 3, 2, 5, 0.8, 1.0);
    MacState<double> state =
        solve_inner(inst.rho, inst.layout, inst.samples, inst.csi);
    BcSolution<double> bc = mac_to_bc(state, inst.samples, inst.csi);
    CHECK(bc.total_power == doctest::Approx(state.xi(0)).epsilon(1e-12));
    CHECK((bc.P[0].col(0) - std::sqrt(state.xi(0)) * state.g_tilde[0]).norm() <
          1e-12);
  }
  SUBCASE("deterministic channels equalize per-stream MSEs") {
    std::mt19937_64 rng(51);
    for (int t = 0; t < 5; ++t) {
      StreamLayout layout(std::vector<int>{1, 1});
      PartialCsi<double> csi = oracles::random_csi(2, 3, 2, 0.0, rng);
      ChannelSampleSet<double> set = sample_channels(csi, 1, rng());
      VectorR<double> rho(2);
      rho << 0.8 + uniform01(rng), 0.8 + uniform01(rng);
      InnerOptions<double> opts;
      opts.tol = 1e-12;
      MacState<double> state = solve_inner(rho, layout, set, csi, nullptr, opts);
      BcSolution<double> bc = mac_to_bc(state, set, csi);
      // direct recomputation with per-sample MMSE receivers
      for (Index k = 0; k < 2; ++k) {
        MatrixC<double> f =
            bc_mmse_receiver(bc.P, k, set.at(k, 0), csi.C_eta[k]);
        double mse = bc_mse(bc.P, f, k, set.at(k, 0), csi.C_eta[k]);
        CHECK(mse == doctest::Approx(state.achieved_mmse(layout.flat(k, 0)))
                         .epsilon(1e-8));
      }
      CHECK(bc.duality_mse_residual < 1e-8);
    }
  }
  SUBCASE("total power is conserved with statistical knowledge") {
    std::mt19937_64 rng(52);
    SmallInstance inst = make_instance(rng, {2, 2}, 4, 3, 10, 1.0, 0.8);
    MacState<double> state =
        solve_inner(inst.rho, inst.layout, inst.samples, inst.csi);
    BcSolution<double> bc = mac_to_bc(state, inst.samples, inst.csi);
    CHECK(bc.duality_power_residual < 1e-8);
    CHECK(bc.total_power == doctest::Approx(state.total_power).epsilon(1e-8));
    // per-sample receivers can only improve on the statistical filters
    for (Index a = 0; a < 4; ++a)
      CHECK(bc.bc_mmse(a) <= state.achieved_mmse(a) + 1e-9);
  }
  SUBCASE("achieved rates clear the targets implied by the stream MMSEs") {
    std::mt19937_64 rng(53);
    SmallInstance inst = make_instance(rng, {2}, 3, 2, 12, 0.6, 0.8);
    MacState<double> state =
        solve_inner(inst.rho, inst.layout, inst.samples, inst.csi);
    BcSolution<double> bc = mac_to_bc(state, inst.samples, inst.csi);
    double implied = 0.0;
    for (Index a = 0; a < 2; ++a) implied -= std::log2(state.achieved_mmse(a));
    CHECK(bc.user_rates(0) >= implied - 1e-6);
  }
}
