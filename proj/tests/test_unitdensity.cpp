#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ocrs/experiments.hpp"
#include "ocrs/oracle.hpp"
#include "ocrs/unitdensity.hpp"

using namespace ocrs;
using namespace ocrs::unitdensity;

TEST_CASE("h profile starts at gamma0 and both clauses hold on the grid") {
  auto prof = h_profile(0.3977, 1e-3);
  CHECK(prof.values(0) == 0.3977);
  const double g0 = prof.gamma0;
  for (int i = 1; i < prof.values.size(); ++i) {
    const double h = prof.values(i);
    const double integral = prof.integral(i);
    CHECK(h <= prof.values(i - 1) + 1e-15);  // nonincreasing
    CHECK(h >= 0.0);
    CHECK(h <= 1.0 - g0 - integral + 1e-9);
    CHECK(h <=
          1.0 - 2.0 * integral - g0 * std::exp(-2.0 * integral / g0) + 1e-9);
  }
}

TEST_CASE("profile integral near the headline optimum") {
  CHECK(h_profile(0.3977, 1e-5).total() ==
        doctest::Approx(0.3557).epsilon(3e-3));
  // Grid refinement consistency.
  CHECK(std::abs(h_profile(0.3977, 1e-3).total() -
                 h_profile(0.3977, 1e-5).total()) <= 5e-4);
}

TEST_CASE("optimize_gamma0 beats the uniform guarantee") {
  auto best = optimize_gamma0(1e-4);
  CHECK(best.value > bestfit_gamma());
  CHECK(best.value == doctest::Approx(0.3557).epsilon(3e-3));
  CHECK(best.gamma0 == doctest::Approx(0.3977).epsilon(2e-2));
}

TEST_CASE("gamma sequence windows") {
  auto single = gamma_sequence({1.0}, 0.3977, 1e-4);
  CHECK(single.gammas.size() == 1);
  CHECK(single.gammas[0] ==
        doctest::Approx(h_profile(0.3977, 1e-4).total()).epsilon(1e-9));

  // Fine uniform windows converge to the profile pointwise.
  const int T = 200;
  auto seq = gamma_sequence(std::vector<double>(T, 1.0 / T), 0.3977, 1e-5);
  auto prof = h_profile(0.3977, 1e-5);
  for (int t = 1; t <= T; t += 37) {
    const double mid = (t - 0.5) / T;
    const int node = static_cast<int>(mid / prof.step);
    CHECK(seq.gammas[t - 1] ==
          doctest::Approx(prof.values(node)).epsilon(1e-2));
  }
}

TEST_CASE("window-averaged sequences satisfy the guarantee program") {
  for (int trial = 0; trial < 500; ++trial) {
    const int T = 1 + static_cast<int>(counter_uniform(21, trial, 0, 0) * 8);
    std::vector<double> psi(T);
    double sum = 0.0;
    for (int t = 0; t < T; ++t) {
      psi[t] = 0.01 + counter_uniform(21, trial, t, 1);
      sum += psi[t];
    }
    const double budget = 0.2 + 0.8 * counter_uniform(21, trial, 9, 2);
    for (double& v : psi) v *= budget / sum;
    const double g0 = 0.05 + 0.9 * counter_uniform(21, trial, 5, 3);
    auto seq = gamma_sequence(psi, g0, 1e-3);
    CHECK(check_op_feasible(seq.gammas, psi));
  }
}

TEST_CASE("guarantee program checker") {
  CHECK(check_op_feasible({0.0, 0.0}, {0.4, 0.4}));
  // The uniform tight guarantee is feasible whenever the budget fits.
  const double g = bestfit_gamma();
  CHECK(check_op_feasible({g, g, g}, {0.3, 0.3, 0.4}));
  // A large first guarantee with a heavy first window violates the cap.
  CHECK_FALSE(check_op_feasible({0.9, 0.5}, {0.5, 0.2}));
}

TEST_CASE("example-1 gamma sequence reaches 17/27 utilization") {
  auto inst = experiments::ud_example1_instance(0.0);
  auto run = run_ud_policy(inst, {1.0, 1.0 / 3.0, 5.0 / 9.0, 0.0});
  REQUIRE(run.feasible);
  CHECK(run.expected_utilization ==
        doctest::Approx(17.0 / 27.0).epsilon(1e-12));

  // All-zero sequence: feasible, nothing served.
  auto idle = run_ud_policy(inst, {0.0, 0.0, 0.0, 0.0});
  CHECK(idle.feasible);
  CHECK(idle.expected_utilization == 0.0);
}

TEST_CASE("uniform gamma on example 1 is capped at 9/22") {
  auto inst = experiments::ud_example1_instance(0.0);
  const double cap = 9.0 / 22.0;
  auto run_at = [&](double g) {
    return knapsack::evolve_policy(inst, std::vector<double>(4, g),
                                   {false, false});
  };
  CHECK(run_at(cap - 1e-7).feasible);
  CHECK_FALSE(run_at(cap + 1e-7).feasible);
}

TEST_CASE("expected utilization equals the gamma-weighted size sum") {
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = experiments::random_single_instance(5200 + trial, 10, 60, 3);
    const double unit = inst.grid.unit();
    for (auto& q : inst.queries)  // make it unit-density
      for (auto& sc : q.support) sc.reward = sc.size_units * unit;
    std::vector<double> psi;
    for (const auto& q : inst.queries)
      psi.push_back(expected_size(q, inst.grid));
    auto seq = gamma_sequence(psi, 0.3977, 1e-4);
    auto run = run_ud_policy(inst, seq.gammas);
    REQUIRE(run.feasible);
    double want = 0.0;
    for (int t = 0; t < inst.horizon(); ++t) want += seq.gammas[t] * psi[t];
    CHECK(run.expected_utilization == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("generalized invariant holds for nonincreasing sequences") {
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = experiments::random_single_instance(8400 + trial, 10, 60, 3);
    const double unit = inst.grid.unit();
    for (auto& q : inst.queries)
      for (auto& sc : q.support) sc.reward = sc.size_units * unit;
    std::vector<double> psi;
    for (const auto& q : inst.queries)
      psi.push_back(expected_size(q, inst.grid));
    auto seq = gamma_sequence(psi, 0.35, 1e-3);
    auto run = run_ud_policy(inst, seq.gammas);
    REQUIRE(run.feasible);
    for (const auto& s : run.trace) CHECK(s.invariant_slack <= 1e-9);
  }
}

TEST_CASE("empty-path mass never drops below the bound") {
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = experiments::random_single_instance(9300 + trial, 10, 60, 3);
    const double unit = inst.grid.unit();
    for (auto& q : inst.queries)
      for (auto& sc : q.support) sc.reward = sc.size_units * unit;
    std::vector<double> psi;
    for (const auto& q : inst.queries)
      psi.push_back(expected_size(q, inst.grid));
    auto seq = gamma_sequence(psi, 0.3977, 1e-3);
    auto run = run_ud_policy(inst, seq.gammas);
    REQUIRE(run.feasible);
    for (int t = 1; t <= inst.horizon(); ++t)
      CHECK(run.trace[t - 1].empty_mass >=
            empty_mass_bound(seq.gammas, psi, t) - 1e-9);
  }
}

TEST_CASE("empty-mass bound edge cases") {
  CHECK(empty_mass_bound({0.5}, {0.5}, 0) == 1.0);
  CHECK(empty_mass_bound({0.0, 0.0}, {0.5, 0.5}, 2) == 1.0);
  // A uniform sequence recovers the uniform-guarantee style bound.
  const double g = bestfit_gamma();
  std::vector<double> gam(4, g), psi(4, 0.25);
  const double used = g;  // gamma * sum psi = gamma
  CHECK(empty_mass_bound(gam, psi, 4) ==
        doctest::Approx(std::min(1 - g - used,
                                 1 - 2 * used - g * std::exp(-2 * used / g))));
}

TEST_CASE("uniform sequence reproduces the single-gamma trajectory exactly") {
  auto inst = experiments::random_single_instance(1234, 12, 60, 3);
  const double gamma = 0.29;
  knapsack::EvolveOptions opts{true, true};
  auto uniform = knapsack::evolve_policy(
      inst, std::vector<double>(inst.horizon(), gamma), opts);
  auto single = knapsack::run_policy(inst, gamma);
  REQUIRE(uniform.feasible);
  REQUIRE(single.feasible);
  for (int t = 0; t < inst.horizon(); ++t) {
    CHECK(uniform.trace[t].empty_mass == single.trace[t].empty_mass);
    CHECK(uniform.trace[t].expected_units == single.trace[t].expected_units);
    for (const auto& [d, th] : uniform.thresholds[t]) {
      CHECK(single.thresholds[t].at(d).eta_units == th.eta_units);
      CHECK(single.thresholds[t].at(d).tie_serve_prob == th.tie_serve_prob);
    }
  }
}

TEST_CASE("worst-case budget uses the whole profile") {
  // h is nonincreasing, so the average over [0, k_T] is smallest at k_T = 1.
  auto prof = h_profile(0.3977, 1e-4);
  double worst = 2.0;
  for (double k_T : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    const double avg = prof.integral_to(k_T) / k_T;
    CHECK(avg <= worst + 1e-12);
    worst = avg;
  }
  CHECK(worst == doctest::Approx(prof.total()));
}

TEST_CASE("upper-bound instance") {
  auto inst = ud_upper_instance(1000);
  CHECK(oracle::up_value(inst) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ud_upper_ratio(1000) == doctest::Approx(0.43233).epsilon(1e-3));
  const double limit = (1.0 - std::exp(-2.0)) / 2.0;
  CHECK(std::abs(ud_upper_ratio(100000) - limit) < 1e-4);

  // Cross-check closed form against the DP oracle at a small horizon: with
  // identical rewards, serving the first arrival is optimal.
  const int T = 10;
  const double dp = oracle::dp_value(ud_upper_instance(T)).optimal_value();
  CHECK(dp == doctest::Approx(ud_upper_ratio(T)).epsilon(1e-12));
}
