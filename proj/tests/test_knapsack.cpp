#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ocrs/experiments.hpp"
#include "ocrs/knapsack.hpp"
#include "ocrs/lp.hpp"
#include "ocrs/oracle.hpp"

using namespace ocrs;
using namespace ocrs::knapsack;

TEST_CASE("threshold scanning") {
  UtilizationPmf point(10);
  point.at(0) = 1.0;
  auto th = threshold(point, 3, 0.3);
  CHECK(th.eta_units == 0);
  CHECK(th.tie_serve_prob == doctest::Approx(0.3));

  UtilizationPmf two(10);  // atoms at 0 and 1/2 on a 10-unit grid
  two.at(0) = 0.7;
  two.at(5) = 0.3;
  th = threshold(two, 4, 0.3);  // window is [0, 6]
  CHECK(th.eta_units == 5);
  CHECK(th.tie_serve_prob == doctest::Approx(1.0));

  UtilizationPmf heavy(10);
  heavy.at(0) = 0.2;
  heavy.at(9) = 0.8;
  CHECK_THROWS_AS(threshold(heavy, 5, 0.3), InfeasibleError);
}

TEST_CASE("single step closed forms") {
  SingleResourceInstance inst;
  inst.grid = {1, 4};
  inst.queries.resize(4);
  auto state = initial_state(inst, 0.4);

  ScenarioDist inactive;
  auto after = step(state, inactive);
  CHECK(after.pmf.at(0) == 1.0);
  CHECK(after.t == 2);

  ScenarioDist first;
  first.support = {{0.5, 1.0, 3}};
  after = step(state, first);
  CHECK(after.pmf.at(0) == doctest::Approx(1.0 - 0.4 * 0.5));
  CHECK(after.pmf.at(3) == doctest::Approx(0.4 * 0.5));
  CHECK(after.pmf.total() == doctest::Approx(1.0));
}

TEST_CASE("example-1 prefix matches the closed-form empty mass") {
  for (double eps : {0.25, 0.1}) {
    for (double gamma : {0.2, 0.35}) {
      auto inst = experiments::ud_example1_instance(eps);
      auto run = evolve_policy(inst, std::vector<double>(4, gamma));
      REQUIRE(run.feasible);
      CHECK(run.trace[2].empty_mass ==
            doctest::Approx(1.0 - 8.0 * gamma / 9.0 -
                            5.0 * gamma * (1.0 - eps) / 9.0)
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("decide follows the threshold rule") {
  SingleResourceInstance inst;
  inst.grid = {1, 2};
  inst.queries.resize(2);
  auto state = initial_state(inst, 0.3);
  Scenario sc{1.0, 1.0, 1};
  CHECK(decide(state, sc, 0, 0.1));        // at eta = 0, draw below 0.3
  CHECK_FALSE(decide(state, sc, 0, 0.5));  // draw above the tie probability
  Scenario big{1.0, 1.0, 2};
  CHECK_FALSE(decide(state, big, 1, 0.0));  // would exceed capacity
}

TEST_CASE("monte carlo conditional service rate concentrates at gamma") {
  auto inst = experiments::random_single_instance(321, 8, 40, 3);
  const double gamma = bestfit_gamma();
  auto run = run_policy(inst, gamma);
  REQUIRE(run.feasible);
  auto stats = oracle::monte_carlo(
      [&](int t, const Scenario& sc, int consumed, int, double tie) {
        const auto& ths = run.thresholds[t];
        auto it = ths.find(sc.size_units);
        if (it == ths.end() || consumed + sc.size_units > inst.grid.units())
          return false;
        if (consumed > it->second.eta_units) return true;
        return consumed == it->second.eta_units &&
               tie < it->second.tie_serve_prob;
      },
      inst, 100000, 5);
  for (int t = 0; t < inst.horizon(); ++t) {
    if (stats.active_count[t] < 1000) continue;
    const double rate = stats.conditional_service_rate[t];
    const double se = std::sqrt(gamma * (1 - gamma) / stats.active_count[t]);
    CHECK(std::abs(rate - gamma) <= 4 * se);
  }
}

TEST_CASE("run_policy is feasible at the tight gamma and exact in mean") {
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = experiments::random_single_instance(7000 + trial, 12, 60, 3);
    auto run = run_policy(inst, bestfit_gamma());
    REQUIRE(run.feasible);
    double reward = 0.0, psi = 0.0;
    for (const auto& q : inst.queries) {
      reward += expected_reward(q);
      psi += expected_size(q, inst.grid);
    }
    CHECK(run.reward_estimate ==
          doctest::Approx(bestfit_gamma() * reward).epsilon(1e-10));
    // Mean identity: E[X_T] = gamma * sum E[d_t].
    CHECK(run.expected_utilization ==
          doctest::Approx(bestfit_gamma() * psi).epsilon(1e-9));
  }
}

TEST_CASE("gamma = 0 run is trivially feasible") {
  auto inst = experiments::random_single_instance(17, 10, 50, 3);
  auto run = run_policy(inst, 0.0);
  CHECK(run.feasible);
  CHECK(run.reward_estimate == 0.0);
  CHECK(run.expected_utilization == 0.0);
}

TEST_CASE("invariant check") {
  UtilizationPmf point(10);
  point.at(0) = 1.0;
  CHECK(invariant_check(point, 0.3).ok());

  UtilizationPmf bad(10);  // mass 0.9 at utilization 0.1 with gamma = 0.1
  bad.at(1) = 0.9;
  bad.at(0) = 0.1;
  CHECK(invariant_check(bad, 0.1).max_violation > 1.0);
}

TEST_CASE("invariant holds along random feasible runs") {
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = experiments::random_single_instance(660 + trial, 15, 90, 3);
    auto run = evolve_policy(
        inst, std::vector<double>(inst.horizon(), bestfit_gamma()));
    REQUIRE(run.feasible);
    for (const auto& s : run.trace) CHECK(s.invariant_slack <= 1e-9);
  }
}

TEST_CASE("mass is conserved by every step") {
  auto inst = experiments::random_single_instance(31, 20, 100, 3);
  auto run = evolve_policy(inst,
                           std::vector<double>(inst.horizon(), 0.31),
                           {false, true});
  REQUIRE(run.feasible);
  for (const auto& pmf : run.pmf_trajectory)
    CHECK(std::abs(pmf.total() - 1.0) <= 1e-12);
}

TEST_CASE("discretization") {
  SingleResourceInstance inst;
  inst.grid = {100, 10};  // fine grid, 1000 units
  inst.queries.resize(10);
  inst.queries[0].support = {{0.5, 1.0, 301}};  // size 0.301
  auto coarse = discretize_instance(inst, 1);   // 10 units
  CHECK(coarse.queries[0].support[0].size_units == 4);  // rounds up to 0.4

  auto same = discretize_instance(inst, 100);
  CHECK(same.queries[0].support[0].size_units == 301);
}

TEST_CASE("discretized UP loses at most a 1/(K+1) fraction") {
  for (int trial = 0; trial < 30; ++trial) {
    auto inst = experiments::random_single_instance(4400 + trial, 6, 6, 2);
    inst.grid.refinement = 60;  // reinterpret sizes on a fine grid
    const int units = inst.grid.units();
    for (auto& q : inst.queries)
      for (auto& sc : q.support)
        sc.size_units = 1 + (sc.size_units * 97) % units;
    double budget = 0.0;
    for (const auto& q : inst.queries) budget += expected_size(q, inst.grid);
    if (budget > 1.0)
      for (auto& q : inst.queries)
        for (auto& sc : q.support) sc.prob /= budget * 1.01;
    const double up = oracle::up_value(inst);
    for (int K : {5, 20}) {
      const double up_coarse = oracle::up_value(discretize_instance(inst, K));
      CHECK(up_coarse / up >= K / (K + 1.0) - 1e-9);
    }
  }
}

TEST_CASE("tightness instance has unit budget and a capped LP value") {
  auto inst = tightness_instance(20, 0.02);
  double budget = 0.0;
  for (const auto& q : inst.queries) budget += expected_size(q, inst.grid);
  CHECK(budget == doctest::Approx(1.0).epsilon(1e-12));

  const double opt = lp::simplex_solve(lp::build_dual_pd(inst)).objective;
  CHECK(opt <= bestfit_gamma() + 0.2);
  CHECK(opt >= bestfit_gamma() - 1e-9);
}

TEST_CASE("tightness optimum shrinks toward the guarantee as eps drops") {
  double prev = 1.0;
  for (double eps : {0.05, 0.01}) {
    auto inst = tightness_instance(40, eps);
    const double opt = lp::simplex_solve(lp::build_dual_pd(inst)).objective;
    CHECK(opt < prev);
    prev = opt;
  }
  CHECK(prev <= bestfit_gamma() + 6 * 0.01);
}

TEST_CASE("running above the safe guarantee fails as a result, not a crash") {
  auto inst = tightness_instance(10, 0.05);
  CHECK(run_policy(inst, bestfit_gamma()).feasible);
  auto hot = run_policy(inst, 0.40);
  CHECK_FALSE(hot.feasible);
  CHECK(hot.failure_t == 10);  // the full-size final query runs out of room
  CHECK(hot.failure_reason.find("no threshold") != std::string::npos);
  auto hotter = run_policy(inst, 0.60);
  CHECK_FALSE(hotter.feasible);
  CHECK(hotter.failure_t < 10);  // mid-sized queries already fail earlier
}

TEST_CASE("segregated large/small baseline on the four-query instance") {
  const double eps = 0.01;
  auto inst = large_small_instance(eps, 1.0);
  const double ratio = large_small_baseline(inst);
  // Exact value (1 + 2 eps) / 4 for this family.
  CHECK(ratio == doctest::Approx((1.0 + 2.0 * eps) / 4.0).epsilon(1e-9));

  const double tiny = knapsack::large_small_baseline(
      large_small_instance(1e-4, 1.0));
  CHECK(tiny == doctest::Approx(0.25).epsilon(1e-3));

  // The Best-fit policy is feasible on the same instance and collects the
  // gamma fraction of UP exactly in expectation.
  auto run = run_policy(inst, bestfit_gamma());
  REQUIRE(run.feasible);
  CHECK(run.reward_estimate / oracle::up_value(inst) ==
        doctest::Approx(bestfit_gamma()).epsilon(1e-10));
  CHECK(bestfit_gamma() > ratio);
}
