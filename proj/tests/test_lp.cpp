#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ocrs/experiments.hpp"
#include "ocrs/kunit.hpp"
#include "ocrs/lp.hpp"
#include "ocrs/oracle.hpp"

using namespace ocrs;
using namespace ocrs::lp;

TEST_CASE("simplex basics") {
  LinearProgram lp;
  lp.maximize = true;
  lp.add_variable("x");
  lp.objective = Eigen::VectorXd::Ones(1);
  lp.add_row(Eigen::VectorXd::Ones(1), Sense::LessEq, 1.0);
  auto r = simplex_solve(lp);
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.0));
  CHECK(r.value(lp, "x") == doctest::Approx(1.0));

  LinearProgram infeasible;
  infeasible.maximize = true;
  infeasible.add_variable("x");
  infeasible.objective = Eigen::VectorXd::Zero(1);
  infeasible.add_row(Eigen::VectorXd::Ones(1), Sense::GreaterEq, 2.0);
  infeasible.add_row(Eigen::VectorXd::Ones(1), Sense::LessEq, 1.0);
  CHECK(simplex_solve(infeasible).status == SolveStatus::Infeasible);

  LinearProgram unbounded;
  unbounded.maximize = true;
  unbounded.add_variable("x");
  unbounded.objective = Eigen::VectorXd::Ones(1);
  unbounded.add_row(Eigen::VectorXd::Ones(1), Sense::GreaterEq, 1.0);
  CHECK(simplex_solve(unbounded).status == SolveStatus::Unbounded);
}

TEST_CASE("k-unit LP on the two-query instance") {
  auto r = simplex_solve(build_dual_pk({0.5, 0.5}, 1));
  CHECK(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

  CHECK(simplex_solve(build_dual_pk({1.0}, 1)).objective ==
        doctest::Approx(1.0));
}

TEST_CASE("construction optimum equals the LP optimum") {
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 1 + trial % 4;
    auto p = experiments::random_p(100 + trial, k);
    const double lp_opt = simplex_solve(build_dual_pk(p, k)).objective;
    const double theta = kunit::solve_theta_star(p, k, 1e-11);
    CHECK(lp_opt == doctest::Approx(theta).epsilon(1e-6));
  }
}

TEST_CASE("strong duality between the two k-unit programs") {
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 1 + trial % 3;
    auto p = experiments::random_p(300 + trial, k);
    const double dual = simplex_solve(build_dual_pk(p, k)).objective;
    const double primal = simplex_solve(build_primal_pk(p, k)).objective;
    CHECK(dual == doctest::Approx(primal).epsilon(1e-6));
  }
}

TEST_CASE("primal LP at k=1 with a certain query") {
  CHECK(simplex_solve(build_primal_pk({1.0}, 1)).objective ==
        doctest::Approx(1.0));
}

TEST_CASE("explicit certificate is feasible for the primal LP") {
  auto p = experiments::random_p(41, 2);
  const double theta = kunit::solve_theta_star(p, 2, 1e-12);
  auto cert = kunit::build_dual_certificate(p, 2, theta);
  // Plug the certificate into the LP constraint rows directly.
  auto lp = build_primal_pk(p, 2);
  const int T = static_cast<int>(p.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(lp.num_variables());
  for (int l = 1; l <= 2; ++l)
    for (int t = 1; t <= T; ++t)
      x(lp.variable("beta[" + std::to_string(l) + "][" + std::to_string(t) +
                    "]")) = cert.beta(l - 1, t - 1);
  for (int t = 1; t <= T; ++t)
    x(lp.variable("xi[" + std::to_string(t) + "]")) = cert.xi(t - 1);
  for (int i = 0; i < lp.num_rows(); ++i) {
    const double lhs = lp.constraints.row(i).dot(x);
    if (lp.senses[i] == Sense::GreaterEq)
      CHECK(lhs >= lp.rhs(i) - 1e-9);
    else if (lp.senses[i] == Sense::Equal)
      CHECK(lhs == doctest::Approx(lp.rhs(i)).epsilon(1e-9));
  }
  CHECK(lp.objective.dot(x) == doctest::Approx(theta).epsilon(1e-8));
}

TEST_CASE("UP relaxation") {
  // Budget-feasible single resource: everything is served fractionally.
  auto inst = experiments::random_single_instance(55, 6, 20, 2);
  double reward = 0.0;
  for (const auto& q : inst.queries) reward += expected_reward(q);
  auto up = simplex_solve(build_up_lp(oracle::as_multi(inst)));
  CHECK(up.objective == doctest::Approx(reward).epsilon(1e-9));

  // A single over-budget query binds the capacity row: optimum r/2.
  SingleResourceInstance over;
  over.grid = {1, 1};
  over.queries.resize(1);
  over.queries[0].support = {{1.0, 3.0, 1}};
  auto mi = oracle::as_multi(over);
  mi.queries[0].support[0].size_units(0) = 2;  // size 2 on a 1-unit capacity
  CHECK(simplex_solve(build_up_lp(mi)).objective ==
        doctest::Approx(1.5).epsilon(1e-9));

  // Symmetric two-resource instance: the optimum value is invariant under
  // swapping the resources (vertices need not split evenly).
  auto sym = experiments::random_multi_instance(77, 2, 5, 12, 2);
  for (auto& q : sym.queries)
    for (auto& sc : q.support) {
      sc.reward(1) = sc.reward(0);
      sc.size_units(1) = sc.size_units(0);
    }
  auto swapped = sym;
  for (auto& q : swapped.queries)
    for (auto& sc : q.support) {
      std::swap(sc.reward(0), sc.reward(1));
      std::swap(sc.size_units(0), sc.size_units(1));
    }
  CHECK(oracle::up_value(sym) ==
        doctest::Approx(oracle::up_value(swapped)).epsilon(1e-9));
  auto routing = oracle::route(sym);
  CHECK(oracle::up_value(routing.sub_instances[0]) +
            oracle::up_value(routing.sub_instances[1]) ==
        doctest::Approx(routing.up_total).epsilon(1e-8));
}

TEST_CASE("knapsack LP with all sizes 1/k matches the k-unit LP") {
  const int k = 2;
  auto p = experiments::random_p(60, k, 6);
  SingleResourceInstance inst;
  inst.grid = {k, static_cast<int>(p.size())};
  const int d = inst.grid.units() / k;
  for (double prob : p) {
    ScenarioDist q;
    q.support = {{prob, 1.0, d}};
    inst.queries.push_back(q);
  }
  const double pd = simplex_solve(build_dual_pd(inst)).objective;
  const double pk = simplex_solve(build_dual_pk(p, k)).objective;
  CHECK(pd == doctest::Approx(pk).epsilon(1e-8));
}

TEST_CASE("knapsack LP trivia") {
  SingleResourceInstance one;
  one.grid = {1, 1};
  one.queries.resize(1);
  one.queries[0].support = {{0.7, 1.0, 1}};
  CHECK(simplex_solve(build_dual_pd(one)).objective == doctest::Approx(1.0));
}

TEST_CASE("state cap raises") {
  auto inst = experiments::random_single_instance(88, 8, 60, 3);
  CHECK_THROWS_AS(build_dual_pd(inst, 5), std::runtime_error);
}

TEST_CASE("DP on worst-case rewards equals the LP optimum") {
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = experiments::random_single_instance(3000 + trial, 5, 12, 3);
    auto rep = dp_consistency_check(inst, 1e-6);
    CHECK(rep.ok);
  }
}

TEST_CASE("lemma-3 on degenerate instances") {
  // Single deterministic query: everything equals one.
  SingleResourceInstance one;
  one.grid = {1, 1};
  one.queries.resize(1);
  one.queries[0].support = {{1.0, 2.0, 1}};
  auto rep = dp_consistency_check(one, 1e-9);
  CHECK(rep.ok);
  CHECK(rep.dual_pd_value == doctest::Approx(1.0));
  CHECK(rep.dp_ratio == doctest::Approx(1.0));
}

TEST_CASE("LP text export lists objective and rows") {
  LinearProgram lp;
  lp.maximize = true;
  lp.add_variable("x");
  lp.add_variable("y");
  lp.objective = Eigen::VectorXd::Ones(2);
  Eigen::VectorXd row(2);
  row << 1.0, 2.0;
  lp.add_row(row, Sense::LessEq, 3.0);
  auto text = lp.to_text();
  CHECK(text.find("max") == 0);
  CHECK(text.find("<= 3") != std::string::npos);
}
