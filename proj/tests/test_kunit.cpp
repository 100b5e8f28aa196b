#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ocrs/experiments.hpp"
#include "ocrs/kunit.hpp"

using namespace ocrs;
using namespace ocrs::kunit;

TEST_CASE("candidate construction on the two-query instance") {
  const std::vector<double> p = {0.5, 0.5};
  auto c = build_candidate(p, 1, 2.0 / 3.0);
  CHECK(c.x(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(c.x(0, 1) == doctest::Approx(1.0 / 3.0));  // p_2 * (1 - 1/3) as well
  CHECK(c.breakpoints[1] == 2);
}

TEST_CASE("candidate at theta = 0 is identically zero") {
  const std::vector<double> p = {0.3, 0.2, 0.4};
  auto c = build_candidate(p, 2, 0.0);
  CHECK(c.x.cwiseAbs().maxCoeff() == 0.0);
  for (int l = 1; l <= 2; ++l) CHECK(c.breakpoints[l] == 3);
}

TEST_CASE("uniform probabilities trigger the top-up recursion switch") {
  const int k = 2, T = 10;
  const std::vector<double> p(T, static_cast<double>(k) / T);
  auto c = build_candidate(p, k, 1.0);
  // With theta = 1 the first level saturates at the first time where
  // 1 - sum theta p < theta.
  int expected = 0;
  double acc = 0.0;
  for (int t = 1; t <= T; ++t) {
    acc += p[t - 1];
    if (1.0 > 1.0 - acc) {
      expected = t;
      break;
    }
  }
  CHECK(c.breakpoints[1] == expected);
  for (int t = 1; t <= c.breakpoints[1]; ++t)
    CHECK(c.x(0, t - 1) == doctest::Approx(p[t - 1]));
}

TEST_CASE("feasibility test") {
  const std::vector<double> p = {0.5, 0.5};
  CHECK(is_feasible(build_candidate(p, 1, 0.0)));
  auto boundary = build_candidate(p, 1, 2.0 / 3.0);
  CHECK(is_feasible(boundary));
  CHECK(boundary.x(0, 0) == doctest::Approx(1.0 - 2.0 / 3.0));
  auto above = build_candidate(p, 1, 0.9);
  CHECK(above.x(0, 0) == doctest::Approx(0.45));
  CHECK_FALSE(is_feasible(above));
}

TEST_CASE("theta* on reference instances") {
  CHECK(solve_theta_star({0.5, 0.5}, 1, 1e-12) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(solve_theta_star({1.0}, 1, 1e-12) == doctest::Approx(1.0));
  // Uniform k/N over N*k slots approaches the Poisson worst case.
  const int n = 2000, k = 2;
  std::vector<double> uniform(n * k, 1.0 / n);
  CHECK(solve_theta_star(uniform, k, 1e-10) ==
        doctest::Approx(0.6148).epsilon(8e-4));
}

TEST_CASE("cumulative construction is monotone in theta") {
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + trial % 3;
    auto p = experiments::random_p(500 + trial, k);
    const double lo = counter_uniform(42, trial, 0, 0);
    const double hi = lo + (1.0 - lo) * counter_uniform(42, trial, 1, 0);
    auto a = build_candidate(p, k, lo);
    auto b = build_candidate(p, k, hi);
    for (int l = 1; l <= k; ++l) {
      double ca = 0.0, cb = 0.0;
      for (int t = 1; t <= static_cast<int>(p.size()); ++t) {
        ca += a.x(l - 1, t - 1);
        cb += b.x(l - 1, t - 1);
        CHECK(cb >= ca - 1e-12);
      }
    }
  }
}

TEST_CASE("candidate x stays nonnegative and rate-bounded") {
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + trial % 4;
    auto p = experiments::random_p(800 + trial, k);
    auto c = build_candidate(p, k, counter_uniform(7, trial, 0, 0));
    for (int t = 1; t <= static_cast<int>(p.size()); ++t) {
      double sum = 0.0;
      for (int l = 1; l <= k; ++l) {
        CHECK(c.x(l - 1, t - 1) >= -1e-12);
        sum += c.x(l - 1, t - 1);
      }
      CHECK(sum <= c.theta * p[t - 1] + 1e-10);
    }
  }
}

TEST_CASE("probability splitting") {
  auto with_zero = split_probability({0.2, 0.3}, 2, 1.0);
  REQUIRE(with_zero.size() == 3);
  CHECK(with_zero[1] == doctest::Approx(0.3));
  CHECK(with_zero[2] == 0.0);

  auto halves = split_probability({0.6}, 1, 0.5);
  CHECK(halves[0] == doctest::Approx(0.3));
  CHECK(halves[1] == doctest::Approx(0.3));
}

TEST_CASE("splitting can only lower theta*") {
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 1 + trial % 3;
    auto p = experiments::random_p(900 + trial, k);
    const int q = 1 + static_cast<int>(counter_uniform(5, trial, 0, 0) *
                                       p.size());
    const double sigma = counter_uniform(5, trial, 1, 0);
    const double before = solve_theta_star(p, k, 1e-11);
    const double after =
        solve_theta_star(split_probability(p, q, sigma), k, 1e-11);
    CHECK(after <= before + 1e-9);
  }
}

TEST_CASE("dual certificate reduces to the single-level form at k = 1") {
  const std::vector<double> p = {0.5, 0.4};
  const double theta = solve_theta_star(p, 1, 1e-12);
  auto cert = build_dual_certificate(p, 1, theta);
  CHECK(cert.beta(0, 0) == 0.0);                    // zero before the end
  CHECK(cert.beta(0, 1) == doctest::Approx(cert.scale));
  CHECK(cert.xi(0) == doctest::Approx(0.4 * cert.scale));  // phi_1 p_T R
  CHECK(cert.objective(p) == doctest::Approx(theta).epsilon(1e-10));
}

TEST_CASE("degenerate theta* = 1: uniform xi, beta on the last query") {
  const std::vector<double> p = {0.01, 0.01, 0.01};
  const double theta = solve_theta_star(p, 1, 1e-12);
  auto cert = build_dual_certificate(p, 1, theta);
  CHECK(cert.xi(0) == doctest::Approx(cert.xi(1)));
  CHECK(cert.xi(0) == doctest::Approx(0.01 * cert.scale));
  CHECK(cert.beta(0, 0) == 0.0);
  CHECK(cert.beta(0, 1) == 0.0);
  CHECK(cert.beta(0, 2) == doctest::Approx(cert.scale));
  auto rep = verify_certificate(build_candidate(p, 1, theta), cert, p, 1);
  CHECK(rep.ok);
}

TEST_CASE("certificate verification on the reference instance") {
  const std::vector<double> p = {0.5, 0.5};
  const double theta = solve_theta_star(p, 1, 1e-12);
  auto cand = build_candidate(p, 1, theta);
  auto cert = build_dual_certificate(p, 1, theta);
  auto rep = verify_certificate(cand, cert, p, 1);
  CHECK(rep.ok);
  CHECK(rep.slackness_max <= 1e-8);
  CHECK(rep.objective_gap <= 1e-8);

  // A candidate above theta* must fail primal feasibility.
  auto bad = build_candidate(p, 1, theta + 0.05);
  auto bad_rep = verify_certificate(bad, cert, p, 1);
  CHECK_FALSE(bad_rep.ok);
  CHECK(bad_rep.primal_residual > 1e-8);

  // Rescaling the certificate breaks the normalization row.
  auto scaled = cert;
  scaled.beta *= 2.0;
  scaled.xi *= 2.0;
  auto scaled_rep = verify_certificate(cand, scaled, p, 1);
  CHECK_FALSE(scaled_rep.ok);
  CHECK(scaled_rep.normalization_gap > 1e-9);
}

TEST_CASE("certificate verifies on a saturated uniform instance") {
  // Every level's window is populated here, exercising the full depth of
  // the chain recursion behind the certificate coefficients.
  const int k = 5, T = 15;
  const std::vector<double> p(T, static_cast<double>(k) / T);
  const double theta = solve_theta_star(p, k, 1e-12);
  auto rep = verify_certificate(build_candidate(p, k, theta),
                                build_dual_certificate(p, k, theta), p, k);
  CHECK(rep.ok);
  CHECK(rep.objective_gap <= 1e-10);
  CHECK(rep.slackness_max <= 1e-10);
}

TEST_CASE("certificate rejects probabilities at one") {
  CHECK_THROWS_AS(build_dual_certificate({1.0, 0.2}, 1, 0.5),
                  std::domain_error);
}

TEST_CASE("magician policy on the two-query instance") {
  const std::vector<double> p = {0.5, 0.5};
  auto policy = magician_policy(p, 1, 2.0 / 3.0);
  CHECK(policy.serve_prob(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(policy.serve_prob(0, 1) == doctest::Approx(1.0));
  CHECK(policy.max_exante_error <= 1e-9);
}

TEST_CASE("magician policy at theta = 0 never serves") {
  auto policy = magician_policy({0.4, 0.4}, 1, 0.0);
  CHECK(policy.serve_prob.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("magician ex-ante identity on random instances") {
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 1 + trial % 4;
    auto p = experiments::random_p(1200 + trial, k);
    const double theta = solve_theta_star(p, k, 1e-11);
    auto policy = magician_policy(p, k, theta);
    CHECK(policy.max_exante_error <= 1e-9);
  }
}
