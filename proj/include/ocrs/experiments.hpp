#ifndef OCRS_EXPERIMENTS_HPP
#define OCRS_EXPERIMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ocrs/core.hpp"

// Reproduction drivers shared by the acceptance suite and the CLI. Every
// driver is deterministic given its seed.
namespace ocrs::experiments {

// Deterministic generators ------------------------------------------------

// Arrival probabilities in [0.05, 0.9] scaled to sum at most k.
std::vector<double> random_p(std::uint64_t seed, int k, int t_max = 10);

// Budget-feasible single-resource instance on a random grid.
SingleResourceInstance random_single_instance(std::uint64_t seed, int t_max,
                                              int kt_max, int support_max);

MultiResourceInstance random_multi_instance(std::uint64_t seed, int m,
                                            int t_max, int kt_max,
                                            int support_max);

// Unit-density four-query example: sizes 1/2, 1/2, 1/3, 1 with the last
// query active w.p. eps/3.
SingleResourceInstance ud_example1_instance(double eps);

// Uniform k-unit worst-case discretization: N*k queries of probability 1/N.
SingleResourceInstance uniform_kunit_instance(int k, int n);

// Two-unit prophet instance: two deterministic unit-reward queries, n
// Bernoulli(lambda/n) stream queries of reward r1, and a final query of
// reward r2/eps active w.p. eps. All sizes are 1/2.
SingleResourceInstance prophet2_instance(int n, double r1, double r2,
                                         double lambda, double eps);

// Acceptance criteria ------------------------------------------------------

struct CriterionResult {
  int number = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

CriterionResult criterion_table1();           // 1: gamma*_k for k = 1..8
CriterionResult criterion_dominance();        // 2: beats 1 - 1/sqrt(k+3)
CriterionResult criterion_euler();            // 3: Euler convergence bound
CriterionResult criterion_certificates();     // 4: certificate optimality
CriterionResult criterion_footnote1();        // 5: 2/3 three ways
CriterionResult criterion_bestfit();          // 6: feasibility + invariant
CriterionResult criterion_tightness();        // 7: Dual(p,D) upper bound
CriterionResult criterion_large_small();      // 8: segregation vs Best-fit
CriterionResult criterion_ud_headline();      // 9: 0.3557 / 17/27 / 9/22
CriterionResult criterion_ud_upper();         // 10: (1-e^-2)/2 upper bound
CriterionResult criterion_prophet2();         // 11: 0.6269 prophet bound
CriterionResult criterion_dp_consistency();   // 12: DP == Dual(p,D)
CriterionResult criterion_routing();          // 13: multi-resource routing
CriterionResult criterion_discretization();   // 14: UP loss + step budget

std::vector<CriterionResult> run_all_criteria();

// CLI `reproduce` targets; returns true when every check in the target
// passes. Valid names: table1, knapsack-tightness, ud-0.3557, ud-upper,
// prophet2-0.6269, invariants.
bool reproduce_target(const std::string& target, std::string& report);

}  // namespace ocrs::experiments

#endif  // OCRS_EXPERIMENTS_HPP
