#ifndef OCRS_KNAPSACK_HPP
#define OCRS_KNAPSACK_HPP

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ocrs/core.hpp"

// The Best-fit Magician: serves each realized size on the most-utilized
// sample paths where it still fits, keeping the empty-path measure at gamma.
namespace ocrs::knapsack {

struct ThresholdDecision {
  int eta_units = 0;
  double tie_serve_prob = 0.0;
  double mass_above = 0.0;  // P(eta < X <= 1-d), recorded for exact moves
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(int t, int d_units, double missing);
  int t = 0;  // 1-based period, 0 when unknown
  int d_units = 0;
  double missing = 0.0;
};

// Threshold of the serve window (eta, 1-d]: the largest eta whose window
// mass does not exceed gamma, the remainder served at eta with the tie
// probability. Fails when the mass at or below 1-d cannot cover gamma.
ThresholdDecision threshold(const UtilizationPmf& pmf, int d_units,
                            double gamma);

struct BestFitState {
  double gamma = 0.0;
  SizeGrid grid;
  UtilizationPmf pmf;  // distribution of the consumption before period t
  int t = 1;           // 1-based current period
};

BestFitState initial_state(const SingleResourceInstance& inst, double gamma);

// One period of the pmf evolution. Thresholds are probed for every listed
// realization, including zero-probability ones, so feasibility is exactly
// the existence of all thresholds.
BestFitState step(const BestFitState& state, const ScenarioDist& q);

// Online serve decision on a sample path.
bool decide(const BestFitState& state, const Scenario& realized,
            int consumed_units, double random_draw);

struct StepTrace {
  double empty_mass = 0.0;       // P(X_t = 0) after the step
  double invariant_slack = 0.0;  // max over b of LHS - RHS in the invariant
  double expected_units = 0.0;   // E[X_t] in grid units
};

struct PolicyRun {
  bool feasible = true;
  int failure_t = 0;
  std::string failure_reason;
  std::vector<StepTrace> trace;
  double reward_estimate = 0.0;       // analytic, or Monte Carlo when sampled
  double expected_utilization = 0.0;  // E[X_T] as a real
  long scan_ops = 0;                  // instrumented pmf-scan operations
  std::vector<std::map<int, ThresholdDecision>> thresholds;  // per period
  std::vector<UtilizationPmf> pmf_trajectory;  // filled when recorded
};

struct EvolveOptions {
  bool check_invariant = true;  // only meaningful for nonincreasing gammas
  bool record_pmfs = false;
};

// Shared engine: per-period guarantees gammas[t]; Algorithm 1 is the uniform
// special case. Infeasibility is a result, not a crash.
PolicyRun evolve_policy(const SingleResourceInstance& inst,
                        const std::vector<double>& gammas,
                        const EvolveOptions& opts = {});

// Uniform-gamma policy run; reward_estimate is the exact expectation
// gamma * sum E[r] when trials == 0, otherwise a Monte Carlo mean.
PolicyRun run_policy(const SingleResourceInstance& inst, double gamma,
                     std::uint64_t seed = 0, long trials = 0);

struct InvariantReport {
  double max_violation = 0.0;  // max over b of LHS - RHS
  int worst_b_units = 0;
  bool ok() const { return max_violation <= 1e-9; }
};

// The exponential sample-path invariant at every grid b in (0, 1/2].
InvariantReport invariant_check(const UtilizationPmf& pmf, double gamma);

// Rounds every size up to the grid with refinement K (same horizon).
SingleResourceInstance discretize_instance(const SingleResourceInstance& inst,
                                           int K);

// Deterministic-size worst case driving the LP optimum to 1/(3+e^-2).
SingleResourceInstance tightness_instance(int T, double eps);

// Four-query instance where large/small segregation caps the ratio at 1/4.
SingleResourceInstance large_small_instance(double eps, double r);

// max(V_L, V_S) / UP for policies that only serve large or only small sizes.
double large_small_baseline(const SingleResourceInstance& inst);

}  // namespace ocrs::knapsack

#endif  // OCRS_KNAPSACK_HPP
