#ifndef OCRS_ORACLE_HPP
#define OCRS_ORACLE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "ocrs/core.hpp"

// Ground-truth machinery: exact DP value of the optimal online policy, exact
// offline optimum per realization, the ex-ante upper bound, random routing,
// and the seeded Monte Carlo harness.
namespace ocrs::oracle {

class DpTable {
 public:
  DpTable(int horizon, int units)
      : value_(Eigen::MatrixXd::Zero(horizon + 1, units + 1)) {}

  // value(t, c) with t in 0..T (t == T is the terminal all-zero row).
  double value(int t, int c_units) const { return value_(t, c_units); }
  double& value(int t, int c_units) { return value_(t, c_units); }
  double optimal_value() const {
    return value_(0, static_cast<int>(value_.cols()) - 1);
  }
  int horizon() const { return static_cast<int>(value_.rows()) - 1; }
  int units() const { return static_cast<int>(value_.cols()) - 1; }

  // serve_at(t, w, c): whether scenario w of query t is served at capacity c.
  bool serve_at(int t, int w, int c_units) const {
    return serve_[t][w][c_units];
  }
  std::vector<std::vector<std::vector<char>>>& serve_sets() { return serve_; }

 private:
  Eigen::MatrixXd value_;
  std::vector<std::vector<std::vector<char>>> serve_;
};

// Backward induction over (t, remaining units). Throws when the state space
// exceeds `max_states`.
DpTable dp_value(const SingleResourceInstance& inst, long max_states = 10000000);

// Exact offline knapsack optimum for one realized sequence (single resource).
struct RealizedItem {
  double reward = 0.0;
  int size_units = 0;
};
double offline_value(const std::vector<RealizedItem>& items, int units);

// Multi-resource exact offline optimum via DP over capacity vectors.
struct RealizedItemMulti {
  Eigen::VectorXd reward;
  Eigen::VectorXi size_units;
};
double offline_value(const std::vector<RealizedItemMulti>& items, int m,
                     int units, long max_states = 1000000);

// UP(H): sum of expected rewards when budget-feasible, else the LP optimum.
double up_value(const SingleResourceInstance& inst);
double up_value(const MultiResourceInstance& inst);

MultiResourceInstance as_multi(const SingleResourceInstance& inst);

struct RoutingResult {
  std::vector<SingleResourceInstance> sub_instances;       // one per resource
  std::vector<std::vector<Eigen::VectorXd>> assign_prob;   // [t][w] -> m
  double up_total = 0.0;
};

// Splits a multi-resource instance along the UP(H) optimal fractional
// solution; sum_j UP(H_j) == UP(H) and every sub-instance is budget-feasible.
RoutingResult route(const MultiResourceInstance& mi);

struct SimStats {
  long trials = 0;
  double mean_reward = 0.0;
  double std_error = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> conditional_service_rate;  // per query, given active
  std::vector<long> active_count;
  std::vector<long> served_count;

  double min_conditional_rate() const;
};

// Serve/reject rule evaluated on each active realization. `tie_draw` is the
// policy's private uniform for randomized decisions.
using ServeRule = std::function<bool(int t, const Scenario& sc,
                                     int consumed_units, int served_count,
                                     double tie_draw)>;

// Deterministic given the seed: every random number is a pure function of
// (seed, trial, query), so trials are order- and thread-independent.
SimStats monte_carlo(const ServeRule& rule, const SingleResourceInstance& inst,
                     long trials, std::uint64_t seed);

// Samples a scenario index from q (-1 = inactive residual).
int sample_scenario(const ScenarioDist& q, double u);

// Two-unit prophet bound: closed-form ratio of best online to prophet value
// on the two-deterministic-queries + Poisson-stream + rare-jackpot instance.
double prophet2_g(double r1, double r2, double lambda);
// Bernoulli discretization of the same ratio (stream split into n slots).
double prophet2_g_bernoulli(double r1, double r2, double lambda, int n);

struct Prophet2Result {
  double r1 = 0.0;
  double r2 = 0.0;
  double lambda = 0.0;
  double value = 0.0;  // min over the searched grid
};

struct Prophet2Grid {
  double r_min = 1.01, r_max = 2.5, r_step = 0.05;
  double l_min = 0.2, l_max = 3.0, l_step = 0.05;
  int refine_rounds = 4;
};

Prophet2Result prophet2_bound(const Prophet2Grid& grid = {});

}  // namespace ocrs::oracle

#endif  // OCRS_ORACLE_HPP
