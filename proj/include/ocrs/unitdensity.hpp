#ifndef OCRS_UNITDENSITY_HPP
#define OCRS_UNITDENSITY_HPP

#include <Eigen/Dense>

#include <vector>

#include "ocrs/core.hpp"
#include "ocrs/knapsack.hpp"

// Unit-density knapsack (reward equals size): a nonincreasing per-period
// guarantee sequence beats the uniform one; its continuous limit is the
// profile h below, whose best integral is the 0.3557 headline.
namespace ocrs::unitdensity {

struct HProfile {
  double gamma0 = 0.0;
  double step = 0.0;
  Eigen::VectorXd values;    // h on the uniform grid over [0,1]
  Eigen::VectorXd integral;  // running trapezoidal integral of h

  double total() const { return integral(integral.size() - 1); }
  double integral_to(double t) const;  // linear interpolation between nodes
};

// Forward recursion h(t) = min(h(t-), 1 - gamma0 - I(t),
// 1 - 2 I(t) - gamma0 exp(-2 I(t)/gamma0)) with I the running integral;
// each step is solved to a fixed point so the stored values satisfy both
// clauses at the stored integral.
HProfile h_profile(double gamma0, double delta);

struct GammaSequence {
  std::vector<double> gammas;      // gamma_1..gamma_T
  std::vector<double> cumulative;  // k_0..k_T with k_t - k_{t-1} = psi_t
};

// Window averages of h over consecutive psi-widths; always feasible for the
// guarantee program below.
GammaSequence gamma_sequence(const std::vector<double>& psi, double gamma0,
                             double delta);

// Both constraint families of the guarantee program plus the monotone chain.
bool check_op_feasible(const std::vector<double>& gammas,
                       const std::vector<double>& psi, double tol = 1e-9);

struct Gamma0Optimum {
  double gamma0 = 0.0;
  double value = 0.0;  // max over gamma0 of the h integral
};

// Golden-section search (the integral is unimodal in gamma0 empirically),
// guarded by a dense coarse grid; disagreement beyond 1e-4 warns on stderr.
Gamma0Optimum optimize_gamma0(double delta, double tol = 1e-6);

// Modified Best-fit run with per-period guarantees. The sequence need not be
// monotone; the invariant monitor only engages when it is nonincreasing.
knapsack::PolicyRun run_ud_policy(const SingleResourceInstance& inst,
                                  const std::vector<double>& gammas,
                                  std::uint64_t seed = 0, long trials = 0);

// Lower bound on the empty-path measure after the first `t` periods.
double empty_mass_bound(const std::vector<double>& gammas,
                        const std::vector<double>& psi, int t);

// T queries of deterministic size 1/2 + 1/T, active w.p. 2/T; UP equals 1
// while any online policy serves at most one query.
SingleResourceInstance ud_upper_instance(int T);

// Best online utilization ratio on that instance, in closed form.
double ud_upper_ratio(int T);

}  // namespace ocrs::unitdensity

#endif  // OCRS_UNITDENSITY_HPP
