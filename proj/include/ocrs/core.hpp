#ifndef OCRS_CORE_HPP
#define OCRS_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

// Instance representations, the exact utilization pmf and shared numeric
// utilities. Sizes live on the grid {0, 1/(K*T), ..., 1} and are stored as
// integer unit counts; only probability masses are subject to rounding.
namespace ocrs {

inline constexpr double kMassClampTol = 1e-12;   // negative-mass clamp
inline constexpr double kTotalMassTol = 1e-9;    // pmf total drift
inline constexpr double kBudgetTol = 1e-9;       // sum E[size] <= 1 slack

// gamma = 1/(3+e^-2), the tight Best-fit guarantee. Computed, never a literal.
double bestfit_gamma();

struct SizeGrid {
  int refinement = 1;  // K
  int horizon = 0;     // T

  int units() const { return refinement * horizon; }
  double unit() const { return 1.0 / units(); }
  double to_real(int u) const { return static_cast<double>(u) / units(); }
};

// One realization (r, d) of a query together with its probability.
struct Scenario {
  double prob = 0.0;
  double reward = 0.0;
  int size_units = 0;
};

// Finite joint distribution of a query's (reward, size). Probabilities may
// sum to less than one; the residual is the inactive (0, 0) realization.
struct ScenarioDist {
  std::vector<Scenario> support;

  double active_prob() const;   // total prob of listed realizations
  double prob_sum() const { return active_prob(); }
};

struct SingleResourceInstance {
  SizeGrid grid;
  std::vector<ScenarioDist> queries;

  int horizon() const { return static_cast<int>(queries.size()); }
};

// psi_t = E[d_t] as a real in [0, 1].
double expected_size(const ScenarioDist& q, const SizeGrid& grid);
double expected_reward(const ScenarioDist& q);

// Multi-resource query: reward/size vectors per resource, finite support.
struct MultiScenario {
  double prob = 0.0;
  Eigen::VectorXd reward;   // length m
  Eigen::VectorXi size_units;  // length m
};

struct MultiScenarioDist {
  std::vector<MultiScenario> support;
  double active_prob() const;
};

struct MultiResourceInstance {
  int resources = 1;  // m
  SizeGrid grid;
  std::vector<MultiScenarioDist> queries;

  int horizon() const { return static_cast<int>(queries.size()); }
};

struct ValidationReport {
  bool ok = true;
  double budget = 0.0;             // sum_t E[size_t]
  double worst_prob_sum = 0.0;     // max_t sum of scenario probs
  std::vector<std::string> issues;
};

ValidationReport validate(const SingleResourceInstance& inst);
ValidationReport validate(const MultiResourceInstance& inst);

// Distribution of the capacity consumption over grid units 0..K*T, kept
// dense: the support is bounded by the grid, so no pruning is ever needed.
class UtilizationPmf {
 public:
  UtilizationPmf() = default;
  explicit UtilizationPmf(int total_units)
      : mass_(Eigen::VectorXd::Zero(total_units + 1)) {}

  static UtilizationPmf point_mass_at_zero(int total_units) {
    UtilizationPmf pmf(total_units);
    pmf.mass_(0) = 1.0;
    return pmf;
  }

  int total_units() const { return static_cast<int>(mass_.size()) - 1; }
  double at(int u) const { return mass_(u); }
  double& at(int u) { return mass_(u); }
  double total() const { return mass_.sum(); }
  double mean_units() const;
  const Eigen::VectorXd& mass() const { return mass_; }

 private:
  Eigen::VectorXd mass_;
};

// Half-open interval mass P(a < X <= b), in units. Throws on a > b.
double mass_in(const UtilizationPmf& pmf, int a_units, int b_units);

// Moves `amount` of mass between unit keys; total mass is preserved.
// Overdrawing the source beyond the clamp tolerance is an invariant error.
UtilizationPmf move_mass(const UtilizationPmf& pmf, int from_units,
                         int to_units, double amount);

// Counter-based generator: a pure mix of (seed, a, b, c), so parallel trials
// are order-independent and reproducible bit-for-bit.
std::uint64_t counter_mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c);
double counter_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c);

// JSON instance format, the contract for all CLI subcommands:
//   {"K":int,"T":int,"queries":[[{"p":..,"r":..,"d_units":..},..],..]}
// Multi-resource files additionally carry "m" and use arrays for r/d_units.
std::string to_json(const SingleResourceInstance& inst);
std::string to_json(const MultiResourceInstance& inst);
SingleResourceInstance instance_from_json(const std::string& text);
MultiResourceInstance multi_instance_from_json(const std::string& text);
SingleResourceInstance load_instance(const std::string& path);
MultiResourceInstance load_multi_instance(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace ocrs

#endif  // OCRS_CORE_HPP
