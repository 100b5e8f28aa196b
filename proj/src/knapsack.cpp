#include "ocrs/knapsack.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ocrs/oracle.hpp"

namespace ocrs::knapsack {

namespace {

constexpr double kFeasTol = 1e-9;

std::string infeasible_message(int t, int d_units, double missing) {
  std::ostringstream msg;
  msg << "no threshold for size " << d_units << " units";
  if (t > 0) msg << " at period " << t;
  msg << " (window mass short by " << missing << ")";
  return msg.str();
}

}  // namespace

InfeasibleError::InfeasibleError(int t_, int d_units_, double missing_)
    : std::runtime_error(infeasible_message(t_, d_units_, missing_)),
      t(t_),
      d_units(d_units_),
      missing(missing_) {}

ThresholdDecision threshold(const UtilizationPmf& pmf, int d_units,
                            double gamma) {
  const int top = pmf.total_units() - d_units;  // largest level that fits
  if (top < 0) throw InfeasibleError(0, d_units, gamma);
  double above = 0.0;
  for (int u = top; u >= 0; --u) {
    const double atom = pmf.at(u);
    if (above + atom >= gamma - kFeasTol) {
      ThresholdDecision d;
      d.eta_units = u;
      d.mass_above = above;
      d.tie_serve_prob =
          atom > 0.0 ? std::clamp((gamma - above) / atom, 0.0, 1.0) : 0.0;
      return d;
    }
    above += atom;
  }
  throw InfeasibleError(0, d_units, gamma - above);
}

BestFitState initial_state(const SingleResourceInstance& inst, double gamma) {
  BestFitState s;
  s.gamma = gamma;
  s.grid = inst.grid;
  s.pmf = UtilizationPmf::point_mass_at_zero(inst.grid.units());
  s.t = 1;
  return s;
}

namespace {

// Applies one period of Algorithm-style mass moves onto `next`. Returns the
// number of pmf cells scanned (the instrumented operation count).
long apply_step(const UtilizationPmf& pmf, const ScenarioDist& q, double gamma,
                int period, UtilizationPmf& next,
                std::map<int, ThresholdDecision>* thresholds_out) {
  const int units = pmf.total_units();
  long ops = 0;
  next = pmf;
  std::map<int, ThresholdDecision> cache;
  for (const auto& sc : q.support) {
    if (cache.count(sc.size_units)) continue;
    try {
      cache[sc.size_units] = threshold(pmf, sc.size_units, gamma);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(period, e.d_units, e.missing);
    }
    ops += units - sc.size_units + 1;
  }
  for (const auto& sc : q.support) {
    if (sc.prob <= 0.0 || sc.size_units == 0) continue;
    const auto& th = cache[sc.size_units];
    const int top = units - sc.size_units;
    for (int u = th.eta_units + 1; u <= top; ++u) {
      const double moved = sc.prob * pmf.at(u);
      next.at(u) -= moved;
      next.at(u + sc.size_units) += moved;
    }
    const double at_eta = std::min(pmf.at(th.eta_units),
                                   std::max(0.0, gamma - th.mass_above));
    const double moved = sc.prob * at_eta;
    next.at(th.eta_units) -= moved;
    next.at(th.eta_units + sc.size_units) += moved;
    ops += top - th.eta_units + 1;
  }
  for (int u = 0; u <= units; ++u) {
    if (next.at(u) < -kMassClampTol)
      throw std::runtime_error("apply_step: negative mass after move");
    if (next.at(u) < 0.0) next.at(u) = 0.0;
  }
  if (thresholds_out) *thresholds_out = std::move(cache);
  return ops;
}

}  // namespace

BestFitState step(const BestFitState& state, const ScenarioDist& q) {
  BestFitState out = state;
  apply_step(state.pmf, q, state.gamma, state.t, out.pmf, nullptr);
  out.t = state.t + 1;
  return out;
}

bool decide(const BestFitState& state, const Scenario& realized,
            int consumed_units, double random_draw) {
  if (consumed_units + realized.size_units > state.grid.units()) return false;
  ThresholdDecision th;
  try {
    th = threshold(state.pmf, realized.size_units, state.gamma);
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(state.t, e.d_units, e.missing);
  }
  if (consumed_units > th.eta_units) return true;
  if (consumed_units == th.eta_units) return random_draw < th.tie_serve_prob;
  return false;
}

InvariantReport invariant_check(const UtilizationPmf& pmf, double gamma) {
  InvariantReport report;
  if (gamma <= 0.0) return report;  // vacuous at gamma = 0
  const int units = pmf.total_units();
  Eigen::VectorXd cum(units + 1);  // cum(u) = P(0 < X <= u)
  cum(0) = 0.0;
  for (int u = 1; u <= units; ++u) cum(u) = cum(u - 1) + pmf.at(u);
  for (int b = 1; 2 * b <= units; ++b) {
    const double lhs = cum(b) / gamma;
    const double mid = cum(units - b) - cum(b);  // P(b < X <= 1-b)
    const double rhs = std::exp(-mid / gamma);
    if (lhs - rhs > report.max_violation) {
      report.max_violation = lhs - rhs;
      report.worst_b_units = b;
    }
  }
  return report;
}

PolicyRun evolve_policy(const SingleResourceInstance& inst,
                        const std::vector<double>& gammas,
                        const EvolveOptions& opts) {
  const int T = inst.horizon();
  if (static_cast<int>(gammas.size()) != T)
    throw std::domain_error("evolve_policy: gamma sequence length mismatch");
  for (double g : gammas)
    if (g < 0.0 || g > 1.0 + 1e-12)
      throw std::domain_error("evolve_policy: gamma outside [0,1]");

  PolicyRun run;
  run.thresholds.resize(T);
  const double gamma1 = T > 0 ? gammas[0] : 0.0;
  UtilizationPmf pmf = UtilizationPmf::point_mass_at_zero(
      T > 0 ? inst.grid.units() : 0);
  if (opts.record_pmfs) run.pmf_trajectory.push_back(pmf);
  for (int t = 1; t <= T; ++t) {
    const auto& q = inst.queries[t - 1];
    UtilizationPmf next;
    if (gammas[t - 1] == 0.0) {
      next = pmf;  // never serve; no thresholds are needed
    } else {
      try {
        run.scan_ops +=
            apply_step(pmf, q, gammas[t - 1], t, next, &run.thresholds[t - 1]);
      } catch (const InfeasibleError& e) {
        run.feasible = false;
        run.failure_t = e.t;
        run.failure_reason = e.what();
        return run;
      }
    }
    pmf = std::move(next);
    StepTrace trace;
    trace.empty_mass = pmf.at(0);
    trace.expected_units = pmf.mean_units();
    trace.invariant_slack =
        opts.check_invariant ? invariant_check(pmf, gamma1).max_violation : 0.0;
    run.trace.push_back(trace);
    if (opts.record_pmfs) run.pmf_trajectory.push_back(pmf);
    double reward = 0.0;
    for (const auto& sc : q.support) reward += sc.prob * sc.reward;
    run.reward_estimate += gammas[t - 1] * reward;
  }
  run.expected_utilization =
      T > 0 ? pmf.mean_units() / inst.grid.units() : 0.0;
  return run;
}

PolicyRun run_policy(const SingleResourceInstance& inst, double gamma,
                     std::uint64_t seed, long trials) {
  std::vector<double> gammas(inst.horizon(), gamma);
  PolicyRun run = evolve_policy(inst, gammas);
  if (!run.feasible || trials <= 0) return run;

  // Monte Carlo estimate through the precomputed per-period thresholds.
  auto rule = [&](int t, const Scenario& sc, int consumed, int /*count*/,
                  double tie) {
    const auto& ths = run.thresholds[t];
    auto it = ths.find(sc.size_units);
    if (it == ths.end()) return false;  // zero-probability path, never drawn
    if (consumed + sc.size_units > inst.grid.units()) return false;
    if (consumed > it->second.eta_units) return true;
    if (consumed == it->second.eta_units)
      return tie < it->second.tie_serve_prob;
    return false;
  };
  auto stats = oracle::monte_carlo(rule, inst, trials, seed);
  run.reward_estimate = stats.mean_reward;
  return run;
}

SingleResourceInstance discretize_instance(const SingleResourceInstance& inst,
                                           int K) {
  if (K < 1) throw std::domain_error("discretize_instance: K must be >= 1");
  SingleResourceInstance out = inst;
  out.grid.refinement = K;
  const long k_old = inst.grid.refinement;
  for (auto& q : out.queries)
    for (auto& sc : q.support) {
      // ceil(u_old * K / K_old), exact in integers: sizes round up.
      long num = static_cast<long>(sc.size_units) * K;
      sc.size_units = static_cast<int>((num + k_old - 1) / k_old);
    }
  return out;
}

namespace {

// Smallest K making eps*K*T integral with K*T even (so 1/2 is on the grid).
int grid_for_eps(int T, double eps) {
  for (int K = 1; K <= 20000; ++K) {
    const long units = static_cast<long>(K) * T;
    if (units % 2 != 0) continue;
    const double u = eps * units;
    if (std::abs(u - std::lround(u)) < 1e-9 && std::lround(u) >= 1) return K;
  }
  throw std::domain_error("no grid refinement represents this eps exactly");
}

}  // namespace

SingleResourceInstance tightness_instance(int T, double eps) {
  if (T < 3 || eps <= 0.0 || eps >= 0.25)
    throw std::domain_error("tightness_instance: need T >= 3, eps in (0,1/4)");
  SingleResourceInstance inst;
  inst.grid.refinement = grid_for_eps(T, eps);
  inst.grid.horizon = T;
  const int units = inst.grid.units();
  const int u_eps = static_cast<int>(std::lround(eps * units));
  const int u_mid = units / 2 + u_eps;
  inst.queries.resize(T);
  inst.queries[0].support = {{1.0, 1.0, u_eps}};
  const double p_mid = (1.0 - 2.0 * eps) / ((T - 2) * (0.5 + eps));
  for (int t = 2; t <= T - 1; ++t)
    inst.queries[t - 1].support = {{p_mid, 1.0, u_mid}};
  inst.queries[T - 1].support = {{eps, 1.0, units}};
  return inst;
}

SingleResourceInstance large_small_instance(double eps, double r) {
  if (eps <= 0.0 || eps >= 0.25 || r <= 0.0)
    throw std::domain_error("large_small_instance: bad parameters");
  SingleResourceInstance inst;
  inst.grid.horizon = 4;
  inst.grid.refinement = grid_for_eps(4, eps);
  const int units = inst.grid.units();
  const int u_eps = static_cast<int>(std::lround(eps * units));
  const double p_mid = (1.0 - 2.0 * eps) / (1.0 + 2.0 * eps);
  inst.queries.resize(4);
  inst.queries[0].support = {{1.0, r, u_eps}};
  inst.queries[1].support = {{p_mid, r, units / 2 + u_eps}};
  inst.queries[2].support = {{p_mid, r, units / 2 + u_eps}};
  inst.queries[3].support = {{eps, r / eps, units}};
  return inst;
}

double large_small_baseline(const SingleResourceInstance& inst) {
  const int half = inst.grid.units() / 2;
  auto filtered = [&](bool large) {
    SingleResourceInstance sub = inst;
    for (auto& q : sub.queries) {
      std::vector<Scenario> keep;
      for (const auto& sc : q.support)
        if ((sc.size_units > half) == large) keep.push_back(sc);
      q.support = std::move(keep);
    }
    return sub;
  };
  const double v_large = oracle::dp_value(filtered(true)).optimal_value();
  const double v_small = oracle::dp_value(filtered(false)).optimal_value();
  return std::max(v_large, v_small) / oracle::up_value(inst);
}

}  // namespace ocrs::knapsack
