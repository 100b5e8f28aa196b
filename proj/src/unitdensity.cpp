#include "ocrs/unitdensity.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "ocrs/oracle.hpp"

namespace ocrs::unitdensity {

namespace {

double clause_cap(double gamma0, double integral) {
  const double linear = 1.0 - gamma0 - integral;
  const double exponential =
      1.0 - 2.0 * integral - gamma0 * std::exp(-2.0 * integral / gamma0);
  return std::min(linear, exponential);
}

}  // namespace

double HProfile::integral_to(double t) const {
  const int n = static_cast<int>(values.size()) - 1;
  double pos = std::clamp(t, 0.0, 1.0) / step;
  int i = std::min(static_cast<int>(pos), n - 1);
  double frac = pos - i;
  // Trapezoid-consistent interpolation inside cell i.
  double h_lo = values(i), h_hi = values(i + 1);
  double part = step * frac * (h_lo + (h_lo + frac * (h_hi - h_lo))) / 2.0;
  return integral(i) + part;
}

HProfile h_profile(double gamma0, double delta) {
  if (gamma0 <= 0.0 || gamma0 >= 1.0)
    throw std::domain_error("h_profile: gamma0 must lie in (0,1)");
  if (delta <= 0.0 || delta > 1e-2)
    throw std::domain_error("h_profile: delta must lie in (0, 1e-2]");
  const int n = static_cast<int>(std::lround(1.0 / delta));
  HProfile profile;
  profile.gamma0 = gamma0;
  profile.step = 1.0 / n;
  profile.values.resize(n + 1);
  profile.integral.resize(n + 1);
  profile.values(0) = gamma0;  // the recursion starts at gamma0 by fiat
  profile.integral(0) = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double base = profile.integral(i - 1);
    const double prev = profile.values(i - 1);
    double h = prev;  // fixed point of h = min(prev, caps(I + step*(prev+h)/2))
    for (int pass = 0; pass < 32; ++pass) {
      const double integral = base + profile.step * (prev + h) / 2.0;
      const double next = std::max(0.0, std::min(prev, clause_cap(gamma0, integral)));
      if (std::abs(next - h) < 1e-15) {
        h = next;
        break;
      }
      h = next;
    }
    profile.values(i) = h;
    profile.integral(i) = base + profile.step * (prev + h) / 2.0;
  }
  return profile;
}

GammaSequence gamma_sequence(const std::vector<double>& psi, double gamma0,
                             double delta) {
  double total = 0.0;
  for (double v : psi) {
    if (v <= 0.0) throw std::domain_error("gamma_sequence: psi_t must be > 0");
    total += v;
  }
  if (total > 1.0 + 1e-12)
    throw std::domain_error("gamma_sequence: sum psi exceeds 1");
  HProfile profile = h_profile(gamma0, delta);

  GammaSequence seq;
  seq.cumulative.push_back(0.0);
  double k = 0.0;
  for (double v : psi) {
    double lo = profile.integral_to(k);
    k += v;
    double hi = profile.integral_to(k);
    seq.cumulative.push_back(k);
    seq.gammas.push_back((hi - lo) / v);
  }
  return seq;
}

bool check_op_feasible(const std::vector<double>& gammas,
                       const std::vector<double>& psi, double tol) {
  const int T = static_cast<int>(gammas.size());
  if (static_cast<int>(psi.size()) != T)
    throw std::domain_error("check_op_feasible: length mismatch");
  if (T == 0) return true;
  const double g1 = gammas[0];
  if (g1 < -tol || gammas[0] > 1.0 + tol) return false;
  for (int t = 1; t < T; ++t)
    if (gammas[t] > gammas[t - 1] + tol || gammas[t] < -tol) return false;
  double used = 0.0;
  for (int t = 0; t + 1 < T; ++t) {
    used += gammas[t] * psi[t];
    const double linear = 1.0 - g1 - used;
    const double exponential =
        g1 > 0.0 ? 1.0 - 2.0 * used - g1 * std::exp(-2.0 * used / g1)
                 : 1.0 - 2.0 * used;
    if (gammas[t + 1] > linear + tol) return false;
    if (gammas[t + 1] > exponential + tol) return false;
  }
  return true;
}

Gamma0Optimum optimize_gamma0(double delta, double tol) {
  auto objective = [&](double g0) { return h_profile(g0, delta).total(); };

  // Golden-section search for the maximum over (0, 1).
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 1e-3, b = 1.0 - 1e-3;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = objective(c), fd = objective(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  Gamma0Optimum best;
  best.gamma0 = 0.5 * (a + b);
  best.value = objective(best.gamma0);

  // Coarse-grid guard against multimodality.
  const double coarse_delta = std::max(delta, 1e-3);
  double grid_best = 0.0, grid_arg = 0.0;
  for (int i = 1; i < 1000; ++i) {
    double g0 = i * 1e-3;
    double v = h_profile(g0, coarse_delta).total();
    if (v > grid_best) {
      grid_best = v;
      grid_arg = g0;
    }
  }
  if (std::abs(grid_best - best.value) > 1e-4) {
    std::cerr << "optimize_gamma0: golden-section value " << best.value
              << " at " << best.gamma0 << " disagrees with grid value "
              << grid_best << " at " << grid_arg << "\n";
    if (grid_best > best.value) {
      best.gamma0 = grid_arg;
      best.value = objective(grid_arg);
    }
  }
  return best;
}

knapsack::PolicyRun run_ud_policy(const SingleResourceInstance& inst,
                                  const std::vector<double>& gammas,
                                  std::uint64_t seed, long trials) {
  const double unit = inst.horizon() > 0 ? inst.grid.unit() : 0.0;
  for (const auto& q : inst.queries)
    for (const auto& sc : q.support)
      if (std::abs(sc.reward - sc.size_units * unit) > 1e-9)
        throw std::domain_error("run_ud_policy: instance is not unit-density");

  knapsack::EvolveOptions opts;
  opts.check_invariant = std::is_sorted(gammas.rbegin(), gammas.rend());
  knapsack::PolicyRun run = knapsack::evolve_policy(inst, gammas, opts);
  if (!run.feasible || trials <= 0) return run;

  auto rule = [&](int t, const Scenario& sc, int consumed, int /*count*/,
                  double tie) {
    if (gammas[t] == 0.0) return false;
    const auto& ths = run.thresholds[t];
    auto it = ths.find(sc.size_units);
    if (it == ths.end()) return false;
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

double empty_mass_bound(const std::vector<double>& gammas,
                        const std::vector<double>& psi, int t) {
  if (t < 0 || t > static_cast<int>(gammas.size()) ||
      t > static_cast<int>(psi.size()))
    throw std::domain_error("empty_mass_bound: bad prefix length");
  if (t == 0) return 1.0;
  const double g1 = gammas[0];
  double used = 0.0;
  for (int i = 0; i < t; ++i) used += gammas[i] * psi[i];
  if (g1 <= 0.0) return 1.0;
  const double linear = 1.0 - g1 - used;
  const double exponential =
      1.0 - 2.0 * used - g1 * std::exp(-2.0 * used / g1);
  return std::min(linear, exponential);
}

SingleResourceInstance ud_upper_instance(int T) {
  if (T < 3) throw std::domain_error("ud_upper_instance: need T >= 3");
  SingleResourceInstance inst;
  inst.grid.refinement = 2;  // K*T = 2T puts 1/2 + 1/T at T+2 units
  inst.grid.horizon = T;
  const int d_units = T + 2;
  const double size = static_cast<double>(d_units) / (2 * T);
  inst.queries.assign(T, {});
  for (auto& q : inst.queries) q.support = {{2.0 / T, size, d_units}};
  return inst;
}

double ud_upper_ratio(int T) {
  return (0.5 + 1.0 / T) * (1.0 - std::pow(1.0 - 2.0 / T, T));
}

}  // namespace ocrs::unitdensity
