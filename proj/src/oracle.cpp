#include "ocrs/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "ocrs/lp.hpp"

namespace ocrs::oracle {

DpTable dp_value(const SingleResourceInstance& inst, long max_states) {
  const int T = inst.horizon();
  const int units = T > 0 ? inst.grid.units() : 0;
  if (static_cast<long>(T + 1) * (units + 1) > max_states)
    throw std::runtime_error("dp_value: state cap exceeded");
  DpTable table(T, units);
  auto& serve = table.serve_sets();
  serve.resize(T);
  for (int t = T - 1; t >= 0; --t) {
    const auto& q = inst.queries[t];
    serve[t].assign(q.support.size(),
                    std::vector<char>(units + 1, 0));
    for (int c = 0; c <= units; ++c) {
      double v = table.value(t + 1, c);
      for (int w = 0; w < static_cast<int>(q.support.size()); ++w) {
        const auto& sc = q.support[w];
        if (sc.size_units > c) continue;
        double gain =
            sc.reward + table.value(t + 1, c - sc.size_units) -
            table.value(t + 1, c);
        if (gain > 0.0) {
          v += sc.prob * gain;
          serve[t][w][c] = 1;
        }
      }
      table.value(t, c) = v;
    }
  }
  return table;
}

double offline_value(const std::vector<RealizedItem>& items, int units) {
  std::vector<double> best(units + 1, 0.0);
  for (const auto& item : items) {
    if (item.size_units == 0) {
      if (item.reward > 0.0)
        for (int c = 0; c <= units; ++c) best[c] += item.reward;
      continue;
    }
    for (int c = units; c >= item.size_units; --c)
      best[c] = std::max(best[c], best[c - item.size_units] + item.reward);
  }
  return best[units];
}

double offline_value(const std::vector<RealizedItemMulti>& items, int m,
                     int units, long max_states) {
  long states = 1;
  for (int j = 0; j < m; ++j) {
    states *= units + 1;
    if (states > max_states)
      throw std::runtime_error("offline_value: state cap exceeded");
  }
  std::vector<double> best(states, 0.0);
  std::vector<long> stride(m, 1);
  for (int j = 1; j < m; ++j) stride[j] = stride[j - 1] * (units + 1);
  std::vector<double> next(states);
  std::vector<int> cap(m);
  for (const auto& item : items) {
    next = best;
    for (long s = 0; s < states; ++s) {
      long rem = s;
      for (int j = m - 1; j >= 0; --j) {
        cap[j] = static_cast<int>(rem / stride[j]);
        rem %= stride[j];
      }
      for (int j = 0; j < m; ++j) {  // assign the item to resource j
        if (item.size_units(j) > cap[j]) continue;
        long s2 = s - static_cast<long>(item.size_units(j)) * stride[j];
        next[s] = std::max(next[s], best[s2] + item.reward(j));
      }
    }
    best.swap(next);
  }
  return best[states - 1];
}

MultiResourceInstance as_multi(const SingleResourceInstance& inst) {
  MultiResourceInstance mi;
  mi.resources = 1;
  mi.grid = inst.grid;
  for (const auto& q : inst.queries) {
    MultiScenarioDist mq;
    for (const auto& sc : q.support) {
      MultiScenario ms;
      ms.prob = sc.prob;
      ms.reward = Eigen::VectorXd::Constant(1, sc.reward);
      ms.size_units = Eigen::VectorXi::Constant(1, sc.size_units);
      mq.support.push_back(std::move(ms));
    }
    mi.queries.push_back(std::move(mq));
  }
  return mi;
}

double up_value(const SingleResourceInstance& inst) {
  if (inst.horizon() == 0) return 0.0;
  double budget = 0.0, reward = 0.0;
  for (const auto& q : inst.queries) {
    budget += expected_size(q, inst.grid);
    reward += expected_reward(q);
  }
  if (budget <= 1.0 + kBudgetTol) return reward;
  auto result = lp::simplex_solve(lp::build_up_lp(as_multi(inst)));
  if (result.status != lp::SolveStatus::Optimal)
    throw std::runtime_error("up_value: LP solve failed");
  return result.objective;
}

double up_value(const MultiResourceInstance& inst) {
  if (inst.horizon() == 0) return 0.0;
  auto result = lp::simplex_solve(lp::build_up_lp(inst));
  if (result.status != lp::SolveStatus::Optimal)
    throw std::runtime_error("up_value: LP solve failed");
  return result.objective;
}

RoutingResult route(const MultiResourceInstance& mi) {
  const int m = mi.resources;
  const int T = mi.horizon();
  lp::LinearProgram up = lp::build_up_lp(mi);
  auto sol = lp::simplex_solve(up);
  if (sol.status != lp::SolveStatus::Optimal)
    throw std::runtime_error("route: UP LP solve failed");

  RoutingResult out;
  out.up_total = sol.objective;
  out.assign_prob.resize(T);
  out.sub_instances.assign(m, SingleResourceInstance{});
  for (int j = 0; j < m; ++j) {
    out.sub_instances[j].grid = mi.grid;
    out.sub_instances[j].queries.resize(T);
  }
  for (int t = 0; t < T; ++t) {
    const auto& q = mi.queries[t];
    out.assign_prob[t].resize(q.support.size());
    for (int w = 0; w < static_cast<int>(q.support.size()); ++w) {
      const auto& sc = q.support[w];
      Eigen::VectorXd xs(m);
      for (int j = 0; j < m; ++j) {
        double x = sol.value(up, "x[" + std::to_string(t + 1) + "][" +
                                     std::to_string(w) + "][" +
                                     std::to_string(j + 1) + "]");
        xs(j) = std::clamp(x, 0.0, 1.0);
      }
      if (xs.sum() > 1.0) xs /= xs.sum();
      out.assign_prob[t][w] = xs;
      for (int j = 0; j < m; ++j) {
        double p = sc.prob * xs(j);
        if (p <= 0.0) continue;
        out.sub_instances[j].queries[t].support.push_back(
            {p, sc.reward(j), sc.size_units(j)});
      }
    }
  }
  return out;
}

double SimStats::min_conditional_rate() const {
  double r = 1.0;
  for (std::size_t t = 0; t < conditional_service_rate.size(); ++t)
    if (active_count[t] > 0)
      r = std::min(r, conditional_service_rate[t]);
  return r;
}

int sample_scenario(const ScenarioDist& q, double u) {
  double cum = 0.0;
  for (int w = 0; w < static_cast<int>(q.support.size()); ++w) {
    cum += q.support[w].prob;
    if (u < cum) return w;
  }
  return -1;
}

namespace {

int thread_budget() {
  if (const char* env = std::getenv("OCRS_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

struct BlockSums {
  double reward = 0.0;
  double reward_sq = 0.0;
  std::vector<long> active;
  std::vector<long> served;
};

}  // namespace

SimStats monte_carlo(const ServeRule& rule, const SingleResourceInstance& inst,
                     long trials, std::uint64_t seed) {
  const int T = inst.horizon();
  const int units = T > 0 ? inst.grid.units() : 0;
  constexpr long kBlock = 1024;  // fixed blocks keep sums thread-independent
  const long blocks = (trials + kBlock - 1) / kBlock;
  std::vector<BlockSums> sums(blocks);

  auto run_block = [&](long blk) {
    BlockSums& s = sums[blk];
    s.active.assign(T, 0);
    s.served.assign(T, 0);
    double comp = 0.0, comp_sq = 0.0;  // Kahan compensation
    const long lo = blk * kBlock, hi = std::min(trials, lo + kBlock);
    for (long trial = lo; trial < hi; ++trial) {
      int consumed = 0, count = 0;
      double reward = 0.0;
      for (int t = 0; t < T; ++t) {
        double u = counter_uniform(seed, trial, t, 0);
        int w = sample_scenario(inst.queries[t], u);
        if (w < 0) continue;
        const Scenario& sc = inst.queries[t].support[w];
        ++s.active[t];
        double tie = counter_uniform(seed, trial, t, 1);
        if (consumed + sc.size_units <= units &&
            rule(t, sc, consumed, count, tie)) {
          consumed += sc.size_units;
          ++count;
          reward += sc.reward;
          ++s.served[t];
        }
      }
      double y = reward - comp;
      double tsum = s.reward + y;
      comp = (tsum - s.reward) - y;
      s.reward = tsum;
      y = reward * reward - comp_sq;
      tsum = s.reward_sq + y;
      comp_sq = (tsum - s.reward_sq) - y;
      s.reward_sq = tsum;
    }
  };

  const int threads = std::min<long>(thread_budget(), blocks);
  if (threads <= 1) {
    for (long blk = 0; blk < blocks; ++blk) run_block(blk);
  } else {
    std::vector<std::thread> pool;
    std::atomic<long> next{0};
    for (int i = 0; i < threads; ++i)
      pool.emplace_back([&] {
        for (long blk = next++; blk < blocks; blk = next++) run_block(blk);
      });
    for (auto& th : pool) th.join();
  }

  SimStats stats;
  stats.trials = trials;
  stats.seed = seed;
  stats.active_count.assign(T, 0);
  stats.served_count.assign(T, 0);
  double total = 0.0, total_sq = 0.0;
  for (const auto& s : sums) {  // fixed combine order
    total += s.reward;
    total_sq += s.reward_sq;
    for (int t = 0; t < T; ++t) {
      stats.active_count[t] += s.active[t];
      stats.served_count[t] += s.served[t];
    }
  }
  stats.mean_reward = trials > 0 ? total / trials : 0.0;
  if (trials > 1) {
    double var =
        std::max(0.0, (total_sq - trials * stats.mean_reward *
                                      stats.mean_reward) /
                          (trials - 1));
    stats.std_error = std::sqrt(var / trials);
  }
  stats.conditional_service_rate.assign(T, 0.0);
  for (int t = 0; t < T; ++t)
    if (stats.active_count[t] > 0)
      stats.conditional_service_rate[t] =
          static_cast<double>(stats.served_count[t]) / stats.active_count[t];
  return stats;
}

namespace {

// Shared three-branch online/prophet values; q0 = P(no stream arrival),
// q1 = P(exactly one). The rare final query contributes r2 in expectation.
double g_from_tail(double r1, double r2, double q0, double q1) {
  const double q2p = 1.0 - q0 - q1;
  const double rmax = std::max(r1, r2);
  const double prophet = r2 + 2.0 * q0 + (r1 + 1.0) * q1 + 2.0 * r1 * q2p;
  const double serve_both = 2.0;
  const double serve_one = 1.0 + q0 * r2 + (1.0 - q0) * rmax;
  const double serve_none = q0 * r2 + q1 * (r1 + r2) + q2p * (r1 + rmax);
  return std::max({serve_both, serve_one, serve_none}) / prophet;
}

}  // namespace

double prophet2_g(double r1, double r2, double lambda) {
  const double q0 = std::exp(-lambda);
  return g_from_tail(r1, r2, q0, lambda * q0);
}

double prophet2_g_bernoulli(double r1, double r2, double lambda, int n) {
  const double p = lambda / n;
  const double q0 = std::pow(1.0 - p, n);
  const double q1 = n * p * std::pow(1.0 - p, n - 1);
  return g_from_tail(r1, r2, q0, q1);
}

Prophet2Result prophet2_bound(const Prophet2Grid& grid) {
  Prophet2Result best;
  best.value = std::numeric_limits<double>::infinity();
  double r_lo = grid.r_min, r_hi = grid.r_max, r_step = grid.r_step;
  double l_lo = grid.l_min, l_hi = grid.l_max, l_step = grid.l_step;
  for (int round = 0; round <= grid.refine_rounds; ++round) {
    for (double r1 = r_lo; r1 <= r_hi + 1e-12; r1 += r_step)
      for (double r2 = r_lo; r2 <= r_hi + 1e-12; r2 += r_step)
        for (double l = l_lo; l <= l_hi + 1e-12; l += l_step) {
          double g = prophet2_g(r1, r2, l);
          if (g < best.value) best = {r1, r2, l, g};
        }
    // Shrink the box around the incumbent for the next round.
    r_lo = std::max(grid.r_min, best.r1 - 2 * r_step);
    r_hi = best.r1 + 2 * r_step;
    l_lo = std::max(1e-6, best.lambda - 2 * l_step);
    l_hi = best.lambda + 2 * l_step;
    r_step /= 5.0;
    l_step /= 5.0;
  }
  return best;
}

}  // namespace ocrs::oracle
