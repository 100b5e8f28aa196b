#include "ocrs/lp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ocrs/oracle.hpp"

namespace ocrs::lp {

int LinearProgram::add_variable(const std::string& name) {
  auto [it, inserted] = index_.emplace(name, num_variables());
  if (!inserted) throw std::invalid_argument("duplicate variable " + name);
  variable_names.push_back(name);
  return it->second;
}

int LinearProgram::variable(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

void LinearProgram::add_row(const Eigen::VectorXd& coeffs, Sense sense,
                            double b) {
  if (coeffs.size() != num_variables())
    throw std::invalid_argument("row length mismatch");
  const int r = num_rows();
  constraints.conservativeResize(r + 1, num_variables());
  constraints.row(r) = coeffs;
  senses.push_back(sense);
  rhs.conservativeResize(r + 1);
  rhs(r) = b;
}

std::string LinearProgram::to_text() const {
  std::ostringstream out;
  out.precision(17);
  out << (maximize ? "max" : "min");
  for (int j = 0; j < num_variables(); ++j)
    out << ' ' << objective(j) << '*' << variable_names[j];
  out << '\n';
  for (int i = 0; i < num_rows(); ++i) {
    for (int j = 0; j < num_variables(); ++j) {
      if (constraints(i, j) == 0.0) continue;
      out << constraints(i, j) << '*' << variable_names[j] << ' ';
    }
    switch (senses[i]) {
      case Sense::LessEq: out << "<="; break;
      case Sense::Equal: out << "="; break;
      case Sense::GreaterEq: out << ">="; break;
    }
    out << ' ' << rhs(i) << '\n';
  }
  return out.str();
}

double SimplexResult::value(const LinearProgram& lp,
                            const std::string& name) const {
  int j = lp.variable(name);
  if (j < 0) throw std::invalid_argument("unknown variable " + name);
  return solution(j);
}

namespace {

constexpr double kPivotTol = 1e-10;

struct Tableau {
  Eigen::MatrixXd a;       // m x total
  Eigen::VectorXd b;       // m
  std::vector<int> basis;  // m, column index of the basic variable per row
  int m = 0;
  int total = 0;

  void pivot(int row, int col) {
    const double piv = a(row, col);
    a.row(row) /= piv;
    b(row) /= piv;
    a(row, col) = 1.0;  // squash roundoff on the pivot itself
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      double f = a(i, col);
      if (f == 0.0) continue;
      a.row(i) -= f * a.row(row);
      a(i, col) = 0.0;
      b(i) -= f * b(row);
    }
  }
};

// Minimizes cost'x over the tableau. Columns with allowed[j]=false never
// enter. Returns false on unboundedness.
bool run_simplex(Tableau& tb, const Eigen::VectorXd& cost,
                 const std::vector<char>& allowed, double tol, int& iterations,
                 double& objective) {
  const int bland_after = 2 * (tb.m + tb.total);
  Eigen::VectorXd reduced = cost;
  Eigen::VectorXd price = Eigen::VectorXd::Zero(tb.m);  // c_B after updates
  for (int i = 0; i < tb.m; ++i) price(i) = cost(tb.basis[i]);
  double shift = 0.0;
  // Eliminate basic columns from the cost row once up front.
  for (int i = 0; i < tb.m; ++i) {
    double f = reduced(tb.basis[i]);
    if (f == 0.0) continue;
    reduced -= f * tb.a.row(i).transpose();
    reduced(tb.basis[i]) = 0.0;
    shift += f * tb.b(i);
  }
  int local_iter = 0;
  while (true) {
    bool bland = local_iter > bland_after;
    int enter = -1;
    double best = -tol;
    for (int j = 0; j < tb.total; ++j) {
      if (!allowed[j]) continue;
      if (reduced(j) < best) {
        enter = j;
        if (bland) break;
        best = reduced(j);
      }
    }
    if (enter < 0) break;
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < tb.m; ++i) {
      double aij = tb.a(i, enter);
      if (aij <= kPivotTol) continue;
      double ratio = tb.b(i) / aij;
      if (leave < 0 || ratio < best_ratio - 1e-12 ||
          (ratio < best_ratio + 1e-12 && tb.basis[i] < tb.basis[leave])) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave < 0) return false;  // unbounded direction
    tb.pivot(leave, enter);
    double f = reduced(enter);
    reduced -= f * tb.a.row(leave).transpose();
    reduced(enter) = 0.0;
    shift += f * tb.b(leave);
    tb.basis[leave] = enter;
    ++local_iter;
    ++iterations;
    if (local_iter > 200 * (tb.m + tb.total) + 10000)
      throw std::runtime_error("simplex: iteration limit hit");
  }
  objective = shift;  // c_B' B^{-1} b accumulated through the eliminations
  return true;
}

}  // namespace

SimplexResult simplex_solve(const LinearProgram& lp, double tol) {
  const int n = lp.num_variables();
  const int m = lp.num_rows();
  int n_slack = 0;
  for (auto s : lp.senses)
    if (s != Sense::Equal) ++n_slack;

  Tableau tb;
  tb.m = m;
  tb.total = n + n_slack + m;  // reserve one artificial slot per row
  tb.a = Eigen::MatrixXd::Zero(m, tb.total);
  tb.b = Eigen::VectorXd::Zero(m);
  tb.basis.assign(m, -1);

  int slack_at = n;
  std::vector<int> artificial(m, -1);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd row = lp.constraints.row(i);
    double b = lp.rhs(i);
    Sense sense = lp.senses[i];
    if (b < 0) {  // keep rhs nonnegative for the ratio test
      row = -row;
      b = -b;
      if (sense == Sense::LessEq) sense = Sense::GreaterEq;
      else if (sense == Sense::GreaterEq) sense = Sense::LessEq;
    }
    tb.a.block(i, 0, 1, n) = row.transpose();
    tb.b(i) = b;
    if (sense == Sense::LessEq) {
      tb.a(i, slack_at) = 1.0;
      tb.basis[i] = slack_at++;
    } else {
      if (sense == Sense::GreaterEq) tb.a(i, slack_at++) = -1.0;
      artificial[i] = n + n_slack + i;
      tb.a(i, artificial[i]) = 1.0;
      tb.basis[i] = artificial[i];
    }
  }

  std::vector<char> allowed(tb.total, 1);
  for (int i = 0; i < m; ++i)
    if (artificial[i] < 0) allowed[n + n_slack + i] = 0;  // unused slots

  SimplexResult result;

  bool needs_phase1 = false;
  for (int i = 0; i < m; ++i) needs_phase1 |= artificial[i] >= 0;
  if (needs_phase1) {
    Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(tb.total);
    for (int i = 0; i < m; ++i)
      if (artificial[i] >= 0) cost1(artificial[i]) = 1.0;
    double obj1 = 0.0;
    if (!run_simplex(tb, cost1, allowed, tol, result.iterations, obj1))
      throw std::runtime_error("simplex: phase 1 unbounded");
    if (obj1 > 1e-7) {
      result.status = SolveStatus::Infeasible;
      return result;
    }
    // Drive any artificial still basic at level zero out of the basis.
    for (int i = 0; i < m; ++i) {
      if (tb.basis[i] < n + n_slack) continue;
      int enter = -1;
      for (int j = 0; j < n + n_slack; ++j)
        if (std::abs(tb.a(i, j)) > 1e-7) {
          enter = j;
          break;
        }
      if (enter >= 0) {
        tb.pivot(i, enter);
        tb.basis[i] = enter;
      }
      // else: redundant row, the artificial stays basic at value zero.
    }
    for (int i = 0; i < m; ++i)
      if (artificial[i] >= 0) allowed[artificial[i]] = 0;
  }

  Eigen::VectorXd cost2 = Eigen::VectorXd::Zero(tb.total);
  for (int j = 0; j < n; ++j)
    cost2(j) = lp.maximize ? -lp.objective(j) : lp.objective(j);
  double obj2 = 0.0;
  if (!run_simplex(tb, cost2, allowed, tol, result.iterations, obj2)) {
    result.status = SolveStatus::Unbounded;
    return result;
  }

  result.solution = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (tb.basis[i] < n) result.solution(tb.basis[i]) = tb.b(i);
  result.objective = lp.maximize ? -obj2 : obj2;
  return result;
}

// --------------------------------------------------------------------------

LinearProgram build_up_lp(const MultiResourceInstance& mi) {
  LinearProgram lp;
  lp.maximize = true;
  const int m = mi.resources;
  const int T = mi.horizon();
  const double unit = mi.grid.units() > 0 ? mi.grid.unit() : 0.0;
  for (int t = 0; t < T; ++t)
    for (int w = 0; w < static_cast<int>(mi.queries[t].support.size()); ++w)
      for (int j = 0; j < m; ++j)
        lp.add_variable("x[" + std::to_string(t + 1) + "][" +
                        std::to_string(w) + "][" + std::to_string(j + 1) +
                        "]");
  const int n = lp.num_variables();
  lp.objective = Eigen::VectorXd::Zero(n);
  int idx = 0;
  for (int t = 0; t < T; ++t)
    for (const auto& sc : mi.queries[t].support)
      for (int j = 0; j < m; ++j) lp.objective(idx++) = sc.prob * sc.reward(j);

  for (int j = 0; j < m; ++j) {  // capacity rows
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    idx = 0;
    for (int t = 0; t < T; ++t)
      for (const auto& sc : mi.queries[t].support)
        for (int j2 = 0; j2 < m; ++j2, ++idx)
          if (j2 == j) row(idx) = sc.prob * sc.size_units(j) * unit;
    lp.add_row(row, Sense::LessEq, 1.0);
  }
  idx = 0;
  for (int t = 0; t < T; ++t)  // per-scenario assignment rows
    for (const auto& sc : mi.queries[t].support) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      for (int j = 0; j < m; ++j) row(idx + j) = 1.0;
      lp.add_row(row, Sense::LessEq, 1.0);
      idx += m;
      (void)sc;
    }
  return lp;
}

LinearProgram build_dual_pk(const std::vector<double>& p, int k) {
  const int T = static_cast<int>(p.size());
  double psum = 0.0;
  for (double v : p) psum += v;
  if (psum > k + 1e-9) throw std::domain_error("build_dual_pk: sum p > k");

  LinearProgram lp;
  lp.maximize = true;
  lp.add_variable("theta");
  for (int l = 1; l <= k; ++l)
    for (int t = 1; t <= T; ++t)
      lp.add_variable("x[" + std::to_string(l) + "][" + std::to_string(t) +
                      "]");
  const int n = lp.num_variables();
  auto xv = [&](int l, int t) { return 1 + (l - 1) * T + (t - 1); };
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.objective(0) = 1.0;

  for (int t = 1; t <= T; ++t) {  // theta * p_t <= sum_l x_{l,t}
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row(0) = p[t - 1];
    for (int l = 1; l <= k; ++l) row(xv(l, t)) = -1.0;
    lp.add_row(row, Sense::LessEq, 0.0);
  }
  for (int t = 1; t <= T; ++t) {  // level-1 occupancy
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row(xv(1, t)) = 1.0;
    for (int tau = 1; tau < t; ++tau) row(xv(1, tau)) += p[t - 1];
    lp.add_row(row, Sense::LessEq, p[t - 1]);
  }
  for (int l = 2; l <= k; ++l)
    for (int t = 1; t <= T; ++t) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row(xv(l, t)) = 1.0;
      for (int tau = 1; tau < t; ++tau) {
        row(xv(l - 1, tau)) -= p[t - 1];
        row(xv(l, tau)) += p[t - 1];
      }
      lp.add_row(row, Sense::LessEq, 0.0);
    }
  return lp;
}

LinearProgram build_primal_pk(const std::vector<double>& p, int k) {
  const int T = static_cast<int>(p.size());
  LinearProgram lp;
  lp.maximize = false;
  for (int l = 1; l <= k; ++l)
    for (int t = 1; t <= T; ++t)
      lp.add_variable("beta[" + std::to_string(l) + "][" + std::to_string(t) +
                      "]");
  for (int t = 1; t <= T; ++t)
    lp.add_variable("xi[" + std::to_string(t) + "]");
  const int n = lp.num_variables();
  auto bv = [&](int l, int t) { return (l - 1) * T + (t - 1); };
  auto xiv = [&](int t) { return k * T + (t - 1); };
  lp.objective = Eigen::VectorXd::Zero(n);
  for (int t = 1; t <= T; ++t) lp.objective(bv(1, t)) = p[t - 1];

  for (int l = 1; l <= k; ++l)
    for (int t = 1; t <= T; ++t) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row(bv(l, t)) += 1.0;
      for (int tau = t + 1; tau <= T; ++tau) {
        row(bv(l, tau)) += p[tau - 1];
        if (l < k) row(bv(l + 1, tau)) -= p[tau - 1];
      }
      row(xiv(t)) = -1.0;
      lp.add_row(row, Sense::GreaterEq, 0.0);
    }
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(n);
  for (int t = 1; t <= T; ++t) norm(xiv(t)) = p[t - 1];
  lp.add_row(norm, Sense::Equal, 1.0);
  return lp;
}

namespace {

struct PdStructure {
  int units = 0;
  // Distinct sizes and their probabilities per period.
  std::vector<std::vector<std::pair<int, double>>> sizes;  // (d_units, p)
  // Reachable remaining-capacity states at the start of each period.
  std::vector<std::vector<int>> reachable;
};

PdStructure analyze_pd(const SingleResourceInstance& inst) {
  PdStructure s;
  s.units = inst.grid.units();
  const int T = inst.horizon();
  s.sizes.resize(T);
  s.reachable.resize(T);
  for (int t = 0; t < T; ++t) {
    std::map<int, double> by_size;
    for (const auto& sc : inst.queries[t].support)
      by_size[sc.size_units] += sc.prob;
    s.sizes[t].assign(by_size.begin(), by_size.end());
  }
  std::set<int> states = {s.units};
  for (int t = 0; t < T; ++t) {
    s.reachable[t].assign(states.begin(), states.end());
    std::set<int> next = states;
    for (int c : states)
      for (const auto& [d, p] : s.sizes[t])
        if (c - d >= 0) next.insert(c - d);
    states.swap(next);
  }
  return s;
}

}  // namespace

LinearProgram build_dual_pd(const SingleResourceInstance& inst,
                            int max_variables) {
  const PdStructure s = analyze_pd(inst);
  const int T = inst.horizon();

  LinearProgram lp;
  lp.maximize = true;
  lp.add_variable("theta");
  // alpha[t][d][c]: ex-ante probability that query t realizes size d and is
  // served with remaining capacity c.
  std::vector<std::map<std::pair<int, int>, int>> av(T);
  for (int t = 0; t < T; ++t)
    for (const auto& [d, p] : s.sizes[t])
      for (int c : s.reachable[t]) {
        if (c < d) continue;
        av[t][{d, c}] = lp.add_variable(
            "alpha[" + std::to_string(t + 1) + "][" + std::to_string(d) +
            "][" + std::to_string(c) + "]");
        if (lp.num_variables() > max_variables)
          throw std::runtime_error("build_dual_pd: state-space cap exceeded");
      }
  const int n = lp.num_variables();
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.objective(0) = 1.0;

  auto alpha_at = [&](int t, int d, int c) {  // -1 when the variable is absent
    auto it = av[t].find({d, c});
    return it == av[t].end() ? -1 : it->second;
  };

  for (int t = 0; t < T; ++t)
    for (const auto& [d, p] : s.sizes[t]) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);  // service rate row
      row(0) = p;
      for (int c : s.reachable[t])
        if (c >= d) row(av[t][{d, c}]) = -1.0;
      lp.add_row(row, Sense::LessEq, 0.0);

      for (int c : s.reachable[t]) {  // occupancy rows
        if (c < d) continue;
        Eigen::VectorXd occ = Eigen::VectorXd::Zero(n);
        occ(av[t][{d, c}]) = 1.0;
        if (c == s.units) {
          for (int tau = 0; tau < t; ++tau)
            for (const auto& [dp, pp] : s.sizes[tau]) {
              int v = alpha_at(tau, dp, s.units);
              if (v >= 0) occ(v) += p;
            }
          lp.add_row(occ, Sense::LessEq, p);
        } else {
          for (int tau = 0; tau < t; ++tau)
            for (const auto& [dp, pp] : s.sizes[tau]) {
              int vin = c + dp <= s.units ? alpha_at(tau, dp, c + dp) : -1;
              if (vin >= 0) occ(vin) -= p;
              int vout = alpha_at(tau, dp, c);
              if (vout >= 0) occ(vout) += p;
            }
          lp.add_row(occ, Sense::LessEq, 0.0);
        }
      }
    }
  return lp;
}

LinearProgram build_value_lp(const SingleResourceInstance& inst,
                             int max_variables) {
  const PdStructure s = analyze_pd(inst);
  const int T = inst.horizon();

  LinearProgram lp;
  lp.maximize = false;
  std::vector<std::map<int, int>> vv(T);  // V_t(c); V_{T+1} == 0
  std::vector<std::map<std::pair<int, int>, int>> wv(T);
  std::vector<std::map<int, int>> rv(T);
  for (int t = 0; t < T; ++t) {
    for (int c : s.reachable[t])
      vv[t][c] = lp.add_variable("V[" + std::to_string(t + 1) + "][" +
                                 std::to_string(c) + "]");
    for (const auto& [d, p] : s.sizes[t]) {
      rv[t][d] =
          lp.add_variable("r[" + std::to_string(t + 1) + "][" +
                          std::to_string(d) + "]");
      for (int c : s.reachable[t])
        if (c >= d)
          wv[t][{d, c}] = lp.add_variable("W[" + std::to_string(t + 1) + "][" +
                                          std::to_string(d) + "][" +
                                          std::to_string(c) + "]");
    }
    if (lp.num_variables() > max_variables)
      throw std::runtime_error("build_value_lp: state-space cap exceeded");
  }
  const int n = lp.num_variables();
  lp.objective = Eigen::VectorXd::Zero(n);
  lp.objective(vv[0].at(s.units)) = 1.0;

  for (int t = 0; t < T; ++t) {
    for (int c : s.reachable[t]) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);  // Bellman row
      row(vv[t].at(c)) = 1.0;
      if (t + 1 < T) row(vv[t + 1].at(c)) -= 1.0;
      for (const auto& [d, p] : s.sizes[t])
        if (d <= c) row(wv[t].at({d, c})) -= p;
      lp.add_row(row, Sense::GreaterEq, 0.0);
    }
    for (const auto& [d, p] : s.sizes[t])
      for (int c : s.reachable[t]) {
        if (c < d) continue;
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);  // marginal-gain row
        row(wv[t].at({d, c})) = 1.0;
        row(rv[t].at(d)) -= 1.0;
        if (t + 1 < T) {
          row(vv[t + 1].at(c - d)) -= 1.0;
          row(vv[t + 1].at(c)) += 1.0;
        }
        lp.add_row(row, Sense::GreaterEq, 0.0);
      }
  }
  Eigen::VectorXd norm = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < T; ++t)
    for (const auto& [d, p] : s.sizes[t]) norm(rv[t].at(d)) = p;
  lp.add_row(norm, Sense::Equal, 1.0);
  return lp;
}

DpConsistencyReport dp_consistency_check(const SingleResourceInstance& inst, double tol) {
  DpConsistencyReport report;
  auto dual = simplex_solve(build_dual_pd(inst));
  if (dual.status != SolveStatus::Optimal)
    throw std::runtime_error("dp_consistency_check: Dual(p,D) not optimal");
  report.dual_pd_value = dual.objective;

  LinearProgram value_lp = build_value_lp(inst);
  auto value = simplex_solve(value_lp);
  if (value.status != SolveStatus::Optimal)
    throw std::runtime_error("dp_consistency_check: value LP not optimal");
  report.value_lp_value = value.objective;

  // Re-run the DP oracle on the worst-case rewards extracted from the LP.
  SingleResourceInstance worst = inst;
  for (int t = 0; t < worst.horizon(); ++t)
    for (auto& sc : worst.queries[t].support) {
      int j = value_lp.variable("r[" + std::to_string(t + 1) + "][" +
                                std::to_string(sc.size_units) + "]");
      sc.reward = j >= 0 ? value.solution(j) : 0.0;
    }
  double up = 0.0;
  for (const auto& q : worst.queries) up += expected_reward(q);
  report.dp_ratio = oracle::dp_value(worst).optimal_value() / up;

  report.max_gap =
      std::max(std::abs(report.dual_pd_value - report.value_lp_value),
               std::abs(report.dual_pd_value - report.dp_ratio));
  report.ok = report.max_gap <= tol;
  return report;
}

}  // namespace ocrs::lp
