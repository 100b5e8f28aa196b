#ifndef OCRS_LP_HPP
#define OCRS_LP_HPP

#include <Eigen/Dense>

#include <string>
#include <unordered_map>
#include <vector>

#include "ocrs/core.hpp"

// Dense LP machinery: a small two-phase simplex plus builders for the
// programs the rest of the library is checked against.
namespace ocrs::lp {

enum class Sense { LessEq, Equal, GreaterEq };

// max (or min) c'x subject to row senses, x >= 0 componentwise.
struct LinearProgram {
  bool maximize = true;
  Eigen::VectorXd objective;               // length n
  Eigen::MatrixXd constraints;             // rows x n
  std::vector<Sense> senses;               // length rows
  Eigen::VectorXd rhs;                     // length rows
  std::vector<std::string> variable_names;

  int add_variable(const std::string& name);
  int variable(const std::string& name) const;  // -1 when absent
  void add_row(const Eigen::VectorXd& coeffs, Sense sense, double b);
  int num_variables() const { return static_cast<int>(variable_names.size()); }
  int num_rows() const { return static_cast<int>(senses.size()); }

  // Line-oriented text export: objective row, then one row per constraint
  // with its sense and right-hand side.
  std::string to_text() const;

 private:
  std::unordered_map<std::string, int> index_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded };

struct SimplexResult {
  SolveStatus status = SolveStatus::Optimal;
  double objective = 0.0;
  Eigen::VectorXd solution;
  int iterations = 0;

  double value(const LinearProgram& lp, const std::string& name) const;
};

// Two-phase dense simplex. Dantzig pricing with Bland's rule engaged after
// 2*(rows+cols) iterations to break cycling.
SimplexResult simplex_solve(const LinearProgram& lp, double tol = 1e-9);

// Eq-style builders -------------------------------------------------------

// Ex-ante relaxation over scenarios and resources; optimum is UP(H).
LinearProgram build_up_lp(const MultiResourceInstance& mi);

// k-unit OCRS LP in the x_{l,t} variables; optimum is theta*(p).
LinearProgram build_dual_pk(const std::vector<double>& p, int k);

// Its dual in the beta_{l,t}, xi_t variables; optimum matches by duality.
LinearProgram build_primal_pk(const std::vector<double>& p, int k);

// Knapsack OCRS LP over reachable capacity states; optimum is the tight
// guarantee for the (p, D) size structure, minimized over reward profiles.
LinearProgram build_dual_pd(const SingleResourceInstance& inst,
                            int max_variables = 100000);

// Value-function reformulation of the same program; its solution carries the
// worst-case rewards r_t(d) used by the DP cross-check.
LinearProgram build_value_lp(const SingleResourceInstance& inst,
                             int max_variables = 100000);

struct DpConsistencyReport {
  bool ok = false;
  double dual_pd_value = 0.0;   // simplex optimum of the OCRS program
  double value_lp_value = 0.0;  // simplex optimum of the value program
  double dp_ratio = 0.0;        // DP on the extracted worst-case rewards
  double max_gap = 0.0;
};

// Checks that the optimal online-to-UP ratio produced by backward induction
// on the worst-case rewards coincides with the LP optimum.
DpConsistencyReport dp_consistency_check(const SingleResourceInstance& inst,
                          double tol = 1e-6);

}  // namespace ocrs::lp

#endif  // OCRS_LP_HPP
