#ifndef OCRS_KUNIT_HPP
#define OCRS_KUNIT_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

// The k-unit OCRS: the structured LP solution for a given guarantee theta,
// the instance-optimal theta* via bisection, the explicit dual certificate
// proving its optimality, probability splitting, and the executable policy.
namespace ocrs::kunit {

// The {theta, x_{l,t}} solution built level by level: each level tops up the
// per-query service rate to theta*p_t inside its window and afterwards stays
// saturated against its occupancy constraint; the top level never saturates.
struct CandidateSolution {
  int k = 0;
  double theta = 0.0;
  Eigen::MatrixXd x;             // k x T, x(l-1, t-1) = x_{l,t}
  std::vector<int> breakpoints;  // t_1..t_{k+1}, t_1 = 0

  int horizon() const { return static_cast<int>(x.cols()); }
  double level_prefix(int l, int t_inclusive) const;  // sum_{tau<=t} x_{l,tau}
};

CandidateSolution build_candidate(const std::vector<double>& p, int k,
                                  double theta);

// Feasible for the k-unit LP iff sum_{tau<=T-1} x_{k,tau} <= 1 - theta.
bool is_feasible(const CandidateSolution& c);

// The unique root of sum_{tau<=T-1} x_{k,tau}(theta) = 1 - theta, located by
// bisection (the left side is monotone increasing in theta).
double solve_theta_star(const std::vector<double>& p, int k,
                        double tol = 1e-9);

struct DualCertificate {
  int k = 0;
  Eigen::MatrixXd beta;  // k x T
  Eigen::VectorXd xi;    // T
  double scale = 0.0;    // R, normalizes sum_t p_t xi_t = 1

  double objective(const std::vector<double>& p) const;  // sum_t p_t beta_{1,t}
};

// Closed-form optimal solution of the minimization LP, built from
// within-window success-count probabilities. Requires every p_t < 1.
DualCertificate build_dual_certificate(const std::vector<double>& p, int k,
                                       double theta_star);

struct CertificateReport {
  bool ok = false;
  double primal_residual = 0.0;    // candidate constraint violations
  double dual_residual = 0.0;      // certificate constraint violations
  double normalization_gap = 0.0;  // |sum p_t xi_t - 1|
  double slackness_max = 0.0;      // largest complementary product
  double objective_gap = 0.0;      // |dual objective - theta|
  std::vector<std::string> violations;
};

CertificateReport verify_certificate(const CandidateSolution& c,
                                     const DualCertificate& d,
                                     const std::vector<double>& p, int k,
                                     double tol = 1e-8);

// Splits p_q into adjacent slots with weights sigma, 1-sigma (length T+1).
std::vector<double> split_probability(const std::vector<double>& p, int q,
                                      double sigma);

// serve_prob(s, t) = probability of serving an active query t when s queries
// are already served. Occupancies evolve so that the ex-ante service rate of
// every query is exactly theta * p_t.
struct MagicianPolicy {
  int k = 0;
  double theta = 0.0;
  Eigen::MatrixXd serve_prob;        // k x T, row s = already-served count
  double max_exante_error = 0.0;     // forward-recursion check residual
};

MagicianPolicy magician_policy(const std::vector<double>& p, int k,
                               double theta);

}  // namespace ocrs::kunit

#endif  // OCRS_KUNIT_HPP
