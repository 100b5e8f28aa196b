#ifndef OCRS_ODE_HPP
#define OCRS_ODE_HPP

#include <Eigen/Dense>

#include <vector>

// Poisson-arrival worst case for the k-unit problem. Each level's cumulative
// service curve y_l is piecewise analytic: theta-linear plus a polynomial
// times exp(-t) before its breakpoint, and 1 plus such a term after. The
// tight ratio gamma*_k is the root of y_k(k) = 1 - theta in theta.
namespace ocrs::ode {

struct OdePieces {
  int k = 0;
  double theta = 0.0;
  std::vector<double> breakpoints;           // t_1..t_{k+1}, t_1 = 0
  std::vector<double> linear_offset;         // zeta_l, index l-1
  std::vector<Eigen::VectorXd> pre_poly;     // zeta_{l,q}, q = 0..l-2
  std::vector<Eigen::VectorXd> post_poly;    // psi_{l,q}, q = 0..l-1
};

// Builds all levels for a fixed theta in (0,1). Breakpoints are located by
// bisection on the monotone pre-breakpoint expression.
OdePieces solve_pieces(int k, double theta);

// Evaluates y_l at t, choosing the active piece.
double y_value(const OdePieces& pieces, int level, double t);

// The unique theta with y_k(k) = 1 - theta; the Table-1 constants.
double gamma_star(int k, double tol = 1e-9);

// Bernoulli discretization p^N = (1/N, ..., 1/N) of length N*k fed to the
// discrete construction; converges to gamma_star at rate (e^{2k}-1)/N.
double euler_gamma(int k, int n);

}  // namespace ocrs::ode

#endif  // OCRS_ODE_HPP
