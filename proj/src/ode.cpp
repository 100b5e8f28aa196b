#include "ocrs/ode.hpp"

#include <cmath>
#include <stdexcept>

#include "ocrs/kunit.hpp"

namespace ocrs::ode {

namespace {

constexpr int kMaxLevels = 16;  // coefficient conditioning degrades beyond

double horner(const Eigen::VectorXd& coeffs, double t) {
  double v = 0.0;
  for (int q = static_cast<int>(coeffs.size()) - 1; q >= 0; --q)
    v = v * t + coeffs(q);
  return v;
}

double pre_value(const OdePieces& p, int level, double t) {
  return p.linear_offset[level - 1] + p.theta * t +
         horner(p.pre_poly[level - 1], t) * std::exp(-t);
}

double post_value(const OdePieces& p, int level, double t) {
  return 1.0 + horner(p.post_poly[level - 1], t) * std::exp(-t);
}

}  // namespace

OdePieces solve_pieces(int k, double theta) {
  if (k < 1 || k > kMaxLevels)
    throw std::domain_error("solve_pieces: k must lie in 1..16");
  if (theta <= 0.0 || theta >= 1.0)
    throw std::domain_error("solve_pieces: theta must lie in (0,1)");

  OdePieces p;
  p.k = k;
  p.theta = theta;
  p.breakpoints.assign(k + 1, 0.0);
  p.linear_offset.assign(k, 0.0);
  p.pre_poly.assign(k, Eigen::VectorXd());
  p.post_poly.assign(k, Eigen::VectorXd());

  const double horizon = k;
  for (int l = 1; l <= k; ++l) {
    // Pre-breakpoint coefficients integrate the previous level's post piece.
    Eigen::VectorXd pre = Eigen::VectorXd::Zero(std::max(0, l - 1));
    if (l >= 2) {
      const Eigen::VectorXd& prev = p.post_poly[l - 2];
      double above = 0.0;  // zeta_{l,l-1} = 0
      for (int q = l - 2; q >= 0; --q) {
        pre(q) = (q + 1) * above - prev(q);
        above = pre(q);
      }
    }
    p.pre_poly[l - 1] = pre;
    const double start = p.breakpoints[l - 1];
    p.linear_offset[l - 1] =
        -theta * start - horner(pre, start) * std::exp(-start);

    double breakpoint = horizon;
    if (l < k) {
      auto f = [&](double t) { return pre_value(p, l, t); };
      const double target = 1.0 - theta;
      if (f(horizon) >= target) {
        double lo = start, hi = horizon;
        if (f(lo) > target + 1e-9)
          throw std::runtime_error("solve_pieces: level starts above target");
        // The pre-breakpoint expression is monotone increasing; spot-check
        // and fail loudly rather than silently trusting it.
        double prev_v = f(lo);
        for (int s = 1; s <= 8; ++s) {
          double v = f(lo + (hi - lo) * s / 8.0);
          if (v < prev_v - 1e-9)
            throw std::runtime_error(
                "solve_pieces: pre-breakpoint expression not monotone");
          prev_v = v;
        }
        while (hi - lo > 1e-12) {
          double mid = 0.5 * (lo + hi);
          (f(mid) >= target ? hi : lo) = mid;
        }
        breakpoint = 0.5 * (lo + hi);
      }
    }
    p.breakpoints[l] = breakpoint;

    // Post-breakpoint coefficients; psi_{l,0} pins continuity at 1 - theta.
    Eigen::VectorXd post = Eigen::VectorXd::Zero(l);
    for (int q = 1; q <= l - 1; ++q) post(q) = p.post_poly[l - 2](q - 1) / q;
    double tail = 0.0;
    for (int q = 1; q <= l - 1; ++q)
      tail += post(q) * std::pow(breakpoint, q);
    post(0) = -theta * std::exp(breakpoint) - tail;
    p.post_poly[l - 1] = post;
  }
  return p;
}

double y_value(const OdePieces& pieces, int level, double t) {
  if (level < 1 || level > pieces.k)
    throw std::domain_error("y_value: level out of range");
  if (t < -1e-12 || t > pieces.k + 1e-12)
    throw std::domain_error("y_value: t outside [0,k]");
  if (t <= pieces.breakpoints[level - 1]) return 0.0;
  if (t <= pieces.breakpoints[level]) return pre_value(pieces, level, t);
  return post_value(pieces, level, t);
}

double gamma_star(int k, double tol) {
  if (tol <= 0.0) throw std::domain_error("gamma_star: tol must be positive");
  auto excess = [&](double theta) {
    OdePieces p = solve_pieces(k, theta);
    return y_value(p, k, k) - (1.0 - theta);  // monotone increasing in theta
  };
  double lo = 1e-6, hi = 1.0 - 1e-6;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double euler_gamma(int k, int n) {
  if (n < 1) throw std::domain_error("euler_gamma: N must be positive");
  std::vector<double> p(static_cast<std::size_t>(n) * k, 1.0 / n);
  return kunit::solve_theta_star(p, k, 1e-10);
}

}  // namespace ocrs::ode
