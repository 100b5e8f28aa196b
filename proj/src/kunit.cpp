#include "ocrs/kunit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ocrs::kunit {

namespace {

constexpr double kBreakTol = 1e-12;  // ties stay inside the top-up window

void check_probabilities(const std::vector<double>& p, int k) {
  if (k < 1) throw std::domain_error("k must be positive");
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0 || v > 1.0)
      throw std::domain_error("arrival probabilities must lie in [0,1]");
    sum += v;
  }
  if (sum > k + 1e-9)
    throw std::domain_error("sum of arrival probabilities exceeds k");
}

}  // namespace

double CandidateSolution::level_prefix(int l, int t_inclusive) const {
  double s = 0.0;
  for (int t = 1; t <= t_inclusive; ++t) s += x(l - 1, t - 1);
  return s;
}

CandidateSolution build_candidate(const std::vector<double>& p, int k,
                                  double theta) {
  check_probabilities(p, k);
  if (theta < 0.0 || theta > 1.0)
    throw std::domain_error("theta must lie in [0,1]");
  const int T = static_cast<int>(p.size());

  CandidateSolution c;
  c.k = k;
  c.theta = theta;
  c.x = Eigen::MatrixXd::Zero(k, T);
  c.breakpoints.assign(k + 1, 0);

  // prefix_hist[l][t] = sum_{tau<=t} x_{l,tau}, filled level by level.
  std::vector<std::vector<double>> prefix_hist(
      k + 1, std::vector<double>(T + 1, 0.0));

  for (int l = 1; l <= k; ++l) {
    const int start = c.breakpoints[l - 1];  // t_l
    int breakpoint = T;                      // t_{l+1} unless a violation hits
    // Occupancy of the feeding state at the start of period t.
    auto available = [&](int t) {
      return l == 1 ? 1.0 - prefix_hist[1][t - 1]
                    : prefix_hist[l - 1][t - 1] - prefix_hist[l][t - 1];
    };
    auto topped_up = [&](int t) {
      double want = theta * p[t - 1];
      for (int v = 1; v < l; ++v) want -= c.x(v - 1, t - 1);
      return want;
    };

    // Top-up regime: x_{l,t} completes the service rate to theta*p_t. The
    // window ends at the last time before the occupancy constraint would be
    // violated at the next step.
    int t = start + 1;
    bool saturated = false;
    for (int candidate = start; candidate <= T - 1; ++candidate) {
      const int probe = candidate + 1;
      // Levels below are final through column `probe`; fill our own column
      // lazily so prefixes are consistent at the probe time.
      double want = topped_up(probe);
      double avail = p[probe - 1] * available(probe);
      if (l < k && want > avail + kBreakTol) {
        breakpoint = candidate;
        saturated = true;
        break;
      }
      if (l == k && want > avail + kBreakTol && breakpoint == T)
        breakpoint = candidate;  // reporting only, the top level never caps
      c.x(l - 1, probe - 1) = want;
      prefix_hist[l][probe] = prefix_hist[l][probe - 1] + want;
      t = probe + 1;
    }
    if (saturated) {
      for (; t <= T; ++t) {
        double v = p[t - 1] * available(t);
        c.x(l - 1, t - 1) = v;
        prefix_hist[l][t] = prefix_hist[l][t - 1] + v;
      }
    }
    c.breakpoints[l] = breakpoint;
  }
  return c;
}

bool is_feasible(const CandidateSolution& c) {
  const int T = c.horizon();
  double tail = 0.0;
  for (int t = 1; t <= T - 1; ++t) tail += c.x(c.k - 1, t - 1);
  return tail <= 1.0 - c.theta + kBreakTol;
}

double solve_theta_star(const std::vector<double>& p, int k, double tol) {
  check_probabilities(p, k);
  if (tol <= 0.0) throw std::domain_error("tol must be positive");
  const int T = static_cast<int>(p.size());
  auto gap = [&](double theta) {
    CandidateSolution c = build_candidate(p, k, theta);
    double tail = 0.0;
    for (int t = 1; t <= T - 1; ++t) tail += c.x(k - 1, t - 1);
    return tail - (1.0 - theta);  // monotone increasing in theta
  };
  double lo = 0.0, hi = 1.0;
  if (gap(1.0) <= 0.0) return 1.0;
  for (int iter = 0; iter < 200 && hi - lo > tol / (k + 1); ++iter) {
    double mid = 0.5 * (lo + hi);
    (gap(mid) > 0.0 ? hi : lo) = mid;
  }
  return lo;  // the feasible end of the bracket
}

namespace {

// Success-count distribution of independent Bernoullis over (lo, hi],
// truncated at k successes. Index q = exactly q arrivals.
Eigen::VectorXd bernoulli_counts(const std::vector<double>& p, int lo, int hi,
                                 int k) {
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k + 1);
  counts(0) = 1.0;
  for (int j = lo + 1; j <= hi; ++j) {
    for (int q = k; q >= 1; --q)
      counts(q) = counts(q) * (1.0 - p[j - 1]) + counts(q - 1) * p[j - 1];
    counts(0) *= 1.0 - p[j - 1];
  }
  return counts;
}

}  // namespace

double DualCertificate::objective(const std::vector<double>& p) const {
  double v = 0.0;
  for (int t = 0; t < static_cast<int>(p.size()); ++t) v += p[t] * beta(0, t);
  return v;
}

DualCertificate build_dual_certificate(const std::vector<double>& p, int k,
                                       double theta_star) {
  check_probabilities(p, k);
  const int T = static_cast<int>(p.size());
  for (double v : p)
    if (v >= 1.0 - 1e-12)
      throw std::domain_error(
          "dual certificate unsupported when some p_t = 1; use the LP path");

  CandidateSolution c = build_candidate(p, k, theta_star);
  // Window ends: a[l] < t <= a[l+1] is level l's top-up window, with the
  // final window forced to close at T-1.
  std::vector<int> a(k + 2, 0);
  for (int l = 2; l <= k; ++l) a[l] = std::min(c.breakpoints[l - 1], T - 1);
  a[k + 1] = T - 1;

  // B[l] = success counts over level l's whole window; A[l][t] over (t, end].
  std::vector<Eigen::VectorXd> B(k + 1);
  std::vector<std::vector<Eigen::VectorXd>> A(k + 1);
  for (int l = 1; l <= k; ++l) {
    B[l] = bernoulli_counts(p, a[l], a[l + 1], k);
    A[l].assign(T + 1, Eigen::VectorXd());
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(k + 1);
    acc(0) = 1.0;
    if (a[l + 1] >= a[l]) A[l][a[l + 1]] = acc;
    for (int t = a[l + 1] - 1; t >= a[l]; --t) {
      Eigen::VectorXd next = acc;
      for (int q = k; q >= 1; --q)
        next(q) = acc(q) * (1.0 - p[t]) + acc(q - 1) * p[t];
      next(0) = acc(0) * (1.0 - p[t]);
      A[l][t] = next;
      acc = next;
    }
  }

  // delta(l1, l2): total weight of monotone chains of arrival counts through
  // the windows above l2.
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(k + 1, k + 1);
  for (int l1 = 1; l1 < k; ++l1) delta(l1, k) = 1.0;
  for (int l2 = 1; l2 < k; ++l2) {
    const int chain = k - 1 - l2;
    std::vector<double> h(k + 1);
    for (int w = 0; w <= k; ++w) h[w] = B[k](k - w);
    for (int j = chain; j >= 1; --j) {
      std::vector<double> next(k + 1, 0.0);
      for (int w = 0; w <= l2 + j; ++w)
        for (int wp = w; wp <= l2 + j; ++wp)
          next[w] += B[l2 + j](wp - w) * h[wp];
      h.swap(next);
    }
    for (int l1 = 1; l1 < l2; ++l1) {
      double d = 0.0;
      for (int w0 = l1 + 1; w0 <= l2; ++w0) d += h[w0];
      delta(l1, l2) = d;
    }
  }

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(k + 1);
  phi(k) = 1.0;
  for (int l = 1; l < k; ++l) {
    double v = 0.0;
    for (int q = l + 1; q <= k; ++q)
      for (int w = l + 1; w <= q; ++w) {
        double tail = 1.0;
        for (int u = 0; u <= w - l - 1; ++u) tail -= B[q](u);
        v += (delta(w - 1, q) - delta(w, q)) * tail;
      }
    phi(l) = v;
  }

  DualCertificate cert;
  cert.k = k;
  cert.beta = Eigen::MatrixXd::Zero(k, T);
  cert.xi = Eigen::VectorXd::Zero(T);
  const double pT = p[T - 1];
  cert.xi(T - 1) = 1.0;
  for (int l = 1; l <= k; ++l) cert.beta(l - 1, T - 1) = 1.0;
  for (int t = 1; t <= T - 1; ++t) {
    int l2 = k;
    for (int l = 1; l <= k; ++l)
      if (a[l] < t && t <= a[l + 1]) l2 = l;
    cert.xi(t - 1) = phi(l2) * pT;
    for (int l1 = 1; l1 < l2; ++l1) {
      double v = 0.0;
      for (int w = l1; w <= l2 - 1; ++w)
        v += delta(w, l2) * A[l2][t](w - l1);
      cert.beta(l1 - 1, t - 1) = pT * v;
    }
  }
  double norm = 0.0;
  for (int t = 0; t < T; ++t) norm += p[t] * cert.xi(t);
  if (norm <= 0.0)
    throw std::runtime_error("dual certificate: degenerate normalization");
  cert.scale = 1.0 / norm;
  cert.beta *= cert.scale;
  cert.xi *= cert.scale;
  return cert;
}

CertificateReport verify_certificate(const CandidateSolution& c,
                                     const DualCertificate& d,
                                     const std::vector<double>& p, int k,
                                     double tol) {
  const int T = static_cast<int>(p.size());
  CertificateReport report;
  auto note = [&](const std::string& msg) { report.violations.push_back(msg); };

  // Primal side: nonnegativity, service-rate rows, occupancy rows.
  std::vector<double> prefix(k + 1, 0.0);  // prefix[l] = sum_{tau<t} x_{l,tau}
  Eigen::MatrixXd slack(k, T);  // occupancy slack reused for products
  Eigen::VectorXd rate_slack(T);
  for (int t = 1; t <= T; ++t) {
    double sum_x = 0.0;
    for (int l = 1; l <= k; ++l) {
      double x = c.x(l - 1, t - 1);
      report.primal_residual = std::max(report.primal_residual, -x);
      sum_x += x;
      double occ = l == 1 ? 1.0 - prefix[1] : prefix[l - 1] - prefix[l];
      slack(l - 1, t - 1) = p[t - 1] * occ - x;
      report.primal_residual =
          std::max(report.primal_residual, -slack(l - 1, t - 1));
    }
    rate_slack(t - 1) = sum_x - c.theta * p[t - 1];
    report.primal_residual =
        std::max(report.primal_residual, -rate_slack(t - 1));
    for (int l = 1; l <= k; ++l) prefix[l] += c.x(l - 1, t - 1);
  }
  if (report.primal_residual > tol) note("primal infeasible");

  // Dual side: nonnegativity, constraint rows, normalization.
  double norm = 0.0;
  Eigen::MatrixXd dual_slack(k, T);
  for (int t = 1; t <= T; ++t) {
    norm += p[t - 1] * d.xi(t - 1);
    report.dual_residual =
        std::max(report.dual_residual, -d.xi(t - 1) - 1e-10);
    for (int l = 1; l <= k; ++l) {
      report.dual_residual =
          std::max(report.dual_residual, -d.beta(l - 1, t - 1) - 1e-10);
      double lhs = d.beta(l - 1, t - 1);
      for (int tau = t + 1; tau <= T; ++tau) {
        double next = l < k ? d.beta(l, tau - 1) : 0.0;
        lhs += p[tau - 1] * (d.beta(l - 1, tau - 1) - next);
      }
      dual_slack(l - 1, t - 1) = lhs - d.xi(t - 1);
      report.dual_residual =
          std::max(report.dual_residual, -dual_slack(l - 1, t - 1));
    }
  }
  report.normalization_gap = std::abs(norm - 1.0);
  if (report.dual_residual > tol) note("dual infeasible");
  if (report.normalization_gap > 1e-9) note("normalization violated");

  // Complementary slackness products, all four families.
  for (int t = 1; t <= T; ++t) {
    report.slackness_max = std::max(
        report.slackness_max, std::abs(d.xi(t - 1) * rate_slack(t - 1)));
    for (int l = 1; l <= k; ++l) {
      report.slackness_max =
          std::max(report.slackness_max,
                   std::abs(d.beta(l - 1, t - 1) * slack(l - 1, t - 1)));
      report.slackness_max =
          std::max(report.slackness_max,
                   std::abs(c.x(l - 1, t - 1) * dual_slack(l - 1, t - 1)));
    }
  }
  if (report.slackness_max > tol) note("complementary slackness violated");

  report.objective_gap = std::abs(d.objective(p) - c.theta);
  if (report.objective_gap > tol) note("objective gap");

  report.ok = report.violations.empty();
  return report;
}

std::vector<double> split_probability(const std::vector<double>& p, int q,
                                      double sigma) {
  const int T = static_cast<int>(p.size());
  if (q < 1 || q > T) throw std::domain_error("split index out of range");
  if (sigma < 0.0 || sigma > 1.0)
    throw std::domain_error("sigma must lie in [0,1]");
  std::vector<double> out;
  out.reserve(T + 1);
  for (int t = 1; t < q; ++t) out.push_back(p[t - 1]);
  out.push_back(p[q - 1] * sigma);
  out.push_back(p[q - 1] * (1.0 - sigma));
  for (int t = q + 1; t <= T; ++t) out.push_back(p[t - 1]);
  return out;
}

MagicianPolicy magician_policy(const std::vector<double>& p, int k,
                               double theta) {
  CandidateSolution c = build_candidate(p, k, theta);
  if (!is_feasible(c))
    throw std::domain_error("magician_policy: theta is infeasible");
  const int T = static_cast<int>(p.size());

  MagicianPolicy policy;
  policy.k = k;
  policy.theta = theta;
  policy.serve_prob = Eigen::MatrixXd::Zero(k, T);

  std::vector<double> prefix(k + 1, 0.0);
  for (int t = 1; t <= T; ++t) {
    for (int s = 0; s < k; ++s) {
      double w = s == 0 ? 1.0 - prefix[1] : prefix[s] - prefix[s + 1];
      double x = c.x(s, t - 1);
      double denom = p[t - 1] * w;
      double q = 0.0;
      if (std::abs(x) > 0.0 || denom > 0.0)
        q = denom > 0.0 ? x / denom : 0.0;
      if (q < -1e-8 || q > 1.0 + 1e-8) {
        std::ostringstream msg;
        msg << "magician_policy: serve probability " << q << " at state " << s
            << ", query " << t;
        throw std::runtime_error(msg.str());
      }
      policy.serve_prob(s, t - 1) = std::clamp(q, 0.0, 1.0);
    }
    for (int l = 1; l <= k; ++l) prefix[l] += c.x(l - 1, t - 1);
  }

  // Forward occupancy recursion must reproduce the ex-ante rate theta*p_t.
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(k + 1);
  occ(0) = 1.0;
  for (int t = 1; t <= T; ++t) {
    double served = 0.0;
    Eigen::VectorXd next = occ;
    for (int s = 0; s < k; ++s) {
      double flow = occ(s) * p[t - 1] * policy.serve_prob(s, t - 1);
      served += flow;
      next(s) -= flow;
      next(s + 1) += flow;
    }
    occ = next;
    policy.max_exante_error = std::max(
        policy.max_exante_error, std::abs(served - theta * p[t - 1]));
  }
  return policy;
}

}  // namespace ocrs::kunit
