#pragma once

// Reference computations used only by the tests. Each routine follows the
// textbook definition directly and shares no code path with the library
// routine it checks.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

namespace tweedie::oracle {

struct Compound {
  double lambda, alpha, beta;
};

inline Compound compound(double mu, double phi, double p) {
  return {std::pow(mu, 2.0 - p) / (phi * (2.0 - p)), (2.0 - p) / (p - 1.0), phi * (p - 1.0) * std::pow(mu, p - 1.0)};
}

inline double log_poisson_pmf(long m, double lambda) {
  return m * std::log(lambda) - lambda - std::lgamma(m + 1.0);
}

inline double log_gamma_pdf(double z, double shape, double scale) {
  return (shape - 1.0) * std::log(z) - z / scale - shape * std::log(scale) - std::lgamma(shape);
}

/// log sum_{m>=1} Pois(m; lambda) * Gamma(z; m*alpha, beta), summing every
/// term from m = 1 upward. Stops no earlier than m = 500 and only once the
/// terms are decreasing and 50 log-units below the largest term seen.
inline double brute_force_log_density(double z, double mu, double phi, double p, long min_terms = 500) {
  const auto c = compound(mu, phi, p);
  std::vector<double> terms;
  double best = -INFINITY;
  double prev = -INFINITY;
  for (long m = 1;; ++m) {
    const double t = log_poisson_pmf(m, c.lambda) + log_gamma_pdf(z, m * c.alpha, c.beta);
    terms.push_back(t);
    best = std::max(best, t);
    if (m >= min_terms && t < prev && t < best - 50.0) break;
    prev = t;
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return best + std::log(s);
}

/// Pr(Z <= z) = exp(-lambda) + sum_m Pois(m) * P(Gamma(m*alpha, beta) <= z).
inline double series_cdf(double z, double mu, double phi, double p) {
  const auto c = compound(mu, phi, p);
  double total = std::exp(-c.lambda);
  double best = -INFINITY;
  for (long m = 1;; ++m) {
    const double lw = log_poisson_pmf(m, c.lambda);
    best = std::max(best, lw);
    total += std::exp(lw) * boost::math::gamma_p(m * c.alpha, z / c.beta);
    if (m > c.lambda && lw < best - 50.0) break;
  }
  return total;
}

/// Ordinary least squares via the normal equations.
inline Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

/// Central finite-difference gradient with relative step h.
template <class F>
Eigen::VectorXd central_gradient(F&& f, const Eigen::VectorXd& at, double h = 1e-5) {
  Eigen::VectorXd g(at.size());
  for (Eigen::Index j = 0; j < at.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(at[j]));
    Eigen::VectorXd up = at, down = at;
    up[j] += step;
    down[j] -= step;
    g[j] = (f(up) - f(down)) / (2.0 * step);
  }
  return g;
}

/// Type-7 sample quantile (linear interpolation between order statistics).
inline double sample_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

}  // namespace tweedie::oracle
