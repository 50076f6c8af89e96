#pragma once

// Tweedie compound Poisson-Gamma distribution for 1 < p < 2.
//
// Z = X_1 + ... + X_M with M ~ Poisson(lambda) and X_i ~ Gamma(alpha, beta)
// (shape-scale), so that E[Z] = mu and Var[Z] = phi * mu^p.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "tweedie/error.hpp"
#include "tweedie/numerics.hpp"

namespace tweedie {

struct CompoundRepresentation {
  double lambda;  ///< Poisson rate of events
  double alpha;   ///< Gamma shape per event
  double beta;    ///< Gamma scale per event
};

/// Mean, dispersion and power of a Tweedie variable. Validated on
/// construction; immutable afterwards.
class TweedieParams {
 public:
  TweedieParams(double mu, double phi, double p) : mu_(mu), phi_(phi), p_(p) {
    if (!(mu > 0.0) || !std::isfinite(mu)) throw DomainError(message("mu must be positive and finite", mu));
    if (!(phi > 0.0) || !std::isfinite(phi)) throw DomainError(message("phi must be positive and finite", phi));
    if (!(p > 1.0 && p < 2.0)) throw DomainError(message("power must lie in (1, 2)", p));
  }

  double mu() const { return mu_; }
  double phi() const { return phi_; }
  double p() const { return p_; }

  double variance() const { return phi_ * std::pow(mu_, p_); }

 private:
  static std::string message(const char* what, double v) {
    std::ostringstream os;
    os << what << " (got " << v << ")";
    return os.str();
  }

  double mu_;
  double phi_;
  double p_;
};

inline CompoundRepresentation to_compound(const TweedieParams& params) {
  const double mu = params.mu();
  const double phi = params.phi();
  const double p = params.p();
  return {
      .lambda = std::pow(mu, 2.0 - p) / (phi * (2.0 - p)),
      .alpha = (2.0 - p) / (p - 1.0),
      .beta = phi * (p - 1.0) * std::pow(mu, p - 1.0),
  };
}

/// Inverse of to_compound: mu = lambda*alpha*beta, p = (alpha+2)/(alpha+1),
/// phi from the variance identity lambda*alpha*(1+alpha)*beta^2 = phi*mu^p.
inline TweedieParams from_compound(const CompoundRepresentation& c) {
  if (!(c.lambda > 0.0 && c.alpha > 0.0 && c.beta > 0.0)) {
    throw DomainError("compound parameters must be strictly positive");
  }
  const double mu = c.lambda * c.alpha * c.beta;
  const double p = (c.alpha + 2.0) / (c.alpha + 1.0);
  const double phi = c.lambda * c.alpha * (1.0 + c.alpha) * c.beta * c.beta / std::pow(mu, p);
  return {mu, phi, p};
}

inline double zero_probability(const TweedieParams& params) {
  return std::exp(-to_compound(params).lambda);
}

namespace detail {

// Log of the Poisson-weighted Gamma mixture over m >= 1 at z > 0, with the
// common factor exp(-lambda - z/beta) / z left out. Term m is
//   m * c - lgamma(m + 1) - lgamma(m * alpha),  c = log(lambda) + alpha * log(z / beta),
// which is concave in m, so it is summed outward from its mode until terms
// fall `drop` log-units below the running maximum.
inline double log_series_sum(double log_z, const CompoundRepresentation& c, double* mean_index = nullptr) {
  constexpr double drop = 37.0;
  const double alpha = c.alpha;
  const double slope = std::log(c.lambda) + alpha * (log_z - std::log(c.beta));

  // Stirling approximation of the stationary point.
  const double log_mode = (slope - alpha * std::log(alpha)) / (1.0 + alpha);
  const double mode = std::clamp(std::round(std::exp(std::min(log_mode, 700.0))), 1.0, 1e15);

  auto term = [&](double m, double lgamma_m1) {
    return m * slope - lgamma_m1 - numerics::log_gamma(m * alpha);
  };

  numerics::LogSumExp sum;
  numerics::LogSumExp weighted;  // log sum of m * term, for mean_index

  const double lg_mode = numerics::log_gamma(mode + 1.0);
  {
    const double t = term(mode, lg_mode);
    sum.add(t);
    if (mean_index) weighted.add(t + std::log(mode));
  }
  // Upward.
  double lg = lg_mode;
  for (double m = mode + 1.0;; m += 1.0) {
    lg += std::log(m);
    const double t = term(m, lg);
    sum.add(t);
    if (mean_index) weighted.add(t + std::log(m));
    if (t < sum.max() - drop) break;
  }
  // Downward.
  lg = lg_mode;
  for (double m = mode - 1.0; m >= 1.0; m -= 1.0) {
    lg -= std::log(m + 1.0);
    const double t = term(m, lg);
    sum.add(t);
    if (mean_index) weighted.add(t + std::log(m));
    if (t < sum.max() - drop) break;
  }
  if (mean_index) *mean_index = std::exp(weighted.value() - sum.value());
  return sum.value();
}

inline void require_observation(double z) {
  if (!std::isfinite(z) || z < 0.0) {
    std::ostringstream os;
    os << "observation must be finite and non-negative (got " << z << ")";
    throw DomainError(os.str());
  }
}

}  // namespace detail

/// Log density with respect to (point mass at 0) + Lebesgue on (0, inf).
/// At z == 0 this is log Pr(Z = 0) = -lambda.
inline double log_density(double z, const TweedieParams& params) {
  detail::require_observation(z);
  const auto c = to_compound(params);
  if (z == 0.0) return -c.lambda;
  const double log_z = std::log(z);
  return -c.lambda - z / c.beta - log_z + detail::log_series_sum(log_z, c);
}

/// Density of the continuous part; f(0) is taken as 0 (the atom is excluded).
inline double density(double z, const TweedieParams& params) {
  detail::require_observation(z);
  if (z == 0.0) return 0.0;
  return std::exp(log_density(z, params));
}

/// d/dphi of log_density at fixed (z, mu, p).
inline double log_density_dphi(double z, const TweedieParams& params) {
  detail::require_observation(z);
  const auto c = to_compound(params);
  const double phi = params.phi();
  if (z == 0.0) return c.lambda / phi;
  double mean_index = 0.0;
  detail::log_series_sum(std::log(z), c, &mean_index);
  return (c.lambda + z / c.beta - (1.0 + c.alpha) * mean_index) / phi;
}

/// d/dmu of log_density at fixed (z, phi, p). This is the EDM score
/// (z - mu) / (phi * mu^p); the series normalizer does not depend on mu.
inline double log_density_dmu(double z, const TweedieParams& params) {
  detail::require_observation(z);
  return (z - params.mu()) / (params.phi() * std::pow(params.mu(), params.p()));
}

namespace detail {

// Adaptive Gauss-Kronrod (31 points) with a mixed stopping rule: a panel is
// accepted when its error estimate is below rel_tol * |panel| or its share of
// abs_tol. Boost's adaptive driver only offers a relative rule, which never
// terminates early on panels whose mass is ~1e-13.
template <class F>
double adaptive_integrate(const F& f, double a, double b, double abs_tol, double rel_tol, int depth = 0) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double est = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
  if (depth >= 30 || err <= std::max(abs_tol, rel_tol * std::abs(est))) return est;
  const double mid = 0.5 * (a + b);
  if (!(mid > a && mid < b)) return est;
  return adaptive_integrate(f, a, mid, 0.5 * abs_tol, rel_tol, depth + 1) +
         adaptive_integrate(f, mid, b, 0.5 * abs_tol, rel_tol, depth + 1);
}

}  // namespace detail

/// Integral of the continuous density over (0, upper].
inline double integrate_density(double upper, const TweedieParams& params) {
  detail::require_observation(upper);
  if (upper == 0.0) return 0.0;
  constexpr double abs_tol = 1e-14;
  constexpr double rel_tol = 1e-12;

  const auto c = to_compound(params);
  const double alpha = c.alpha;

  // Break points keep panels from straddling widely separated features
  // (the z^(alpha-1) behaviour at 0 and the bulk near mu).
  std::vector<double> breaks{0.0};
  for (double b : {0.25 * params.mu(), params.mu(), 4.0 * params.mu()}) {
    if (b < upper) breaks.push_back(b);
  }
  breaks.push_back(upper);
  const double share = abs_tol / static_cast<double>(breaks.size() - 1);

  double total = 0.0;
  if (alpha < 1.0) {
    // Substitute u = z^alpha: f(z) dz = f(u^(1/alpha)) u^(1/alpha - 1) / alpha du,
    // which is bounded at u = 0 even though f(z) ~ z^(alpha - 1).
    auto integrand = [&](double u) {
      if (u <= 0.0) return 0.0;
      const double log_u = std::log(u);
      const double log_z = log_u / alpha;
      const double z = std::exp(log_z);
      if (z <= 0.0) return 0.0;
      const double lf = -c.lambda - z / c.beta - log_z + detail::log_series_sum(log_z, c);
      return std::exp(lf + (1.0 / alpha - 1.0) * log_u - std::log(alpha));
    };
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      total += detail::adaptive_integrate(integrand, std::pow(breaks[i], alpha), std::pow(breaks[i + 1], alpha),
                                          share, rel_tol);
    }
  } else {
    auto integrand = [&](double z) { return z > 0.0 ? std::exp(log_density(z, params)) : 0.0; };
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      total += detail::adaptive_integrate(integrand, breaks[i], breaks[i + 1], share, rel_tol);
    }
  }
  return total;
}

/// Pr(Z <= z) = Pr(Z = 0) + integral of the density over (0, z].
inline double cdf(double z, const TweedieParams& params) {
  detail::require_observation(z);
  return std::min(1.0, zero_probability(params) + integrate_density(z, params));
}

/// Smallest z with cdf(z) >= q. Zero whenever q falls inside the atom.
inline double quantile(double q, const TweedieParams& params) {
  if (!(q > 0.0 && q < 1.0)) {
    std::ostringstream os;
    os << "quantile level must lie in (0, 1) (got " << q << ")";
    throw DomainError(os.str());
  }
  const double p0 = zero_probability(params);
  if (q <= p0) return 0.0;

  auto objective = [&](double z) { return cdf(z, params) - q; };
  const double sd = std::sqrt(params.variance());
  double lo = 0.0;
  double hi = params.mu() + sd;
  while (objective(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw NumericalError("quantile bracket diverged");
  }
  std::uintmax_t max_iter = 200;
  // 1e-8 relative on z.
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-9 * std::max(std::abs(a), std::abs(b)); };
  const auto [a, b] = boost::math::tools::toms748_solve(objective, lo, hi, p0 - q, objective(hi), tol, max_iter);
  return 0.5 * (a + b);
}

/// n independent draws. Conditional on M = m > 0 the sum of m iid
/// Gamma(alpha, beta) variables is drawn directly as Gamma(m * alpha, beta).
inline std::vector<double> sample(const TweedieParams& params, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DomainError("sample size must be at least 1");
  const auto c = to_compound(params);
  std::mt19937_64 rng(seed);
  std::poisson_distribution<long long> events(c.lambda);
  std::vector<double> out(n);
  for (auto& z : out) {
    const long long m = events(rng);
    z = m == 0 ? 0.0 : std::gamma_distribution<double>(static_cast<double>(m) * c.alpha, c.beta)(rng);
  }
  return out;
}

/// Single draw using a caller-owned engine.
template <class Engine>
double draw(const TweedieParams& params, Engine& rng) {
  const auto c = to_compound(params);
  const long long m = std::poisson_distribution<long long>(c.lambda)(rng);
  return m == 0 ? 0.0 : std::gamma_distribution<double>(static_cast<double>(m) * c.alpha, c.beta)(rng);
}

}  // namespace tweedie
