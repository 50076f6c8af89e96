#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace tweedie::numerics {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// lgamma without touching the global `signgam` (glibc's lgamma writes it).
inline double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

/// Streaming log-sum-exp. Rescales whenever a larger term arrives, so the
/// accumulated sum never overflows and small terms are not lost to
/// premature underflow.
class LogSumExp {
 public:
  void add(double log_term) {
    if (log_term == kNegInf) return;
    if (log_term > max_) {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    } else {
      sum_ += std::exp(log_term - max_);
    }
  }

  double max() const { return max_; }
  double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }

 private:
  double max_ = kNegInf;
  double sum_ = 0.0;
};

inline double normal_log_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }
inline double normal_pdf(double x) { return std::exp(normal_log_pdf(x)); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Mills ratio Phi(-t)/phi(t) for t >= 5 by Lentz's continued fraction.
inline double mills_ratio_upper(double t) {
  constexpr double tiny = 1e-300;
  double f = t;
  double c = t;
  double d = 0.0;
  for (int k = 1; k < 500; ++k) {
    d = t + k * d;
    if (std::abs(d) < tiny) d = tiny;
    c = t + k / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 / f;
}

/// log Phi(x), accurate far into the lower tail.
inline double normal_log_cdf(double x) {
  if (x > -5.0) return std::log(normal_cdf(x));
  return normal_log_pdf(x) + std::log(mills_ratio_upper(-x));
}

/// phi(x) / Phi(x): the inverse Mills ratio.
inline double inverse_mills(double x) {
  if (x > -5.0) return normal_pdf(x) / normal_cdf(x);
  return 1.0 / mills_ratio_upper(-x);
}

}  // namespace tweedie::numerics
