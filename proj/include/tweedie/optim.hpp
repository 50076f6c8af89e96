#pragma once

// Small derivative-based and derivative-free optimizers.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>

#include <Eigen/Dense>

namespace tweedie::optim {

struct BfgsOptions {
  int max_iterations = 500;
  /// Stop once max_j |g_j| * scale_j falls below this, where scale_j is the
  /// square root of the j-th diagonal entry of the current inverse-Hessian
  /// approximation.
  double gradient_tolerance = 1e-9;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  bool converged = false;
};

/// Value and gradient at a point.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

namespace detail {

// Strong-Wolfe line search (bracketing then zoom by bisection-safeguarded
// cubic interpolation).
inline double wolfe_search(const Objective& f, const Eigen::VectorXd& x, double f0, double slope0,
                           const Eigen::VectorXd& dir, double* f_out, Eigen::VectorXd* g_out) {
  constexpr double c1 = 1e-4, c2 = 0.9;
  Eigen::VectorXd g(x.size());
  auto phi = [&](double a, double* d) {
    const double v = f(x + a * dir, &g);
    *d = g.dot(dir);
    return v;
  };

  auto zoom = [&](double lo, double f_lo, double d_lo, double hi, double f_hi) {
    for (int i = 0; i < 60; ++i) {
      double a = 0.5 * (lo + hi);
      // Quadratic interpolation from (lo, f_lo, d_lo) and (hi, f_hi).
      const double denom = 2.0 * (f_hi - f_lo - d_lo * (hi - lo));
      if (denom > 0.0) {
        const double cand = lo - d_lo * (hi - lo) * (hi - lo) / denom;
        const double span = std::abs(hi - lo);
        if (std::abs(cand - lo) > 0.1 * span && std::abs(cand - hi) > 0.1 * span) a = cand;
      }
      double d = 0.0;
      const double v = phi(a, &d);
      if (!std::isfinite(v) || v > f0 + c1 * a * slope0 || v >= f_lo) {
        hi = a;
        f_hi = std::isfinite(v) ? v : std::numeric_limits<double>::max();
      } else {
        if (std::abs(d) <= -c2 * slope0) {
          *f_out = v;
          *g_out = g;
          return a;
        }
        if (d * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
        }
        lo = a;
        f_lo = v;
        d_lo = d;
      }
    }
    double d = 0.0;
    *f_out = phi(lo, &d);
    *g_out = g;
    return lo;
  };

  double prev = 0.0, f_prev = f0, d_prev = slope0;
  double a = 1.0;
  for (int i = 0; i < 60; ++i) {
    double d = 0.0;
    const double v = phi(a, &d);
    if (!std::isfinite(v) || v > f0 + c1 * a * slope0 || (i > 0 && v >= f_prev)) {
      return zoom(prev, f_prev, d_prev, a, std::isfinite(v) ? v : std::numeric_limits<double>::max());
    }
    if (std::abs(d) <= -c2 * slope0) {
      *f_out = v;
      *g_out = g;
      return a;
    }
    if (d >= 0.0) return zoom(a, v, d, prev, f_prev);
    prev = a;
    f_prev = v;
    d_prev = d;
    a *= 2.0;
  }
  *f_out = f_prev;
  *g_out = g;
  return prev;
}

}  // namespace detail

/// Minimizes f by BFGS. `inverse_hessian`, when given, seeds the
/// inverse-Hessian approximation; otherwise a scaled identity is used.
inline BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x, const BfgsOptions& options = {},
                                const Eigen::MatrixXd* inverse_hessian = nullptr) {
  const Eigen::Index n = x.size();
  BfgsResult out;
  Eigen::VectorXd g(n);
  double value = f(x, &g);
  Eigen::MatrixXd h = inverse_hessian ? *inverse_hessian : Eigen::MatrixXd::Identity(n, n);
  bool scaled = inverse_hessian != nullptr;

  auto small_gradient = [&] {
    return (g.array().abs() * h.diagonal().array().abs().sqrt()).maxCoeff() < options.gradient_tolerance;
  };

  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (small_gradient()) {
      out.converged = true;
      break;
    }
    Eigen::VectorXd dir = -h * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h.setIdentity();
      dir = -g;
      slope = g.dot(dir);
    }
    double next_value = value;
    Eigen::VectorXd next_g(n);
    const double step = detail::wolfe_search(f, x, value, slope, dir, &next_value, &next_g);
    if (step == 0.0) break;
    const Eigen::VectorXd s = step * dir;
    const Eigen::VectorXd yk = next_g - g;
    x += s;
    value = next_value;
    g = next_g;
    const double sy = s.dot(yk);
    if (sy > 0.0) {
      if (!scaled) {
        h *= sy / yk.squaredNorm();
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      h = (eye - rho * s * yk.transpose()) * h * (eye - rho * yk * s.transpose()) + rho * s * s.transpose();
    }
  }
  if (!out.converged && small_gradient()) out.converged = true;
  out.x = std::move(x);
  out.value = value;
  out.gradient = std::move(g);
  out.iterations = iter;
  return out;
}

/// Golden-section search for the maximum of a unimodal f on [lo, hi]. Every
/// evaluation is reported to `visit(x, f(x))`; returns once the bracket is
/// narrower than `tol`.
template <class F, class Visit>
void golden_section_maximize(F&& f, double lo, double hi, double tol, Visit&& visit) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  visit(c, fc);
  visit(d, fd);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
      visit(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
      visit(d, fd);
    }
  }
}

}  // namespace tweedie::optim
