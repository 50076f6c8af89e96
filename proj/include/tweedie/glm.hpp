#pragma once

// Generalized linear models fitted by iteratively reweighted least squares.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "tweedie/dataset.hpp"
#include "tweedie/density.hpp"
#include "tweedie/error.hpp"
#include "tweedie/numerics.hpp"

namespace tweedie {

enum class Link { log, logit };

inline std::string to_string(Link link) { return link == Link::log ? "log" : "logit"; }

class Family {
 public:
  enum class Kind { tweedie, gamma, binomial };

  static Family tweedie(double p) {
    if (!(p > 1.0 && p < 2.0)) {
      std::ostringstream os;
      os << "tweedie power must lie in (1, 2) (got " << p << ")";
      throw DomainError(os.str());
    }
    return Family(Kind::tweedie, p);
  }
  static Family gamma() { return Family(Kind::gamma, 2.0); }
  static Family binomial() { return Family(Kind::binomial, 0.0); }

  Kind kind() const { return kind_; }
  /// Variance power; meaningful for tweedie and gamma.
  double power() const { return power_; }

  std::string name() const {
    switch (kind_) {
      case Kind::tweedie: return "tweedie";
      case Kind::gamma: return "gamma";
      case Kind::binomial: return "binomial";
    }
    return {};
  }

  double variance(double mu) const {
    switch (kind_) {
      case Kind::tweedie: return std::pow(mu, power_);
      case Kind::gamma: return mu * mu;
      case Kind::binomial: return mu * (1.0 - mu);
    }
    return 0.0;
  }

  double unit_deviance(double y, double mu) const {
    switch (kind_) {
      case Kind::tweedie: {
        const double p = power_;
        const double tail = -y * std::pow(mu, 1.0 - p) / (1.0 - p) + std::pow(mu, 2.0 - p) / (2.0 - p);
        const double head = y > 0.0 ? std::pow(y, 2.0 - p) / ((1.0 - p) * (2.0 - p)) : 0.0;
        return 2.0 * (head + tail);
      }
      case Kind::gamma:
        return 2.0 * (-std::log(y / mu) + (y - mu) / mu);
      case Kind::binomial:
        return -2.0 * (y > 0.5 ? std::log(mu) : std::log1p(-mu));
    }
    return 0.0;
  }

  void validate_response(const Eigen::VectorXd& y) const {
    switch (kind_) {
      case Kind::tweedie:
        break;  // non-negativity is a Dataset invariant
      case Kind::gamma:
        if ((y.array() <= 0.0).any()) throw DataError("gamma family requires a strictly positive response");
        break;
      case Kind::binomial:
        if (((y.array() != 0.0) && (y.array() != 1.0)).any()) {
          throw DataError("binomial family requires a 0/1 response");
        }
        break;
    }
  }

 private:
  Family(Kind kind, double power) : kind_(kind), power_(power) {}

  Kind kind_;
  double power_;
};

namespace link {

inline double inverse(Link l, double eta) {
  if (l == Link::log) return std::exp(eta);
  return 1.0 / (1.0 + std::exp(-eta));
}

/// d mu / d eta
inline double mu_eta(Link l, double eta) {
  if (l == Link::log) return std::exp(eta);
  const double e = std::exp(-std::abs(eta));
  return e / ((1.0 + e) * (1.0 + e));
}

inline double apply(Link l, double mu) { return l == Link::log ? std::log(mu) : std::log(mu / (1.0 - mu)); }

}  // namespace link

struct GlmOptions {
  double tolerance = 1e-10;
  int max_iterations = 100;
  /// Columns whose pivot falls below rank_tolerance * (largest pivot) are
  /// treated as linearly dependent.
  double rank_tolerance = 1e-10;
  /// Largest coefficient update, in units of the unscaled standard error,
  /// accepted alongside the deviance criterion.
  double step_tolerance = 1e-8;
};

struct FittedGlm {
  Family family = Family::gamma();
  Link link = Link::log;
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  /// sqrt(diag(inverse expected information)) scaled by `dispersion`.
  Eigen::VectorXd standard_errors;
  /// Pearson estimate; 1 for binomial.
  double dispersion = 1.0;
  /// Maximum-likelihood estimate of phi at the fitted means (tweedie and
  /// gamma); 1 for binomial.
  double dispersion_mle = 1.0;
  /// Full log-likelihood at (coefficients, dispersion_mle).
  double log_likelihood = 0.0;
  double deviance = 0.0;
  int iterations = 0;
  bool converged = false;

  /// Linear predictor for a design block (no offset).
  Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& design) const { return design * coefficients; }

  Eigen::VectorXd fitted_means(const Eigen::MatrixXd& design, const Eigen::VectorXd* offset = nullptr) const {
    Eigen::VectorXd eta = linear_predictor(design);
    if (offset) eta += *offset;
    return eta.unaryExpr([l = link](double e) { return link::inverse(l, e); });
  }
};

// --- Log-likelihoods and dispersion -----------------------------------------

/// Sum of series log-densities with a common dispersion and power.
inline double tweedie_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double phi, double p) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) total += log_density(y[i], {mu[i], phi, p});
  return total;
}

inline double tweedie_loglik_dphi(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double phi, double p) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) total += log_density_dphi(y[i], {mu[i], phi, p});
  return total;
}

/// Gamma log-likelihood with shape 1/phi and means mu.
inline double gamma_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double phi) {
  const double shape = 1.0 / phi;
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    total += shape * std::log(shape * y[i] / mu[i]) - shape * y[i] / mu[i] - std::log(y[i]) -
             numerics::log_gamma(shape);
  }
  return total;
}

inline double binomial_loglik(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) total += y[i] > 0.5 ? std::log(mu[i]) : std::log1p(-mu[i]);
  return total;
}

namespace detail {

/// Root of a decreasing function of phi, bracketed by geometric expansion
/// from `start` and refined on log(phi).
template <class Score>
double solve_dispersion(Score&& score, double start) {
  double lo = start, hi = start;
  double s_lo = score(lo), s_hi = s_lo;
  for (int i = 0; s_lo < 0.0; ++i) {
    if (i > 200) throw NumericalError("dispersion bracket diverged toward zero");
    hi = lo;
    s_hi = s_lo;
    lo *= 0.5;
    s_lo = score(lo);
  }
  for (int i = 0; s_hi > 0.0; ++i) {
    if (i > 200) throw NumericalError("dispersion bracket diverged toward infinity");
    lo = hi;
    s_lo = s_hi;
    hi *= 2.0;
    s_hi = score(hi);
  }
  if (s_lo == 0.0) return lo;
  if (s_hi == 0.0) return hi;
  std::uintmax_t max_iter = 200;
  auto log_score = [&](double t) { return score(std::exp(t)); };
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13; };
  const auto [a, b] = boost::math::tools::toms748_solve(log_score, std::log(lo), std::log(hi), s_lo, s_hi, tol, max_iter);
  return std::exp(0.5 * (a + b));
}

}  // namespace detail

/// Maximum-likelihood dispersion for tweedie means `mu` at power p.
inline double tweedie_dispersion_mle(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, double p, double start) {
  return detail::solve_dispersion([&](double phi) { return tweedie_loglik_dphi(y, mu, phi, p); }, start);
}

/// Maximum-likelihood gamma dispersion: solves log(nu) - digamma(nu) = D / (2n)
/// for the shape nu = 1/phi, where D is the gamma deviance. Returns 0 for an
/// exact fit (D == 0), where the likelihood is unbounded.
inline double gamma_dispersion_mle(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double deviance = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) deviance += 2.0 * (-std::log(y[i] / mu[i]) + (y[i] - mu[i]) / mu[i]);
  const double target = deviance / (2.0 * static_cast<double>(y.size()));
  if (!(target > 0.0)) return 0.0;  // exact fit
  // log(nu) - digamma(nu) decreases in nu = 1/phi, so this score decreases in phi.
  auto score = [&](double phi) {
    const double nu = 1.0 / phi;
    return target - (std::log(nu) - boost::math::digamma(nu));
  };
  return detail::solve_dispersion(score, target);
}

// --- IRLS ----------------------------------------------------------------------

namespace detail {

inline Eigen::VectorXd starting_means(const Family& family, const Eigen::VectorXd& y) {
  if (family.kind() == Family::Kind::binomial) return (y.array() + 0.5) / 2.0;
  const double shift = 0.1 * y.mean();
  return y.array() + (shift > 0.0 ? shift : 0.1);
}

inline double total_deviance(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) d += family.unit_deviance(y[i], mu[i]);
  return d;
}

struct WeightedSystem {
  Eigen::VectorXd weights;  ///< IRLS working weights
  Eigen::VectorXd working;  ///< working response, offset removed
};

inline WeightedSystem working_system(const Family& family, Link l, const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                                     const Eigen::VectorXd& offset) {
  WeightedSystem s{Eigen::VectorXd(y.size()), Eigen::VectorXd(y.size())};
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double mu = link::inverse(l, eta[i]);
    const double d = link::mu_eta(l, eta[i]);
    s.weights[i] = d * d / family.variance(mu);
    s.working[i] = eta[i] - offset[i] + (y[i] - mu) / d;
  }
  return s;
}

inline Eigen::ColPivHouseholderQR<Eigen::MatrixXd> checked_qr(const Eigen::MatrixXd& weighted_design, double rank_tol) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(weighted_design);
  const auto diag = qr.matrixQR().diagonal().cwiseAbs();
  const double largest = diag.size() > 0 ? diag.maxCoeff() : 0.0;
  const long rank = (diag.array() > rank_tol * largest).count();
  if (largest == 0.0 || rank < weighted_design.cols()) {
    std::ostringstream os;
    os << "design is rank deficient (rank " << rank << " of " << weighted_design.cols() << ")";
    throw SingularDesignError(os.str(), rank, weighted_design.cols());
  }
  return qr;
}

/// Inverse of X'WX through the pivoted QR of sqrt(W) X.
inline Eigen::MatrixXd inverse_information(const Eigen::ColPivHouseholderQR<Eigen::MatrixXd>& qr) {
  const Eigen::Index k = qr.cols();
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const Eigen::MatrixXd perm = qr.colsPermutation();
  return perm * (r_inv * r_inv.transpose()) * perm.transpose();
}

}  // namespace detail

/// Pearson dispersion sum (y - mu)^2 / V(mu) / (n - k).
inline double pearson_dispersion(const Family& family, const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                                 Eigen::Index k) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double r = y[i] - mu[i];
    total += r * r / family.variance(mu[i]);
  }
  return total / static_cast<double>(y.size() - k);
}

inline double pearson_dispersion(const FittedGlm& fit, const Dataset& data, const Eigen::VectorXd* offset = nullptr) {
  return pearson_dispersion(fit.family, data.response(), fit.fitted_means(data.design(), offset), data.cols());
}

/// Full log-likelihood of `data` at the fit's coefficients and ML dispersion.
inline double model_loglik(const FittedGlm& fit, const Dataset& data, const Eigen::VectorXd* offset = nullptr) {
  const Eigen::VectorXd mu = fit.fitted_means(data.design(), offset);
  switch (fit.family.kind()) {
    case Family::Kind::tweedie: return tweedie_loglik(data.response(), mu, fit.dispersion_mle, fit.family.power());
    case Family::Kind::gamma: return gamma_loglik(data.response(), mu, fit.dispersion_mle);
    case Family::Kind::binomial: return binomial_loglik(data.response(), mu);
  }
  return 0.0;
}

/// Fits g(E[y]) = X b + offset by IRLS. Throws SingularDesignError when the
/// weighted design loses rank and ConvergenceError when the deviance does not
/// settle within the iteration budget.
inline FittedGlm irls_fit(const Dataset& data, const Family& family, Link l,
                          const std::optional<Eigen::VectorXd>& offset = std::nullopt, const GlmOptions& options = {}) {
  const Eigen::VectorXd& y = data.response();
  const Eigen::MatrixXd& x = data.design();
  const Eigen::Index n = data.rows();
  const Eigen::Index k = data.cols();
  family.validate_response(y);
  if (l == Link::logit && family.kind() != Family::Kind::binomial) throw DomainError("logit link requires binomial family");
  const Eigen::VectorXd off = offset ? *offset : Eigen::VectorXd::Zero(n);
  if (off.size() != n) throw DataError("offset length does not match observations");

  Eigen::VectorXd mu = detail::starting_means(family, y);
  Eigen::VectorXd eta = mu.unaryExpr([l](double m) { return link::apply(l, m); });
  double dev_old = detail::total_deviance(family, y, mu);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);

  FittedGlm fit;
  fit.family = family;
  fit.link = l;
  fit.names = data.names();

  double change = INFINITY;
  double step = INFINITY;
  int iter = 0;
  for (iter = 1; iter <= options.max_iterations; ++iter) {
    const auto sys = detail::working_system(family, l, y, eta, off);
    const Eigen::VectorXd sw = sys.weights.cwiseSqrt();
    const auto qr = detail::checked_qr(sw.asDiagonal() * x, options.rank_tolerance);
    Eigen::VectorXd next = qr.solve(sw.cwiseProduct(sys.working));

    Eigen::VectorXd next_eta = x * next + off;
    Eigen::VectorXd next_mu = next_eta.unaryExpr([l](double e) { return link::inverse(l, e); });
    double dev = detail::total_deviance(family, y, next_mu);
    // Step halving when the update leaves the valid region.
    for (int half = 0; !std::isfinite(dev) && half < 30; ++half) {
      next = 0.5 * (next + beta);
      next_eta = x * next + off;
      next_mu = next_eta.unaryExpr([l](double e) { return link::inverse(l, e); });
      dev = detail::total_deviance(family, y, next_mu);
    }
    if (!std::isfinite(dev)) throw NumericalError("deviance is not finite");

    // Newton-type step size in units of the current standard errors.
    const Eigen::MatrixXd inv_info = detail::inverse_information(qr);
    step = ((next - beta).array() / inv_info.diagonal().array().sqrt()).abs().maxCoeff();
    beta = std::move(next);
    eta = std::move(next_eta);
    mu = std::move(next_mu);
    change = std::abs(dev - dev_old) / (std::abs(dev) + 0.1);
    dev_old = dev;
    if (change < options.tolerance && step < options.step_tolerance) break;
  }
  if (!(change < options.tolerance && step < options.step_tolerance)) {
    std::ostringstream os;
    os << family.name() << " IRLS did not converge in " << options.max_iterations
       << " iterations (relative deviance change " << change << ")";
    throw ConvergenceError(os.str(), options.max_iterations, change);
  }

  fit.coefficients = beta;
  fit.deviance = dev_old;
  fit.iterations = iter;
  fit.converged = true;

  const auto sys = detail::working_system(family, l, y, eta, off);
  const auto qr = detail::checked_qr(sys.weights.cwiseSqrt().asDiagonal() * x, options.rank_tolerance);
  const Eigen::MatrixXd cov = detail::inverse_information(qr);

  switch (family.kind()) {
    case Family::Kind::binomial:
      fit.dispersion = 1.0;
      fit.dispersion_mle = 1.0;
      break;
    case Family::Kind::gamma:
      fit.dispersion = pearson_dispersion(family, y, mu, k);
      fit.dispersion_mle = gamma_dispersion_mle(y, mu);
      break;
    case Family::Kind::tweedie:
      fit.dispersion = pearson_dispersion(family, y, mu, k);
      fit.dispersion_mle = fit.dispersion > 0.0 ? tweedie_dispersion_mle(y, mu, family.power(), fit.dispersion) : 0.0;
      break;
  }
  fit.standard_errors = (cov.diagonal() * fit.dispersion).cwiseSqrt();
  fit.log_likelihood = fit.dispersion_mle > 0.0 ? model_loglik(fit, data, offset ? &*offset : nullptr) : INFINITY;
  return fit;
}

/// Quasi-score X' diag(mu_eta / V(mu)) (y - mu) of a GLM at coefficients b.
inline Eigen::VectorXd quasi_score(const Dataset& data, const Family& family, Link l, const Eigen::VectorXd& b) {
  const Eigen::VectorXd eta = data.design() * b;
  Eigen::VectorXd u(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double mu = link::inverse(l, eta[i]);
    u[i] = link::mu_eta(l, eta[i]) / family.variance(mu) * (data.response()[i] - mu);
  }
  return data.design().transpose() * u;
}

/// Tweedie log-likelihood as a function of log-link coefficients.
inline double tweedie_loglik_at(const Dataset& data, const Eigen::VectorXd& b, double phi, double p) {
  const Eigen::VectorXd mu = (data.design() * b).array().exp();
  return tweedie_loglik(data.response(), mu, phi, p);
}

/// Analytic gradient of tweedie_loglik_at in b:
/// sum_i x_i (y_i - mu_i) mu_i^(1-p) / phi.
inline Eigen::VectorXd tweedie_loglik_gradient(const Dataset& data, const Eigen::VectorXd& b, double phi, double p) {
  const Eigen::VectorXd mu = (data.design() * b).array().exp();
  Eigen::VectorXd u(data.rows());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    u[i] = (data.response()[i] - mu[i]) * std::pow(mu[i], 1.0 - p) / phi;
  }
  return data.design().transpose() * u;
}

}  // namespace tweedie
