#pragma once

// Type I Tobit: y = max(0, x b + sigma * e), e ~ N(0, 1), fitted by maximum
// likelihood over (b, log sigma).

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tweedie/dataset.hpp"
#include "tweedie/error.hpp"
#include "tweedie/numerics.hpp"
#include "tweedie/optim.hpp"

namespace tweedie {

struct TobitFit {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;  ///< latent-mean coefficients
  Eigen::VectorXd standard_errors;  ///< from inverse observed information
  double sigma = 1.0;
  double sigma_se = 0.0;
  double log_likelihood = 0.0;
  /// max_j |gradient_j| * SE_j at the optimum, in the (b, log sigma) scale.
  double standardized_gradient = 0.0;
  int iterations = 0;
  bool converged = false;
};

namespace tobit {

/// theta = (b, log sigma).
inline double loglik(const Dataset& data, const Eigen::VectorXd& theta) {
  const Eigen::Index k = data.cols();
  const double s = theta[k];
  const double sigma = std::exp(s);
  const Eigen::VectorXd eta = data.design() * theta.head(k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double y = data.response()[i];
    if (y == 0.0) {
      total += numerics::normal_log_cdf(-eta[i] / sigma);
    } else {
      total += numerics::normal_log_pdf((y - eta[i]) / sigma) - s;
    }
  }
  return total;
}

inline Eigen::VectorXd gradient(const Dataset& data, const Eigen::VectorXd& theta) {
  const Eigen::Index k = data.cols();
  const double sigma = std::exp(theta[k]);
  const Eigen::VectorXd eta = data.design() * theta.head(k);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k + 1);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double y = data.response()[i];
    const auto x = data.design().row(i).transpose();
    if (y == 0.0) {
      const double c = -eta[i] / sigma;
      const double mills = numerics::inverse_mills(c);
      g.head(k) -= mills / sigma * x;
      g[k] -= c * mills;
    } else {
      const double r = (y - eta[i]) / sigma;
      g.head(k) += r / sigma * x;
      g[k] += r * r - 1.0;
    }
  }
  return g;
}

inline Eigen::MatrixXd hessian(const Dataset& data, const Eigen::VectorXd& theta) {
  const Eigen::Index k = data.cols();
  const double sigma = std::exp(theta[k]);
  const Eigen::VectorXd eta = data.design() * theta.head(k);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k + 1, k + 1);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double y = data.response()[i];
    const auto x = data.design().row(i).transpose();
    double hbb, hbs, hss;
    if (y == 0.0) {
      const double c = -eta[i] / sigma;
      const double mills = numerics::inverse_mills(c);
      const double dmills = -mills * (c + mills);
      hbb = dmills / (sigma * sigma);
      hbs = (dmills * c + mills) / sigma;
      hss = c * mills + c * c * dmills;
    } else {
      const double r = (y - eta[i]) / sigma;
      hbb = -1.0 / (sigma * sigma);
      hbs = -2.0 * r / sigma;
      hss = -2.0 * r * r;
    }
    h.topLeftCorner(k, k).noalias() += hbb * x * x.transpose();
    h.col(k).head(k) += hbs * x;
    h(k, k) += hss;
  }
  h.row(k).head(k) = h.col(k).head(k).transpose();
  return h;
}

}  // namespace tobit

/// Maximum-likelihood Tobit fit. Starts from OLS, runs BFGS with the analytic
/// gradient and finishes with Newton steps on the analytic Hessian.
inline TobitFit tobit_fit(const Dataset& data, int max_iterations = 500) {
  const Eigen::Index n = data.rows();
  const Eigen::Index k = data.cols();
  const Eigen::VectorXd& y = data.response();
  // An uncensored sample is allowed (the fit reduces to normal-theory OLS);
  // an all-zero sample has no information about the latent scale.
  if ((y.array() == 0.0).count() == n) throw DataError("tobit: response has no positive values");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(data.design());
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    std::ostringstream os;
    os << "tobit: design is rank deficient (rank " << qr.rank() << " of " << k << ")";
    throw SingularDesignError(os.str(), qr.rank(), k);
  }
  Eigen::VectorXd theta(k + 1);
  theta.head(k) = qr.solve(y);
  const double rss = (y - data.design() * theta.head(k)).squaredNorm();
  theta[k] = 0.5 * std::log(std::max(rss / static_cast<double>(n - k), 1e-300));

  optim::Objective objective = [&](const Eigen::VectorXd& t, Eigen::VectorXd* g) {
    if (g) *g = -tobit::gradient(data, t);
    return -tobit::loglik(data, t);
  };

  Eigen::MatrixXd seed = -tobit::hessian(data, theta);
  Eigen::LLT<Eigen::MatrixXd> llt(seed);
  Eigen::MatrixXd inv_seed = llt.info() == Eigen::Success
                                 ? Eigen::MatrixXd(llt.solve(Eigen::MatrixXd::Identity(k + 1, k + 1)))
                                 : Eigen::MatrixXd::Identity(k + 1, k + 1);
  optim::BfgsOptions options;
  options.max_iterations = max_iterations;
  auto result = optim::minimize_bfgs(objective, theta, options, &inv_seed);
  theta = result.x;

  // Newton polish.
  // Near the optimum the likelihood change of a Newton step is at rounding
  // level, so a step is kept unless it loses more than that.
  for (int i = 0; i < 10; ++i) {
    const Eigen::MatrixXd info = -tobit::hessian(data, theta);
    Eigen::LLT<Eigen::MatrixXd> chol(info);
    if (chol.info() != Eigen::Success) break;
    const Eigen::VectorXd g = tobit::gradient(data, theta);
    const Eigen::VectorXd step = chol.solve(g);
    const double before = tobit::loglik(data, theta);
    const Eigen::VectorXd cand = theta + step;
    const double slack = 1e-12 * (1.0 + std::abs(before));
    if (!(tobit::loglik(data, cand) >= before - slack)) break;
    theta = cand;
    if ((step.array().abs() * info.diagonal().array().sqrt()).maxCoeff() < 1e-12) break;
  }

  const Eigen::MatrixXd info = -tobit::hessian(data, theta);
  Eigen::LLT<Eigen::MatrixXd> chol(info);
  if (chol.info() != Eigen::Success) throw NumericalError("tobit: observed information is not positive definite");
  const Eigen::MatrixXd cov = chol.solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
  const Eigen::VectorXd se = cov.diagonal().cwiseSqrt();
  const Eigen::VectorXd g = tobit::gradient(data, theta);

  TobitFit fit;
  fit.names = data.names();
  fit.coefficients = theta.head(k);
  fit.standard_errors = se.head(k);
  fit.sigma = std::exp(theta[k]);
  fit.sigma_se = fit.sigma * se[k];  // delta method
  fit.log_likelihood = tobit::loglik(data, theta);
  fit.standardized_gradient = (g.array().abs() * se.array()).maxCoeff();
  fit.iterations = result.iterations;
  fit.converged = fit.standardized_gradient < 1e-6;
  if (!fit.converged) {
    std::ostringstream os;
    os << "tobit: optimizer stopped with standardized gradient " << fit.standardized_gradient;
    throw ConvergenceError(os.str(), result.iterations, fit.standardized_gradient);
  }
  return fit;
}

/// E[max(0, x b + sigma e)] = Phi(m/sigma) m + sigma phi(m/sigma), m = x b.
inline double tobit_predict(const TobitFit& fit, const Eigen::Ref<const Eigen::VectorXd>& design_row) {
  const double m = design_row.dot(fit.coefficients);
  const double t = m / fit.sigma;
  return std::max(0.0, numerics::normal_cdf(t) * m + fit.sigma * numerics::normal_pdf(t));
}

}  // namespace tweedie
