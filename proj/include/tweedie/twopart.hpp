#pragma once

// Two-part model: logistic regression for Pr(y > 0) and a gamma GLM with log
// link for y given y > 0, both on the same covariates.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tweedie/dataset.hpp"
#include "tweedie/error.hpp"
#include "tweedie/glm.hpp"

namespace tweedie {

struct TwoPartFit {
  FittedGlm binary_part;    ///< binomial, logit, all rows
  FittedGlm positive_part;  ///< gamma, log, rows with y > 0
  double combined_loglik = 0.0;
  /// Number of rows used by the positive part.
  Eigen::Index positive_rows = 0;
};

/// Row indices with a strictly positive response, in original order.
inline std::vector<Eigen::Index> positive_indices(const Eigen::VectorXd& y) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] > 0.0) rows.push_back(i);
  return rows;
}

inline TwoPartFit fit_twopart(const Dataset& data, const GlmOptions& options = {}) {
  const Eigen::VectorXd& y = data.response();
  const auto rows = positive_indices(y);
  if (rows.empty()) throw DataError("two-part: response has no positive values");
  if (static_cast<Eigen::Index>(rows.size()) == data.rows()) throw DataError("two-part: response has no zeros");
  if (static_cast<Eigen::Index>(rows.size()) <= data.cols())
    throw DataError("two-part: fewer positive rows than coefficients");

  TwoPartFit out;
  const Eigen::VectorXd any = (y.array() > 0.0).cast<double>();
  out.binary_part = irls_fit(data.with_response(any), Family::binomial(), Link::logit, std::nullopt, options);

  const Dataset positive = data.subset(rows);
  try {
    out.positive_part = irls_fit(positive, Family::gamma(), Link::log, std::nullopt, options);
  } catch (const SingularDesignError& e) {
    throw SubsampleRankError(std::string("two-part positive subsample: ") + e.what(), e.rank(), e.columns());
  }
  out.positive_rows = positive.rows();
  out.combined_loglik = out.binary_part.log_likelihood + out.positive_part.log_likelihood;
  return out;
}

/// Unconditional mean Pr(y > 0 | x) * E[y | y > 0, x].
inline double predict_twopart(const TwoPartFit& fit, const Eigen::Ref<const Eigen::VectorXd>& design_row) {
  // log of the logistic function, stable in both tails
  const double eta = design_row.dot(fit.binary_part.coefficients);
  const double log_p = eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
  return std::exp(log_p + design_row.dot(fit.positive_part.coefficients));
}

}  // namespace tweedie
