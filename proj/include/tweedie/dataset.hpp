#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tweedie/error.hpp"

namespace tweedie {

/// Response vector, design matrix (first column the intercept) and column
/// labels. Validated on construction.
class Dataset {
 public:
  Dataset(Eigen::VectorXd response, Eigen::MatrixXd design, std::vector<std::string> names)
      : response_(std::move(response)), design_(std::move(design)), names_(std::move(names)) {
    if (response_.size() != design_.rows()) throw DataError("response length does not match design rows");
    if (static_cast<Eigen::Index>(names_.size()) != design_.cols()) {
      throw DataError("number of column names does not match design columns");
    }
    if (design_.rows() <= design_.cols()) {
      std::ostringstream os;
      os << "need more observations than columns (n=" << design_.rows() << ", k=" << design_.cols() << ")";
      throw DataError(os.str());
    }
    if (!response_.allFinite() || !design_.allFinite()) throw DataError("non-finite value in dataset");
    if ((response_.array() < 0.0).any()) throw DataError("response must be non-negative");
  }

  /// Convenience: prepend an intercept column to the covariates.
  static Dataset with_intercept(Eigen::VectorXd response, const Eigen::MatrixXd& covariates,
                                std::vector<std::string> covariate_names) {
    Eigen::MatrixXd design(covariates.rows(), covariates.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(covariates.cols()) = covariates;
    covariate_names.insert(covariate_names.begin(), "(Intercept)");
    return {std::move(response), std::move(design), std::move(covariate_names)};
  }

  const Eigen::VectorXd& response() const { return response_; }
  const Eigen::MatrixXd& design() const { return design_; }
  const std::vector<std::string>& names() const { return names_; }

  Eigen::Index rows() const { return design_.rows(); }
  Eigen::Index cols() const { return design_.cols(); }

  Dataset subset(std::span<const Eigen::Index> rows) const {
    Eigen::VectorXd y(rows.size());
    Eigen::MatrixXd x(rows.size(), cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      y[i] = response_[rows[i]];
      x.row(i) = design_.row(rows[i]);
    }
    return {std::move(y), std::move(x), names_};
  }

  Dataset with_response(Eigen::VectorXd y) const { return {std::move(y), design_, names_}; }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.names_ == b.names_ && a.response_.size() == b.response_.size() &&
           a.design_.rows() == b.design_.rows() && a.design_.cols() == b.design_.cols() &&
           a.response_ == b.response_ && a.design_ == b.design_;
  }

 private:
  Eigen::VectorXd response_;
  Eigen::MatrixXd design_;
  std::vector<std::string> names_;
};

struct DatasetSummary {
  Eigen::Index n = 0;
  double zero_fraction = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

inline DatasetSummary summarize(const Eigen::VectorXd& y) {
  if (y.size() == 0) throw DataError("cannot summarize an empty response");
  DatasetSummary s;
  s.n = y.size();
  s.zero_fraction = static_cast<double>((y.array() == 0.0).count()) / static_cast<double>(y.size());
  s.mean = y.mean();
  s.max = y.maxCoeff();
  return s;
}

inline DatasetSummary summarize(const Dataset& data) { return summarize(data.response()); }

}  // namespace tweedie
