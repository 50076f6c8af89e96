#pragma once

// Model comparison: seeded train/test splits, prediction error, Q-Q tables,
// mean-variance bins and the combined comparison report.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tweedie/dataset.hpp"
#include "tweedie/density.hpp"
#include "tweedie/error.hpp"
#include "tweedie/glm.hpp"
#include "tweedie/profile.hpp"
#include "tweedie/tobit.hpp"
#include "tweedie/twopart.hpp"

namespace tweedie {

// --- Splitting and prediction error -------------------------------------------

struct SplitSpec {
  Eigen::Index train_n = 0;
  Eigen::Index test_n = 0;
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset test;
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;
};

/// Uniformly random partition: the first train_n entries of a seeded
/// permutation form the training rows, the rest the test rows. Both keep
/// their original relative order.
inline Split split(const Dataset& data, const SplitSpec& spec) {
  if (spec.train_n < 1 || spec.test_n < 1 || spec.train_n + spec.test_n != data.rows()) {
    std::ostringstream os;
    os << "split sizes " << spec.train_n << " + " << spec.test_n << " do not partition " << data.rows() << " rows";
    throw DataError(os.str());
  }
  std::vector<Eigen::Index> order(data.rows());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Eigen::Index> train(order.begin(), order.begin() + spec.train_n);
  std::vector<Eigen::Index> test(order.begin() + spec.train_n, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {data.subset(train), data.subset(test), std::move(train), std::move(test)};
}

inline double rmse(const Eigen::VectorXd& predictions, const Eigen::VectorXd& truths) {
  if (predictions.size() != truths.size()) throw DataError("rmse: vectors differ in length");
  if (predictions.size() == 0) throw DataError("rmse: empty input");
  return std::sqrt((predictions - truths).squaredNorm() / static_cast<double>(truths.size()));
}

// --- Fitted models behind one interface ---------------------------------------

enum class ModelKind { tweedie, twopart, tobit };

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::tweedie: return "tweedie";
    case ModelKind::twopart: return "twopart";
    case ModelKind::tobit: return "tobit";
  }
  return "";
}

/// Conditional distribution of y given a design row, for any of the three
/// models.
class FittedModel {
 public:
  static FittedModel tweedie(FittedGlm fit) {
    FittedModel m(ModelKind::tweedie);
    m.tweedie_ = std::move(fit);
    return m;
  }
  static FittedModel twopart(TwoPartFit fit) {
    FittedModel m(ModelKind::twopart);
    m.twopart_ = std::move(fit);
    return m;
  }
  static FittedModel tobit(TobitFit fit) {
    FittedModel m(ModelKind::tobit);
    m.tobit_ = std::move(fit);
    return m;
  }

  ModelKind kind() const { return kind_; }
  std::string name() const { return to_string(kind_); }
  const FittedGlm& tweedie_fit() const { return *tweedie_; }
  const TwoPartFit& twopart_fit() const { return *twopart_; }
  const TobitFit& tobit_fit() const { return *tobit_; }

  double log_likelihood() const {
    switch (kind_) {
      case ModelKind::tweedie: return tweedie_->log_likelihood;
      case ModelKind::twopart: return twopart_->combined_loglik;
      case ModelKind::tobit: return tobit_->log_likelihood;
    }
    return NAN;
  }

  /// phi for tweedie and the gamma part, sigma for tobit.
  double dispersion() const {
    switch (kind_) {
      case ModelKind::tweedie: return tweedie_->dispersion_mle;
      case ModelKind::twopart: return twopart_->positive_part.dispersion_mle;
      case ModelKind::tobit: return tobit_->sigma;
    }
    return NAN;
  }

  /// Unconditional mean E[y | x].
  double predict(const Eigen::Ref<const Eigen::VectorXd>& row) const {
    switch (kind_) {
      case ModelKind::tweedie: return std::exp(row.dot(tweedie_->coefficients));
      case ModelKind::twopart: return predict_twopart(*twopart_, row);
      case ModelKind::tobit: return tobit_predict(*tobit_, row);
    }
    return NAN;
  }

  Eigen::VectorXd predict_all(const Eigen::MatrixXd& design) const {
    Eigen::VectorXd out(design.rows());
    for (Eigen::Index i = 0; i < design.rows(); ++i) out[i] = predict(design.row(i).transpose());
    return out;
  }

  /// One draw from the fitted conditional distribution of y given `row`.
  template <class Rng>
  double draw(const Eigen::Ref<const Eigen::VectorXd>& row, Rng& rng) const {
    switch (kind_) {
      case ModelKind::tweedie: {
        const double mu = std::exp(row.dot(tweedie_->coefficients));
        return tweedie::draw(TweedieParams(mu, tweedie_->dispersion_mle, tweedie_->family.power()), rng);
      }
      case ModelKind::twopart: {
        const double p = link::inverse(Link::logit, row.dot(twopart_->binary_part.coefficients));
        if (!(std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p)) return 0.0;
        const double phi = twopart_->positive_part.dispersion_mle;
        const double mean = std::exp(row.dot(twopart_->positive_part.coefficients));
        return std::gamma_distribution<double>(1.0 / phi, mean * phi)(rng);
      }
      case ModelKind::tobit: {
        const double m = row.dot(tobit_->coefficients);
        return std::max(0.0, m + tobit_->sigma * std::normal_distribution<double>(0.0, 1.0)(rng));
      }
    }
    return NAN;
  }

 private:
  explicit FittedModel(ModelKind kind) : kind_(kind) {}

  ModelKind kind_;
  std::optional<FittedGlm> tweedie_;
  std::optional<TwoPartFit> twopart_;
  std::optional<TobitFit> tobit_;
};

// --- Q-Q tables ------------------------------------------------------------------

/// Type 7 sample quantile of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DataError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// 0.01, 0.02, ..., 0.99: the top percentile itself is not shown.
inline std::vector<double> default_qq_levels() {
  std::vector<double> levels;
  for (int i = 1; i <= 99; ++i) levels.push_back(i / 100.0);
  return levels;
}

struct QqTable {
  std::vector<double> levels;
  std::vector<double> empirical;
  std::vector<double> model;
};

/// Empirical quantiles of y against model quantiles. The model curve is the
/// average over `replicates` of the quantiles of one simulated draw per
/// observation, so it describes the marginal distribution implied by the
/// covariates at hand.
inline QqTable qq_table(const Dataset& data, const FittedModel& model, std::vector<double> levels = default_qq_levels(),
                        int replicates = 100, std::uint64_t seed = 1) {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0) || (i > 0 && !(levels[i] > levels[i - 1])))
      throw DomainError("qq levels must be strictly increasing in (0, 1)");
  }
  if (replicates < 1) throw DomainError("qq replicates must be positive");
  QqTable out;
  out.levels = std::move(levels);
  const auto m = out.levels.size();
  out.empirical.resize(m);
  out.model.assign(m, 0.0);

  std::vector<double> y(data.response().data(), data.response().data() + data.rows());
  std::sort(y.begin(), y.end());
  for (std::size_t i = 0; i < m; ++i) out.empirical[i] = sorted_quantile(y, out.levels[i]);

  std::mt19937_64 rng(seed);
  std::vector<double> sim(data.rows());
  for (int r = 0; r < replicates; ++r) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) sim[i] = model.draw(data.design().row(i).transpose(), rng);
    std::sort(sim.begin(), sim.end());
    for (std::size_t i = 0; i < m; ++i) out.model[i] += sorted_quantile(sim, out.levels[i]);
  }
  for (auto& v : out.model) v /= replicates;
  return out;
}

// --- Mean-variance bins ------------------------------------------------------------

struct MeanVarianceTable {
  std::vector<double> bin_mean;      ///< mean fitted mu per bin
  std::vector<double> bin_variance;  ///< sample variance of y per bin
  std::vector<Eigen::Index> bin_size;
  double phi = 1.0;
  /// Powers of the reference curves phi * mu^p.
  std::vector<double> reference_powers{1.0, 1.5, 1.719, 2.0};

  double reference(double mu, double p) const { return phi * std::pow(mu, p); }
};

/// Orders observations by fitted mean and splits them into `bins` groups of
/// (nearly) equal size.
inline MeanVarianceTable mean_variance_bins(const Dataset& data, const FittedGlm& fit, int bins = 20) {
  const Eigen::Index n = data.rows();
  if (n < bins) {
    std::ostringstream os;
    os << "mean-variance bins need at least " << bins << " observations, got " << n;
    throw DataError(os.str());
  }
  const Eigen::VectorXd mu = fit.fitted_means(data.design());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return mu[a] < mu[b]; });

  MeanVarianceTable out;
  out.phi = fit.dispersion_mle;
  for (int b = 0; b < bins; ++b) {
    const Eigen::Index lo = n * b / bins, hi = n * (b + 1) / bins;
    double mean_mu = 0.0, mean_y = 0.0;
    for (Eigen::Index i = lo; i < hi; ++i) {
      mean_mu += mu[order[i]];
      mean_y += data.response()[order[i]];
    }
    const auto size = hi - lo;
    mean_mu /= size;
    mean_y /= size;
    double ss = 0.0;
    for (Eigen::Index i = lo; i < hi; ++i) ss += std::pow(data.response()[order[i]] - mean_y, 2);
    out.bin_mean.push_back(mean_mu);
    out.bin_variance.push_back(size > 1 ? ss / (size - 1) : 0.0);
    out.bin_size.push_back(size);
  }
  return out;
}

/// Least-squares slope of log variance on log mean across bins with positive
/// variance.
inline double mean_variance_slope(const MeanVarianceTable& table) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < table.bin_mean.size(); ++i) {
    if (table.bin_variance[i] > 0.0 && table.bin_mean[i] > 0.0) {
      lx.push_back(std::log(table.bin_mean[i]));
      ly.push_back(std::log(table.bin_variance[i]));
    }
  }
  if (lx.size() < 2) throw DataError("mean-variance slope needs two bins with positive variance");
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (sxx == 0.0) throw DataError("mean-variance slope undefined: all bins share one mean");
  return sxy / sxx;
}

// --- Fitting and comparison -----------------------------------------------------------

struct CompareOptions {
  /// Tweedie power; profiled over [1.05, 1.95] when empty.
  std::optional<double> power;
  ProfileOptions profile;
  int qq_replicates = 100;
  int mv_bins = 20;
};

/// Fits one model; for the Tweedie model the power is profiled unless given.
/// Warnings from the profile are appended to `notes` when it is non-null.
inline FittedModel fit_model(ModelKind kind, const Dataset& data, const CompareOptions& options = {},
                             std::vector<std::string>* notes = nullptr) {
  switch (kind) {
    case ModelKind::tweedie: {
      if (options.power) return FittedModel::tweedie(irls_fit(data, Family::tweedie(*options.power), Link::log));
      auto prof = profile_fit(data, Link::log, options.profile);
      if (notes)
        for (auto& w : prof.warnings) notes->push_back("tweedie: " + w);
      return FittedModel::tweedie(std::move(prof.fit_at_p_hat));
    }
    case ModelKind::twopart: return FittedModel::twopart(fit_twopart(data));
    case ModelKind::tobit: return FittedModel::tobit(tobit_fit(data));
  }
  throw DomainError("unknown model");
}

struct ModelReport {
  std::string name;
  double loglik = 0.0;
  double dispersion = 0.0;
  double rmse = 0.0;
  /// Full-data fit, used for the log-likelihood, dispersion and Q-Q table.
  std::optional<FittedModel> fit;
  QqTable qq;
  Eigen::VectorXd test_predictions;
};

struct ComparisonReport {
  DatasetSummary summary;
  SplitSpec split;
  std::vector<ModelReport> models;
  Eigen::VectorXd test_truth;
  MeanVarianceTable mean_variance;
  std::vector<std::string> notes;
};

inline const std::vector<ModelKind>& all_models() {
  static const std::vector<ModelKind> kinds{ModelKind::tweedie, ModelKind::twopart, ModelKind::tobit};
  return kinds;
}

/// Test-set RMSE of each model after fitting on the training rows of a
/// seeded split, in the order of all_models().
inline std::vector<double> split_rmse(const Dataset& data, const SplitSpec& spec, const CompareOptions& options = {}) {
  const auto parts = split(data, spec);
  std::vector<double> out;
  for (auto kind : all_models()) {
    const auto model = fit_model(kind, parts.train, options);
    out.push_back(rmse(model.predict_all(parts.test.design()), parts.test.response()));
  }
  return out;
}

/// Fits all three models on the full data (log-likelihood, dispersion, Q-Q,
/// mean-variance bins) and on the training rows of `spec` (test RMSE).
inline ComparisonReport compare(const Dataset& data, const SplitSpec& spec, const CompareOptions& options = {}) {
  ComparisonReport report;
  report.summary = summarize(data);
  report.split = spec;
  const auto parts = split(data, spec);
  report.test_truth = parts.test.response();

  std::uint64_t stream = 0;
  for (auto kind : all_models()) {
    ModelReport m;
    m.name = to_string(kind);
    m.fit = fit_model(kind, data, options, &report.notes);
    m.loglik = m.fit->log_likelihood();
    m.dispersion = m.fit->dispersion();
    m.qq = qq_table(data, *m.fit, default_qq_levels(), options.qq_replicates, spec.seed * 31 + ++stream);

    const auto trained = fit_model(kind, parts.train, options);
    m.test_predictions = trained.predict_all(parts.test.design());
    m.rmse = rmse(m.test_predictions, parts.test.response());
    report.models.push_back(std::move(m));
  }
  report.mean_variance = mean_variance_bins(data, report.models.front().fit->tweedie_fit(), options.mv_bins);
  return report;
}

}  // namespace tweedie
