#pragma once

// Serialization of fits and comparison reports: JSON, CSV tables and SVG
// figures.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tweedie/csv.hpp"
#include "tweedie/error.hpp"
#include "tweedie/eval.hpp"
#include "tweedie/svg.hpp"

namespace tweedie {

using Json = nlohmann::ordered_json;

namespace report_detail {

inline Json coefficient_table(const std::vector<std::string>& names, const Eigen::VectorXd& estimate,
                              const Eigen::VectorXd& se) {
  Json rows = Json::array();
  for (Eigen::Index j = 0; j < estimate.size(); ++j)
    rows.push_back({{"name", names[j]}, {"estimate", estimate[j]}, {"std_error", se[j]}});
  return rows;
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace report_detail

inline Json to_json(const FittedGlm& fit) {
  Json j;
  j["family"] = fit.family.name();
  if (fit.family.kind() == Family::Kind::tweedie) j["power"] = fit.family.power();
  j["link"] = to_string(fit.link);
  j["coefficients"] = report_detail::coefficient_table(fit.names, fit.coefficients, fit.standard_errors);
  j["dispersion_pearson"] = fit.dispersion;
  j["dispersion_mle"] = fit.dispersion_mle;
  j["log_likelihood"] = fit.log_likelihood;
  j["deviance"] = fit.deviance;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  return j;
}

inline Json to_json(const TwoPartFit& fit) {
  Json j;
  j["binary_part"] = to_json(fit.binary_part);
  j["positive_part"] = to_json(fit.positive_part);
  j["positive_rows"] = fit.positive_rows;
  j["log_likelihood"] = fit.combined_loglik;
  return j;
}

inline Json to_json(const TobitFit& fit) {
  Json j;
  j["coefficients"] = report_detail::coefficient_table(fit.names, fit.coefficients, fit.standard_errors);
  j["sigma"] = fit.sigma;
  j["sigma_std_error"] = fit.sigma_se;
  j["log_likelihood"] = fit.log_likelihood;
  j["standardized_gradient"] = fit.standardized_gradient;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  return j;
}

inline Json to_json(const FittedModel& model) {
  Json j;
  j["model"] = model.name();
  switch (model.kind()) {
    case ModelKind::tweedie: j.update(to_json(model.tweedie_fit())); break;
    case ModelKind::twopart: j.update(to_json(model.twopart_fit())); break;
    case ModelKind::tobit: j.update(to_json(model.tobit_fit())); break;
  }
  return j;
}

inline Json to_json(const ProfileResult& profile) {
  Json j;
  j["p_hat"] = profile.p_hat;
  j["phi_hat"] = profile.phi_hat;
  Json evals = Json::array();
  for (const auto& e : profile.evaluations) evals.push_back({{"p", e.p}, {"log_likelihood", e.loglik}, {"phi", e.phi}});
  j["evaluations"] = std::move(evals);
  j["warnings"] = profile.warnings;
  return j;
}

inline Json to_json(const ComparisonReport& r) {
  using report_detail::to_std;
  Json j;
  j["summary"] = {{"n", r.summary.n}, {"zero_fraction", r.summary.zero_fraction}, {"mean", r.summary.mean},
                  {"max", r.summary.max}};
  j["split"] = {{"train_n", r.split.train_n}, {"test_n", r.split.test_n}, {"seed", r.split.seed}};
  Json models = Json::array();
  for (const auto& m : r.models) {
    Json e;
    e["name"] = m.name;
    e["log_likelihood"] = m.loglik;
    e["dispersion"] = m.dispersion;
    e["test_rmse"] = m.rmse;
    if (m.fit) e["fit"] = to_json(*m.fit);
    e["qq"] = {{"levels", m.qq.levels}, {"empirical", m.qq.empirical}, {"model", m.qq.model}};
    models.push_back(std::move(e));
  }
  j["models"] = std::move(models);
  const auto& mv = r.mean_variance;
  j["mean_variance"] = {{"phi", mv.phi},
                        {"reference_powers", mv.reference_powers},
                        {"bin_mean", mv.bin_mean},
                        {"bin_variance", mv.bin_variance},
                        {"bin_size", mv.bin_size}};
  j["notes"] = r.notes;
  return j;
}

// --- Files ------------------------------------------------------------------------------

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot write '" + path.string() + "'");
  out << text;
  out.close();
  if (!out) throw OutputError("write to '" + path.string() + "' failed");
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw OutputError("cannot create directory '" + dir.string() + "'");
}

inline std::string qq_csv(const QqTable& qq) {
  std::string out = "level,empirical,model\n";
  for (std::size_t i = 0; i < qq.levels.size(); ++i)
    out += csv::format_double(qq.levels[i]) + ',' + csv::format_double(qq.empirical[i]) + ',' +
           csv::format_double(qq.model[i]) + '\n';
  return out;
}

inline std::string prediction_csv(const Eigen::VectorXd& truth, const Eigen::VectorXd& predicted) {
  std::string out = "observed,predicted\n";
  for (Eigen::Index i = 0; i < truth.size(); ++i)
    out += csv::format_double(truth[i]) + ',' + csv::format_double(predicted[i]) + '\n';
  return out;
}

inline std::string mean_variance_csv(const MeanVarianceTable& mv) {
  std::string out = "bin,size,mean,variance";
  for (double p : mv.reference_powers) out += ",reference_p" + csv::format_double(p);
  out += '\n';
  for (std::size_t b = 0; b < mv.bin_mean.size(); ++b) {
    out += std::to_string(b + 1) + ',' + std::to_string(mv.bin_size[b]) + ',' + csv::format_double(mv.bin_mean[b]) +
           ',' + csv::format_double(mv.bin_variance[b]);
    for (double p : mv.reference_powers) out += ',' + csv::format_double(mv.reference(mv.bin_mean[b], p));
    out += '\n';
  }
  return out;
}

inline const std::string& model_color(std::size_t i) {
  static const std::vector<std::string> colors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  return colors[i % colors.size()];
}

inline svg::Plot qq_plot(const ComparisonReport& r) {
  svg::Plot plot;
  plot.title = "Q-Q: empirical vs model quantiles";
  plot.x_label = "empirical quantile";
  plot.y_label = "model quantile";
  plot.diagonal = true;
  for (std::size_t i = 0; i < r.models.size(); ++i)
    plot.series.push_back({r.models[i].name, model_color(i), r.models[i].qq.empirical, r.models[i].qq.model});
  return plot;
}

/// Predicted against observed test responses. Both axes stop at the 99th
/// percentile of the observed values; points beyond are counted, not drawn.
inline svg::Plot prediction_plot(const ComparisonReport& r) {
  svg::Plot plot;
  plot.title = "Test set: predicted vs observed";
  plot.x_label = "observed";
  plot.y_label = "predicted";
  plot.diagonal = true;
  std::vector<double> truth = report_detail::to_std(r.test_truth);
  double limit = 1.0;
  if (!truth.empty()) {
    std::vector<double> sorted = truth;
    std::sort(sorted.begin(), sorted.end());
    limit = std::max(sorted_quantile(sorted, 0.99), 1e-12);
  }
  plot.x_range = {0.0, limit};
  plot.y_range = {0.0, limit};
  for (std::size_t i = 0; i < r.models.size(); ++i) {
    const auto pred = report_detail::to_std(r.models[i].test_predictions);
    std::size_t hidden = 0;
    for (std::size_t k = 0; k < std::min(pred.size(), truth.size()); ++k)
      if (truth[k] > limit || pred[k] > limit) ++hidden;
    plot.series.push_back({r.models[i].name, model_color(i), truth, pred});
    plot.footnotes.push_back(r.models[i].name + ": " + std::to_string(hidden) + " points beyond the axis limits not shown");
  }
  return plot;
}

inline svg::Plot mean_variance_plot(const MeanVarianceTable& mv) {
  svg::Plot plot;
  plot.title = "Mean-variance by fitted-mean bin";
  plot.x_label = "bin mean of fitted values";
  plot.y_label = "bin variance of response";
  plot.log_x = plot.log_y = true;
  plot.series.push_back({"observed", "#000000", mv.bin_mean, mv.bin_variance});
  for (std::size_t i = 0; i < mv.reference_powers.size(); ++i) {
    const double p = mv.reference_powers[i];
    std::vector<double> ref;
    for (double m : mv.bin_mean) ref.push_back(mv.reference(m, p));
    plot.series.push_back({"phi mu^" + svg::detail::tick_label(p), model_color(i), mv.bin_mean, ref, true});
  }
  return plot;
}

/// Writes report.json, qq_<model>.csv, pred_<model>.csv, meanvar.csv and the
/// three figures into `dir`, creating it if needed.
inline void write_report(const ComparisonReport& r, const std::filesystem::path& dir) {
  ensure_directory(dir);
  write_text(dir / "report.json", to_json(r).dump(2) + "\n");
  for (const auto& m : r.models) {
    write_text(dir / ("qq_" + m.name + ".csv"), qq_csv(m.qq));
    write_text(dir / ("pred_" + m.name + ".csv"), prediction_csv(r.test_truth, m.test_predictions));
  }
  write_text(dir / "meanvar.csv", mean_variance_csv(r.mean_variance));
  write_text(dir / "fig_qq.svg", svg::render(qq_plot(r)));
  write_text(dir / "fig_pred.svg", svg::render(prediction_plot(r)));
  write_text(dir / "fig_meanvar.svg", svg::render(mean_variance_plot(r.mean_variance)));
}

}  // namespace tweedie
