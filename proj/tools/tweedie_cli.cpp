// Command-line front end: fit, compare, simulate, summary.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tweedie/tweedie.hpp"

namespace {

using namespace tweedie;

enum Exit { ok = 0, usage = 1, data_error = 2, numerical = 3 };

struct Inputs {
  std::string data;
  std::string response = SchemaConfig{}.response;
  std::vector<std::string> covariates = SchemaConfig{}.covariates;
  bool drop_missing = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--data", data, "CSV file with a header row")->required()->check(CLI::ExistingFile);
    cmd->add_option("--response", response, "response column")->capture_default_str();
    cmd->add_option("--covariates", covariates, "covariate columns, comma separated")->delimiter(',');
    cmd->add_flag("--drop-missing", drop_missing, "skip rows with missing cells instead of failing");
  }

  Dataset load() const {
    SchemaConfig schema;
    schema.response = response;
    schema.covariates = covariates;
    schema.missing = drop_missing ? MissingPolicy::drop_rows : MissingPolicy::error;
    CsvLoadInfo info;
    auto d = load_csv(data, schema, &info);
    if (info.rows_dropped > 0)
      std::cerr << "dropped " << info.rows_dropped << " of " << info.rows_read << " rows with missing values\n";
    return d;
  }
};

std::optional<double> parse_power(const std::string& text) {
  if (text == "auto") return std::nullopt;
  double p = 0.0;
  if (!csv::parse_double(text, &p)) throw DomainError("--power must be 'auto' or a number, got '" + text + "'");
  if (!(p > 1.0 && p < 2.0)) throw DomainError("--power must lie in (1, 2)");
  return p;
}

void print_coefficients(const std::vector<std::string>& names, const Eigen::VectorXd& b, const Eigen::VectorXd& se) {
  for (Eigen::Index j = 0; j < b.size(); ++j)
    std::printf("  %-14s %12.5f  (%.5f)\n", names[j].c_str(), b[j], se[j]);
}

void print_fit(const FittedModel& model) {
  std::printf("model: %s\n", model.name().c_str());
  switch (model.kind()) {
    case ModelKind::tweedie: {
      const auto& f = model.tweedie_fit();
      std::printf("power: %.4f  phi: %.4f\n", f.family.power(), f.dispersion_mle);
      print_coefficients(f.names, f.coefficients, f.standard_errors);
      break;
    }
    case ModelKind::twopart: {
      const auto& f = model.twopart_fit();
      std::printf("binary part (logit), log-likelihood %.2f\n", f.binary_part.log_likelihood);
      print_coefficients(f.binary_part.names, f.binary_part.coefficients, f.binary_part.standard_errors);
      std::printf("positive part (gamma, log), phi %.4f, log-likelihood %.2f\n", f.positive_part.dispersion_mle,
                  f.positive_part.log_likelihood);
      print_coefficients(f.positive_part.names, f.positive_part.coefficients, f.positive_part.standard_errors);
      break;
    }
    case ModelKind::tobit: {
      const auto& f = model.tobit_fit();
      std::printf("sigma: %.4f  (%.4f)\n", f.sigma, f.sigma_se);
      print_coefficients(f.names, f.coefficients, f.standard_errors);
      break;
    }
  }
  std::printf("log-likelihood: %.2f\n", model.log_likelihood());
}

ModelKind parse_model(const std::string& name) {
  for (auto k : all_models())
    if (to_string(k) == name) return k;
  throw DomainError("unknown model '" + name + "'");
}

int run(int argc, char** argv) {
  CLI::App app{"Tweedie, two-part and Tobit regression for semicontinuous outcomes"};
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit one model and write fit_<model>.json");
  Inputs fit_in;
  fit_in.add_to(fit_cmd);
  std::string model_name, power_text = "auto", fit_out;
  fit_cmd->add_option("--model", model_name, "tweedie, twopart or tobit")
      ->required()
      ->check(CLI::IsMember({"tweedie", "twopart", "tobit"}));
  fit_cmd->add_option("--power", power_text, "Tweedie power in (1, 2), or auto to profile it")->capture_default_str();
  fit_cmd->add_option("--out", fit_out, "output directory")->required();

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "fit all models, compare fit and test error, write the report");
  Inputs cmp_in;
  cmp_in.add_to(cmp_cmd);
  SplitSpec spec{2801, 500, 42};
  std::string cmp_power = "auto", cmp_out;
  int replicates = 100, splits = 1;
  cmp_cmd->add_option("--train-n", spec.train_n, "training rows")->capture_default_str();
  cmp_cmd->add_option("--test-n", spec.test_n, "test rows")->capture_default_str();
  cmp_cmd->add_option("--seed", spec.seed, "seed for the split and all simulation")->capture_default_str();
  cmp_cmd->add_option("--power", cmp_power, "Tweedie power, or auto")->capture_default_str();
  cmp_cmd->add_option("--replicates", replicates, "simulated replicates per Q-Q curve")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--splits", splits, "also average test RMSE over this many splits (seeds seed, seed+1, ...)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--out", cmp_out, "output directory")->required();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "draw a Tweedie sample and write it as a one-column CSV");
  double mu = 1.0, phi = 1.0, p = 1.5;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string sim_out;
  sim_cmd->add_option("--mu", mu, "mean")->required();
  sim_cmd->add_option("--phi", phi, "dispersion")->required();
  sim_cmd->add_option("--p", p, "power in (1, 2)")->required();
  sim_cmd->add_option("--n", n, "sample size")->required();
  sim_cmd->add_option("--seed", seed, "random seed")->capture_default_str();
  sim_cmd->add_option("--out", sim_out, "output CSV path")->required();

  // summary
  auto* sum_cmd = app.add_subcommand("summary", "print n, zero fraction, mean and maximum of the response");
  std::string sum_data, sum_response = SchemaConfig{}.response;
  sum_cmd->add_option("--data", sum_data, "CSV file")->required()->check(CLI::ExistingFile);
  sum_cmd->add_option("--response", sum_response, "response column")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  if (*fit_cmd) {
    const auto data = fit_in.load();
    CompareOptions options;
    options.power = parse_power(power_text);
    const auto kind = parse_model(model_name);
    Json j;
    std::vector<std::string> notes;
    std::optional<FittedModel> model;
    if (kind == ModelKind::tweedie && !options.power) {
      auto prof = profile_fit(data, Link::log, options.profile);
      j = to_json(FittedModel::tweedie(prof.fit_at_p_hat));
      j["profile"] = to_json(prof);
      model = FittedModel::tweedie(std::move(prof.fit_at_p_hat));
      notes = prof.warnings;
    } else {
      model = fit_model(kind, data, options, &notes);
      j = to_json(*model);
    }
    for (const auto& w : notes) std::cerr << "warning: " << w << "\n";
    ensure_directory(fit_out);
    write_text(std::filesystem::path(fit_out) / ("fit_" + model_name + ".json"), j.dump(2) + "\n");
    print_fit(*model);
  } else if (*cmp_cmd) {
    const auto data = cmp_in.load();
    CompareOptions options;
    options.power = parse_power(cmp_power);
    options.qq_replicates = replicates;
    const auto report = compare(data, spec, options);
    write_report(report, cmp_out);
    std::printf("%-8s %14s %10s %10s\n", "model", "loglik", "disp", "rmse");
    for (const auto& m : report.models)
      std::printf("%-8s %14.2f %10.4f %10.2f\n", m.name.c_str(), m.loglik, m.dispersion, m.rmse);
    for (const auto& note : report.notes) std::cerr << "note: " << note << "\n";
    if (splits > 1) {
      std::vector<double> mean(all_models().size(), 0.0);
      Json runs = Json::array();
      for (int s = 0; s < splits; ++s) {
        SplitSpec each = spec;
        each.seed = spec.seed + static_cast<std::uint64_t>(s);
        const auto r = split_rmse(data, each, options);
        Json row{{"seed", each.seed}};
        for (std::size_t m = 0; m < r.size(); ++m) {
          mean[m] += r[m] / splits;
          row[to_string(all_models()[m])] = r[m];
        }
        runs.push_back(std::move(row));
      }
      Json out{{"splits", runs}, {"mean", Json::object()}};
      std::printf("mean test RMSE over %d splits:", splits);
      for (std::size_t m = 0; m < mean.size(); ++m) {
        out["mean"][to_string(all_models()[m])] = mean[m];
        std::printf(" %s %.2f", to_string(all_models()[m]).c_str(), mean[m]);
      }
      std::printf("\n");
      write_text(std::filesystem::path(cmp_out) / "rmse_splits.json", out.dump(2) + "\n");
    }
  } else if (*sim_cmd) {
    const auto y = sample(TweedieParams(mu, phi, p), n, seed);
    std::string text = "y\n";
    for (double v : y) text += csv::format_double(v) + "\n";
    write_text(sim_out, text);
  } else if (*sum_cmd) {
    SchemaConfig schema;
    schema.response = sum_response;
    schema.covariates.clear();
    const auto s = summarize(load_csv(sum_data, schema));
    std::printf("n: %ld\nzero_fraction: %.4f\nmean: %.2f\nmax: %.2f\n", static_cast<long>(s.n), s.zero_fraction, s.mean,
                s.max);
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tweedie::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const tweedie::OutputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage;
  } catch (const tweedie::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return data_error;
  } catch (const tweedie::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return numerical;
  }
}
