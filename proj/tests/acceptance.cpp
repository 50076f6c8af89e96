// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit status 1 if
// any criterion fails.
//
// Criteria 7 and 8 need the RAND HIE extract (3301 rows, response meddol).
// It is looked up in $RANDHIE_CSV, then data/randhie.csv under the source
// tree. Without it they are skipped and criterion 9 runs instead.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "simdata.hpp"
#include "tweedie/tweedie.hpp"

namespace {

using namespace tweedie;

struct Outcome {
  enum Status { pass, fail, skip } status = fail;
  std::string detail;
};

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Outcome::pass : Outcome::fail, detail}; }

std::string fmt(const char* format, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

const std::vector<double> kMu{0.5, 1.0, 5.0, 50.0, 200.0};
const std::vector<double> kPhi{0.5, 1.0, 10.0};
const std::vector<double> kPower{1.1, 1.5, 1.719, 1.9};

// 1. Series density against the brute-force Poisson-gamma mixture sum.
Outcome density_oracle() {
  double worst = 0.0;
  std::string where;
  for (double mu : kMu)
    for (double phi : kPhi)
      for (double p : kPower)
        for (double r : {0.01, 0.1, 1.0, 5.0, 20.0}) {
          const double z = r * mu;
          const double got = log_density(z, {mu, phi, p});
          const double want = oracle::brute_force_log_density(z, mu, phi, p);
          const double rel = std::abs(got - want) / std::abs(want);
          if (!(rel <= worst)) {
            worst = rel;
            where = fmt("mu=%g phi=%g p=%g z=%g", mu, phi, p, z);
          }
        }
  return verdict(worst <= 1e-8, fmt("max relative error %.2e over 300 points", worst) + " (at " + where + ")");
}

// 2. Zero mass plus integrated density.
Outcome normalization() {
  double worst = 0.0;
  for (double mu : kMu)
    for (double phi : kPhi)
      for (double p : kPower) {
        const TweedieParams params(mu, phi, p);
        const double upper = mu + 60.0 * std::sqrt(params.variance());
        const double total = zero_probability(params) + integrate_density(upper, params);
        worst = std::max(worst, std::abs(total - 1.0));
      }
  return verdict(worst <= 1e-6, fmt("max |P0 + integral - 1| = %.2e over 60 parameter sets", worst));
}

// 3. Sampler moments at (1, 1, 1.5).
Outcome sampler_moments() {
  const auto y = sample(TweedieParams(1.0, 1.0, 1.5), 1000000, 20240601);
  double zeros = 0, sum = 0, sum2 = 0;
  for (double v : y) {
    zeros += v == 0.0;
    sum += v;
  }
  const double n = static_cast<double>(y.size());
  const double mean = sum / n;
  for (double v : y) sum2 += (v - mean) * (v - mean);
  const double var = sum2 / (n - 1);
  const double zf = zeros / n;
  const bool ok = std::abs(zf - 0.1353) <= 0.001 && std::abs(mean - 1.0) <= 0.005 && std::abs(var - 1.0) <= 0.01;
  return verdict(ok, fmt("zero fraction %.5f, mean %.5f, variance %.5f", zf, mean, var));
}

// 4. Profile likelihood recovers (p, beta) over 100 seeded data sets.
Outcome recovery() {
  const int runs = 100;
  const Eigen::Vector3d beta(0.5, 0.3, -0.2);
  std::vector<char> good(runs, 0);
  std::vector<double> p_hat(runs, NAN);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < runs; r = next++) {
      const auto x = testing::normal_design(20000, 3, 1000 + 2 * r);
      const auto data = testing::tweedie_regression(x, beta, 2.0, 1.5, 1001 + 2 * r);
      try {
        const auto prof = profile_fit(data);
        p_hat[r] = prof.p_hat;
        bool ok = std::abs(prof.p_hat - 1.5) <= 0.05;
        for (int j = 0; j < 3; ++j)
          ok = ok && std::abs(prof.fit_at_p_hat.coefficients[j] - beta[j]) <= 3.0 * prof.fit_at_p_hat.standard_errors[j];
        good[r] = ok;
      } catch (const std::exception&) {
        good[r] = 0;
      }
    }
  };
  const unsigned threads = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const int count = static_cast<int>(std::count(good.begin(), good.end(), 1));
  const auto [lo, hi] = std::minmax_element(p_hat.begin(), p_hat.end());
  return verdict(count >= 95, fmt("%g of 100 runs recovered p and all beta (p_hat range %.4f..%.4f)", count, *lo, *hi));
}

// 5. Analytic gradients against central differences.
Outcome gradients() {
  const auto x = testing::normal_design(200, 3, 55);
  const auto data = testing::tweedie_regression(x, Eigen::Vector3d(1.0, 0.5, -0.5), 1.5, 1.6, 56);
  const Eigen::Vector3d at(0.9, 0.6, -0.4);
  const auto tw = tweedie_loglik_gradient(data, at, 1.5, 1.6);
  const auto tw_fd = oracle::central_gradient([&](const Eigen::VectorXd& b) { return tweedie_loglik_at(data, b, 1.5, 1.6); }, at);

  std::mt19937_64 rng(57);
  std::normal_distribution<double> e(0.0, 1.2);
  Eigen::VectorXd y = x * Eigen::Vector3d(0.3, 1.0, -0.8);
  for (auto& v : y) v = std::max(0.0, v + e(rng));
  const Dataset censored(y, x, testing::default_names(3));
  const Eigen::Vector4d theta(0.2, 0.9, -0.7, std::log(1.1));
  const auto tb = tobit::gradient(censored, theta);
  const auto tb_fd = oracle::central_gradient([&](const Eigen::VectorXd& t) { return tobit::loglik(censored, t); }, theta);

  double worst_tw = 0.0, worst_tb = 0.0;
  for (int j = 0; j < 3; ++j) worst_tw = std::max(worst_tw, std::abs(tw[j] - tw_fd[j]) / std::abs(tw_fd[j]));
  for (int j = 0; j < 4; ++j) worst_tb = std::max(worst_tb, std::abs(tb[j] - tb_fd[j]) / std::abs(tb_fd[j]));
  return verdict(worst_tw <= 1e-4 && worst_tb <= 1e-4,
                 fmt("max relative difference: tweedie %.2e, tobit %.2e (n=200)", worst_tw, worst_tb));
}

// 6. Intercept-only log-link fits and censor-free Tobit.
Outcome special_cases() {
  const auto x = testing::normal_design(500, 3, 60);
  const auto data = testing::tweedie_regression(x, Eigen::Vector3d(1.0, 0.5, -0.5), 1.5, 1.6, 61);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(500, 1);
  const Dataset flat(data.response(), ones, {"(Intercept)"});
  const double log_mean = std::log(data.response().mean());
  double worst_b0 = 0.0;
  for (double p : {1.1, 1.5, 1.719, 1.9})
    worst_b0 = std::max(worst_b0, std::abs(irls_fit(flat, Family::tweedie(p), Link::log).coefficients[0] - log_mean));
  const auto rows = positive_indices(data.response());
  const auto pos = flat.subset(rows);
  worst_b0 = std::max(worst_b0, std::abs(irls_fit(pos, Family::gamma(), Link::log).coefficients[0] -
                                         std::log(pos.response().mean())));

  const auto xo = testing::normal_design(300, 3, 62, 1.0);
  std::mt19937_64 rng(63);
  std::normal_distribution<double> e(0.0, 2.0);
  Eigen::VectorXd y = xo * Eigen::Vector3d(40.0, 3.0, -2.0);
  for (auto& v : y) v += e(rng);
  const auto fit = tobit_fit(Dataset(y, xo, testing::default_names(3)));
  const auto ols = oracle::ols(xo, y);
  double worst_ols = 0.0;
  for (int j = 0; j < 3; ++j) worst_ols = std::max(worst_ols, std::abs(fit.coefficients[j] - ols[j]) / std::abs(ols[j]));
  const bool uncensored = y.minCoeff() > 0.0;
  return verdict(worst_b0 <= 1e-10 && worst_ols <= 1e-6 && uncensored,
                 fmt("max |b0 - log mean| = %.2e; tobit vs OLS max relative %.2e", worst_b0, worst_ols));
}

// --- Dataset-gated criteria -----------------------------------------------------

std::optional<std::string> dataset_path() {
  if (const char* env = std::getenv("RANDHIE_CSV"); env && *env) return std::string(env);
  const auto local = std::filesystem::path(TWEEDIE_SOURCE_DIR) / "data" / "randhie.csv";
  if (std::filesystem::exists(local)) return local.string();
  return std::nullopt;
}

struct Row {
  const char* name;
  double tobit, tobit_se, tweedie, tweedie_se, binary, binary_se, gamma, gamma_se;
};

// Published estimates and standard errors for the extract, in design order.
const Row kReference[] = {
    {"(Intercept)", -212.276, 118.391, 4.253, 0.543, -0.732, 0.405, 4.972, 0.522},
    {"age", 2.274, 1.135, 0.007, 0.005, 0.015, 0.005, 0.004, 0.005},
    {"disea", 6.319, 1.695, 0.015, 0.008, 0.044, 0.008, 0.008, 0.007},
    {"physlm", 214.712, 34.484, 0.688, 0.150, 0.321, 0.156, 0.664, 0.145},
    {"logc", -23.994, 17.530, -0.046, 0.079, -0.184, 0.065, -0.016, 0.076},
    {"idp", -7.057, 34.130, 0.051, 0.155, -0.061, 0.130, 0.057, 0.149},
    {"lpi", -1.806, 5.612, -0.028, 0.025, 0.005, 0.022, -0.028, 0.024},
    {"fmde", 1.728, 10.453, 0.018, 0.047, 0.007, 0.039, 0.018, 0.045},
    {"linc", 18.113, 11.951, 0.066, 0.055, 0.096, 0.038, 0.032, 0.055},
    {"lfam", -12.640, 23.245, -0.013, 0.106, 0.054, 0.088, -0.008, 0.101},
    {"female", 138.240, 26.417, 0.397, 0.120, 0.904, 0.104, 0.270, 0.112},
    {"black", -166.908, 39.181, -0.348, 0.179, -1.040, 0.128, -0.112, 0.174},
    {"educdec", 0.150, 4.556, -0.011, 0.021, 0.044, 0.018, -0.017, 0.019},
    {"hlthg", -17.324, 25.583, -0.067, 0.116, 0.102, 0.100, -0.082, 0.108},
};

bool near_rel(double got, double want, double rel) { return std::abs(got - want) <= rel * std::abs(want); }

// 7. Summary, power, log-likelihoods and coefficients on the extract.
Outcome published_estimates(const Dataset& data) {
  std::vector<std::string> failures;
  const auto s = summarize(data);
  if (s.n != 3301 || std::abs(s.zero_fraction - 0.181) > 0.0005 || std::abs(s.mean - 206.80) > 0.005 || s.max != 17730.0)
    failures.push_back(fmt("summary (%g, %.4f, %.3f, %g)", s.n, s.zero_fraction, s.mean, s.max));

  const auto prof = profile_fit(data);
  const auto tp = fit_twopart(data);
  const auto tb = tobit_fit(data);
  if (std::abs(prof.p_hat - 1.719) > 0.01) failures.push_back(fmt("p_hat %.4f", prof.p_hat));
  if (!near_rel(prof.fit_at_p_hat.log_likelihood, -18874.42, 0.005))
    failures.push_back(fmt("tweedie loglik %.2f", prof.fit_at_p_hat.log_likelihood));
  if (!near_rel(tb.log_likelihood, -21809.21, 0.005)) failures.push_back(fmt("tobit loglik %.2f", tb.log_likelihood));
  if (!near_rel(tp.binary_part.log_likelihood, -1371.20, 0.005))
    failures.push_back(fmt("binomial loglik %.2f", tp.binary_part.log_likelihood));
  if (!near_rel(tp.positive_part.log_likelihood, -17225.84, 0.005))
    failures.push_back(fmt("gamma loglik %.2f", tp.positive_part.log_likelihood));

  int off = 0;
  std::string first_off;
  auto check = [&](const char* model, const char* name, double got, double want, double se) {
    const double tol = std::min(0.02 * std::abs(want), 0.2 * se);
    if (std::abs(got - want) > tol) {
      if (off++ == 0) first_off = std::string(model) + " " + name + fmt(" %.4f vs %.3f", got, want);
    }
  };
  for (Eigen::Index j = 0; j < 14; ++j) {
    const auto& r = kReference[j];
    check("tobit", r.name, tb.coefficients[j], r.tobit, r.tobit_se);
    check("tweedie", r.name, prof.fit_at_p_hat.coefficients[j], r.tweedie, r.tweedie_se);
    check("binomial", r.name, tp.binary_part.coefficients[j], r.binary, r.binary_se);
    check("gamma", r.name, tp.positive_part.coefficients[j], r.gamma, r.gamma_se);
  }
  if (off > 0) failures.push_back(std::to_string(off) + " of 56 coefficients outside tolerance, first: " + first_off);

  std::string detail = fmt("p_hat %.4f, logliks tweedie %.2f tobit %.2f", prof.p_hat, prof.fit_at_p_hat.log_likelihood,
                           tb.log_likelihood) +
                       fmt(", binomial %.2f gamma %.2f", tp.binary_part.log_likelihood, tp.positive_part.log_likelihood);
  for (const auto& f : failures) detail += "; " + f;
  return verdict(failures.empty(), detail);
}

// 8. Test RMSE averaged over 20 seeded 2801/500 splits.
Outcome prediction_comparison(const Dataset& data) {
  std::vector<double> mean(3, 0.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto r = split_rmse(data, {2801, 500, seed});
    for (int m = 0; m < 3; ++m) mean[m] += r[m] / 20.0;
  }
  const double tw = mean[0], tp = mean[1], tb = mean[2];
  const bool ok = std::abs(tw - tp) <= 0.02 * std::min(tw, tp) && tw < tb && tp < tb && near_rel(tw, 467.67, 0.10) &&
                  near_rel(tp, 467.71, 0.10) && near_rel(tb, 471.58, 0.10);
  return verdict(ok, fmt("mean test RMSE tweedie %.2f, twopart %.2f, tobit %.2f", tw, tp, tb));
}

// 9. Mean-variance slope on data simulated at p = 1.719.
Outcome simulated_mean_variance() {
  const auto x = testing::normal_design(20000, 3, 70, 1.0);
  const auto data = testing::tweedie_regression(x, Eigen::Vector3d(3.0, 0.8, -0.6), 9.518, 1.719, 71);
  const auto fit = irls_fit(data, Family::tweedie(1.719), Link::log);
  const double slope = mean_variance_slope(mean_variance_bins(data, fit));
  return verdict(std::abs(slope - 1.719) <= 0.15, fmt("log-log slope %.4f across 20 bins", slope));
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](const char* id, const char* title, const std::function<Outcome()>& run) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {Outcome::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Outcome::pass ? "PASS" : o.status == Outcome::fail ? "FAIL" : "SKIP";
    if (o.status == Outcome::fail) ++failed;
    std::printf("%s  %s  %s: %s [%.1f s]\n", tag, id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report("1", "density matches brute-force mixture sum", density_oracle);
  report("2", "zero mass plus integral equals one", normalization);
  report("3", "sampler moments", sampler_moments);
  report("4", "parameter recovery by profile likelihood", recovery);
  report("5", "analytic gradients", gradients);
  report("6", "special-case reductions", special_cases);

  const int core_failed = failed;
  const auto path = dataset_path();
  std::optional<Dataset> data;
  std::string load_error;
  if (path) {
    try {
      data = load_csv(*path, SchemaConfig{});
    } catch (const std::exception& e) {
      load_error = e.what();
    }
  }
  if (data) {
    report("7", "published estimates on the RAND HIE extract", [&] { return published_estimates(*data); });
    report("8", "test RMSE over 20 splits", [&] { return prediction_comparison(*data); });
    report("9", "fallback suite", [] { return Outcome{Outcome::skip, "dataset present; criteria 7 and 8 ran"}; });
  } else {
    const std::string why = path ? "dataset at " + *path + " unreadable: " + load_error : "RAND HIE extract not found";
    report("7", "published estimates on the RAND HIE extract",
           [&] { return Outcome{path ? Outcome::fail : Outcome::skip, why}; });
    report("8", "test RMSE over 20 splits", [&] { return Outcome{Outcome::skip, why}; });
    report("9", "fallback: criteria 1-6 plus simulated mean-variance slope", [&] {
      auto o = simulated_mean_variance();
      if (core_failed > 0)
        return Outcome{Outcome::fail, o.detail + "; " + std::to_string(core_failed) + " of criteria 1-6 failed"};
      return o;
    });
  }
  std::printf("%s\n", failed == 0 ? "acceptance: all criteria met" : "acceptance: FAILED");
  return failed == 0 ? 0 : 1;
}
