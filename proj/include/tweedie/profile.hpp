#pragma once

// Profile likelihood for the Tweedie variance power.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tweedie/dataset.hpp"
#include "tweedie/error.hpp"
#include "tweedie/glm.hpp"
#include "tweedie/optim.hpp"

namespace tweedie {

struct ProfileOptions {
  double grid_lo = 1.05;
  double grid_hi = 1.95;
  double grid_step = 0.05;
  /// Golden-section refinement stops once the bracket is narrower than this.
  double tolerance = 1e-3;
  GlmOptions glm;
};

struct ProfilePoint {
  double p = 0.0;
  double loglik = 0.0;
  double phi = 0.0;
};

struct ProfileResult {
  std::vector<double> p_grid;
  /// Profile log-likelihood per grid point; NaN where the fit failed.
  std::vector<double> loglik_at;
  /// Every successful evaluation, grid and refinement, in evaluation order.
  std::vector<ProfilePoint> evaluations;
  double p_hat = 0.0;
  double phi_hat = 0.0;
  FittedGlm fit_at_p_hat;
  std::vector<std::string> warnings;
};

/// Maximizes the Tweedie log-likelihood over p in [grid_lo, grid_hi]: a
/// coarse grid, then golden-section refinement around the best grid point.
/// At each p the coefficients come from IRLS and phi from its ML equation.
inline ProfileResult profile_fit(const Dataset& data, Link l = Link::log, const ProfileOptions& options = {}) {
  const auto& y = data.response();
  const auto zeros = (y.array() == 0.0).count();
  if (zeros == 0) throw DataError("power profile needs at least one zero response");
  if (zeros == y.size()) throw DataError("power profile needs at least one positive response");
  if (l != Link::log) throw DomainError("power profile supports the log link only");

  ProfileResult out;
  std::optional<FittedGlm> best_fit;
  double best_p = 0.0;
  double best_ll = -INFINITY;

  auto evaluate = [&](double p) -> double {
    try {
      auto fit = irls_fit(data, Family::tweedie(p), l, std::nullopt, options.glm);
      out.evaluations.push_back({p, fit.log_likelihood, fit.dispersion_mle});
      // Ties go to the smaller p.
      if (fit.log_likelihood > best_ll || (fit.log_likelihood == best_ll && p < best_p)) {
        best_ll = fit.log_likelihood;
        best_p = p;
        best_fit = std::move(fit);
      }
      return out.evaluations.back().loglik;
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "p=" << p << " skipped: " << e.what();
      out.warnings.push_back(os.str());
      return NAN;
    }
  };

  const int steps = static_cast<int>(std::lround((options.grid_hi - options.grid_lo) / options.grid_step));
  for (int i = 0; i <= steps; ++i) {
    const double p = options.grid_lo + i * options.grid_step;
    out.p_grid.push_back(p);
    out.loglik_at.push_back(evaluate(p));
  }
  if (!best_fit) throw NumericalError("power profile: no grid point could be fitted");

  const double lo = std::max(options.grid_lo, best_p - options.grid_step);
  const double hi = std::min(options.grid_hi, best_p + options.grid_step);
  optim::golden_section_maximize(
      [&](double p) {
        const double v = evaluate(p);
        return std::isnan(v) ? -INFINITY : v;
      },
      lo, hi, options.tolerance, [](double, double) {});

  out.p_hat = best_p;
  out.phi_hat = best_fit->dispersion_mle;
  out.fit_at_p_hat = std::move(*best_fit);

  if (out.p_hat - options.grid_lo < options.tolerance || options.grid_hi - out.p_hat < options.tolerance) {
    std::ostringstream os;
    os << "estimated power " << out.p_hat << " lies on the search boundary [" << options.grid_lo << ", "
       << options.grid_hi << "]";
    out.warnings.push_back(os.str());
  }
  return out;
}

}  // namespace tweedie
