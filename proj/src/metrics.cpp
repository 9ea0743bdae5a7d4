#include "expnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace expnet {

namespace {

void check_sizes(const NodeParams& fit, const NodeParams& truth) {
  if (fit.alpha.size() != truth.alpha.size() || fit.beta.size() != truth.beta.size() ||
      fit.alpha.size() != fit.beta.size() || fit.alpha.empty()) {
    throw std::invalid_argument("fit and truth must have equal, non-zero lengths");
  }
}

// Objective of the uniform bound at shift x: max_i (da_i - x)^2 + (db_i + x)^2.
double shifted_sup(const std::vector<double>& da, const std::vector<double>& db, double x) {
  double sup = 0.0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const double a = da[i] - x, b = db[i] + x;
    sup = std::max(sup, a * a + b * b);
  }
  return sup;
}

}  // namespace

std::pair<double, double> mean_shifts(const NodeParams& fit, const NodeParams& truth) {
  check_sizes(fit, truth);
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    sa += fit.alpha[i] - truth.alpha[i];
    sb += fit.beta[i] - truth.beta[i];
  }
  const double n = static_cast<double>(fit.size());
  return {sa / n, sb / n};
}

double mse_bound(const NodeParams& fit, const NodeParams& truth) {
  check_sizes(fit, truth);
  double s = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    const double a = fit.alpha[i] - truth.alpha[i], b = fit.beta[i] - truth.beta[i];
    s += a * a + b * b;
  }
  return s / static_cast<double>(fit.size());
}

double uniform_bound(const NodeParams& fit, const NodeParams& truth) {
  check_sizes(fit, truth);
  double sup = 0.0;
  for (std::size_t i = 0; i < fit.size(); ++i) {
    const double a = fit.alpha[i] - truth.alpha[i], b = fit.beta[i] - truth.beta[i];
    sup = std::max(sup, a * a + b * b);
  }
  return sup;
}

std::pair<double, double> shift_adjusted_errors(const NodeParams& fit, const NodeParams& truth) {
  check_sizes(fit, truth);
  const std::size_t n = fit.size();
  std::vector<double> da(n), db(n);
  for (std::size_t i = 0; i < n; ++i) {
    da[i] = fit.alpha[i] - truth.alpha[i];
    db[i] = fit.beta[i] - truth.beta[i];
  }

  const auto [dalpha, dbeta] = mean_shifts(fit, truth);
  const double x_mse = (dalpha - dbeta) / 2.0;
  double mse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = da[i] - x_mse, b = db[i] + x_mse;
    mse += a * a + b * b;
  }
  mse /= static_cast<double>(n);

  // Each parabola is minimised at (da_i - db_i) / 2, so the minimiser of
  // their maximum lies between the extreme vertices.
  double lo = (da[0] - db[0]) / 2.0, hi = lo;
  for (std::size_t i = 1; i < n; ++i) {
    const double v = (da[i] - db[i]) / 2.0;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  while (hi - lo > 1e-10) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (shifted_sup(da, db, m1) <= shifted_sup(da, db, m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  double uni = shifted_sup(da, db, 0.5 * (lo + hi));
  // Never report more than the unadjusted value (x = 0 is a candidate).
  uni = std::min(uni, shifted_sup(da, db, 0.0));
  mse = std::min(mse, mse_bound(fit, truth));
  return {mse, uni};
}

ErrorReport error_report(const NodeParams& fit, double fit_rho, const NodeParams& truth,
                         double truth_rho) {
  ErrorReport r;
  std::tie(r.delta_alpha, r.delta_beta) = mean_shifts(fit, truth);
  r.mse_bound = mse_bound(fit, truth);
  r.uniform_bound = uniform_bound(fit, truth);
  std::tie(r.shift_adjusted_mse, r.shift_adjusted_uniform) = shift_adjusted_errors(fit, truth);
  r.rho_error_sq = (fit_rho - truth_rho) * (fit_rho - truth_rho);
  return r;
}

std::string_view to_string(RateKind kind) {
  switch (kind) {
    case RateKind::weak_l2: return "weak_l2";
    case RateKind::uniform_cont: return "uniform_cont";
    case RateKind::uniform_disc: return "uniform_disc";
    case RateKind::expnet_uniform: return "expnet_uniform";
  }
  return "unknown";
}

RateKind parse_rate_kind(std::string_view name) {
  for (RateKind k : {RateKind::weak_l2, RateKind::uniform_cont, RateKind::uniform_disc,
                     RateKind::expnet_uniform}) {
    if (name == to_string(k)) return k;
  }
  throw std::invalid_argument("unknown rate kind '" + std::string(name) + "'");
}

double rate_predictor(RateKind kind, double n, double mu) {
  if (!(n >= 2.0)) throw std::invalid_argument("rate_predictor needs n >= 2");
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("rate_predictor needs mu in (0, 1]");
  const double ln = std::log(n);
  switch (kind) {
    case RateKind::weak_l2:
      return std::sqrt(n) * std::pow(mu, -0.5) * ln * ln;
    case RateKind::uniform_cont:
      return std::pow(n, -0.25) * std::pow(mu, -1.25) * ln * ln;
    case RateKind::uniform_disc:
      return std::pow(n, -1.0 / 3.0) * std::pow(mu, -1.0 / 3.0) * std::pow(ln, 8.0 / 3.0);
    case RateKind::expnet_uniform:
      return std::pow(n, -0.125) * std::sqrt(ln);
  }
  return 0.0;
}

}  // namespace expnet
