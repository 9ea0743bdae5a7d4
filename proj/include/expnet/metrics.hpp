#pragma once

#include <cstddef>
#include <string_view>
#include <utility>

#include "expnet/types.hpp"

namespace expnet {

// Error functionals of a fitted parameter vector against the truth.
// "Shift adjusted" variants minimise over the identification class
// (alpha* + x, beta* - x), which generates the same distribution.

/// (mean(alpha_hat - alpha*), mean(beta_hat - beta*)).
std::pair<double, double> mean_shifts(const NodeParams& fit, const NodeParams& truth);

/// (1/n) sum_i (|alpha_hat_i - alpha*_i|^2 + |beta_hat_i - beta*_i|^2).
double mse_bound(const NodeParams& fit, const NodeParams& truth);

/// max_i (|alpha_hat_i - alpha*_i|^2 + |beta_hat_i - beta*_i|^2).
double uniform_bound(const NodeParams& fit, const NodeParams& truth);

/// Minimum over x of (mse_bound, uniform_bound) against (alpha* + x, beta* - x).
/// The mse minimiser is x = (d_alpha - d_beta) / 2; the uniform objective is a
/// maximum of convex parabolas and is minimised by ternary search.
std::pair<double, double> shift_adjusted_errors(const NodeParams& fit, const NodeParams& truth);

struct ErrorReport {
  double delta_alpha = 0.0;
  double delta_beta = 0.0;
  double mse_bound = 0.0;
  double uniform_bound = 0.0;
  double shift_adjusted_mse = 0.0;
  double shift_adjusted_uniform = 0.0;
  double rho_error_sq = 0.0;
};

ErrorReport error_report(const NodeParams& fit, double fit_rho, const NodeParams& truth,
                         double truth_rho);

enum class RateKind { weak_l2, uniform_cont, uniform_disc, expnet_uniform };

std::string_view to_string(RateKind kind);
RateKind parse_rate_kind(std::string_view name);  // throws std::invalid_argument

/// Convergence-rate shapes with unit constants (for slope comparison only):
///   weak_l2         n^(1/2)  mu^(-1/2) (ln n)^2
///   uniform_cont    n^(-1/4) mu^(-5/4) (ln n)^2
///   uniform_disc    n^(-1/3) mu^(-1/3) (ln n)^(8/3)
///   expnet_uniform  n^(-1/8) (ln n)^(1/2)
double rate_predictor(RateKind kind, double n, double mu);

}  // namespace expnet
