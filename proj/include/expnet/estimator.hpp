#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "expnet/network.hpp"
#include "expnet/types.hpp"

namespace expnet {

enum class SubSolver { newton, gradient };
enum class OuterCriterion { param_change, gradient_norm };

std::string_view to_string(SubSolver s);
std::string_view to_string(OuterCriterion c);

/// How the sparsity level is obtained: a known value or the plug-in edge
/// density of the observed network.
struct MuMode {
  enum class Kind { known, plugin };
  Kind kind = Kind::known;
  double value = 1.0;

  static MuMode known(double mu) { return {Kind::known, mu}; }
  static MuMode plugin() { return {Kind::plugin, 0.0}; }
};

struct FitConfig {
  SubSolver subsolver = SubSolver::newton;
  double outer_tol = 1e-3;
  double sub_tol = 1e-4;
  OuterCriterion outer_criterion = OuterCriterion::param_change;
  std::optional<double> step_size;  // gradient sub-solver; default 1 / (mu n)
  int max_outer_iters = 500;
  int max_sub_iters = 50;
  MuMode mu_mode = MuMode::known(1.0);
  bool fix_alpha1 = false;

  /// Newton node updates, stop on parameter change: outer 1e-3, sub 1e-4.
  static FitConfig newton_defaults();
  /// Gradient node updates, stop on gradient sup-norm: outer e, sub 1e-3.
  static FitConfig gradient_defaults(double outer_tol = 0.05);

  void validate() const;  // throws std::invalid_argument
};

struct FitResult {
  NodeParams params;
  double rho = 0.0;
  double mu_used = 1.0;
  int outer_iters = 0;
  bool converged = false;
  std::vector<double> residual_trace;
  std::vector<double> loglik_trace;
  int sub_cap_hits = 0;  // node/rho sub-solves that stopped at max_sub_iters
};

struct MuEstimate {
  double value = 0.0;
  bool empty = false;
};

/// Directed edge count / (n (n - 1)).
MuEstimate estimate_mu_bar(const Network& net);

/// Parameters held fixed while one coordinate block is updated.
struct FitState {
  NodeParams params;
  double rho = 0.0;
  double mu = 1.0;
};

struct NodeUpdate {
  double alpha = 0.0;
  double beta = 0.0;
  int iterations = 0;
  bool cap_hit = false;
};

struct RhoUpdate {
  double rho = 0.0;
  int iterations = 0;
  bool cap_hit = false;
};

/// Newton-Raphson on (alpha_i, beta_i) until max(|d alpha|, |d beta|) <
/// sub_tol. Singular or non-ascending steps fall back to a backtracked
/// gradient move. With pin_alpha only beta_i moves.
NodeUpdate newton_node_update(const Network& net, std::size_t i, const FitState& state,
                              double sub_tol, int max_sub_iters, bool pin_alpha = false);

/// Gradient ascent on (alpha_i, beta_i) with backtracking halving until the
/// gradient sup-norm drops below sub_tol.
NodeUpdate gradient_node_update(const Network& net, std::size_t i, const FitState& state,
                                double sub_tol, double step_size, int max_sub_iters,
                                bool pin_alpha = false);

/// One-dimensional update of rho on the total log-likelihood. For the
/// gradient sub-solver the step is step_size * 8 / n: the rho curvature is
/// at most mu / 4 per dyad over n (n - 1) / 2 dyads, so with the default
/// node step this is the inverse of its largest possible value. Halving
/// stops once the predicted gain drops below what the summed
/// log-likelihood can resolve; the update then returns without a cap hit.
RhoUpdate rho_update(const Network& net, const FitState& state, SubSolver subsolver,
                     double sub_tol, double step_size, int max_sub_iters);

/// Cyclic coordinate ascent over nodes 1..n then rho.
///
/// Throws ModelError when mu_mode is plugin and the network is empty.
/// Non-convergence is reported through FitResult::converged.
FitResult coordinate_descent_fit(const Network& net, const NodeParams& init, double init_rho,
                                 const FitConfig& config);

/// The normal-approximation statistics: sqrt(n) * error for alpha at nodes
/// 2, ceil(n/2), n and beta at nodes 1, ceil(n/2), n (1-based), and
/// n * (rho_hat - rho).
struct FitStatistics {
  double a2 = 0.0, amid = 0.0, an = 0.0;
  double b1 = 0.0, bmid = 0.0, bn = 0.0;
  double rho = 0.0;
};

FitStatistics fit_statistics(const NodeParams& fitted, double fitted_rho, const NodeParams& truth,
                             double truth_rho);
inline FitStatistics fit_statistics(const FitResult& r, const NodeParams& truth, double truth_rho) {
  return fit_statistics(r.params, r.rho, truth, truth_rho);
}

/// Moves a parameter vector along its identification class so that
/// alpha_1 = 0: (alpha - alpha_1, beta + alpha_1).
NodeParams normalize_alpha1(const NodeParams& params);

namespace detail {

struct SparseLevel;
class ExpTable;

// `table` (optional) must match `params`; it only speeds up evaluation.
NodeUpdate newton_node_update(std::span<const std::uint8_t> row, std::size_t i,
                              const NodeParams& params, double rho, const SparseLevel& lv,
                              double sub_tol, int max_sub_iters, double fallback_step,
                              bool pin_alpha, const ExpTable* table = nullptr);
NodeUpdate gradient_node_update(std::span<const std::uint8_t> row, std::size_t i,
                                const NodeParams& params, double rho, const SparseLevel& lv,
                                double sub_tol, double step_size, int max_sub_iters,
                                bool pin_alpha, const ExpTable* table = nullptr);

RhoUpdate rho_update(const Network& net, const NodeParams& params, double rho,
                     const SparseLevel& lv, SubSolver subsolver, double sub_tol, double step_size,
                     int max_sub_iters, const ExpTable* table = nullptr);

/// Default gradient step 1 / (mu n).
double default_step(double mu, std::size_t n);

}  // namespace detail
}  // namespace expnet
