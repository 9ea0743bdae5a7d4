#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "expnet/estimator.hpp"
#include "expnet/network.hpp"
#include "expnet/types.hpp"

namespace expnet {

/// Uniform candidate set on [-B, B] shared by every node and by both
/// coordinates of a node.
class Grid {
 public:
  /// Values -B, -B + h, ... and finally B (the last cell may be short).
  /// Throws std::invalid_argument unless 0 < h <= 2B.
  static Grid uniform(double bound, double spacing);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double bound() const { return bound_; }
  double spacing() const { return spacing_; }
  int dimension() const { return 2; }

  /// Minimum separation of distinct grid points (per coordinate).
  double delta() const { return spacing_; }
  /// Covering radius in the per-node 2-norm: h sqrt(d) / 2.
  double covering_radius() const;

  bool contains(double v) const;
  /// Nearest value; ties go to the smaller one.
  double nearest(double v) const;

 private:
  std::vector<double> values_;
  double bound_ = 1.0;
  double spacing_ = 1.0;
};

/// h = c n^(-1/6) mu^(-1/6) (ln n)^(4/3), clamped to 2B.
double optimal_spacing(std::size_t n, double mu, double c = 1.0, double bound = 1.0);

NodeParams project_to_grid(const NodeParams& params, const Grid& grid);

struct DiscretizedFit : FitResult {
  int last_sweep_changes = 0;
};

/// Coordinate ascent in which each node update maximizes l_i exhaustively
/// over grid x grid (ties to the lexicographically smaller pair) and rho is
/// updated continuously. Stops after a sweep that changes no node and moves
/// rho by less than outer_tol. With fix_alpha1 node 1 keeps its alpha.
///
/// Throws ModelError when an init coordinate is not a grid value.
DiscretizedFit discretized_fit(const Network& net, const NodeParams& init, double init_rho,
                               const Grid& grid, const FitConfig& config);

/// Global maximizer by enumeration over grid^(2n) x rho_grid, ties to the
/// lexicographically smaller (alpha_1..alpha_n, beta_1..beta_n, rho).
/// An empty rho_grid maximizes rho continuously for each assignment.
/// Throws std::invalid_argument when the search space exceeds 1e7 points.
DiscretizedFit brute_force_discrete_mle(const Network& net, const Grid& grid,
                                        std::span<const double> rho_grid, double mu = 1.0);

}  // namespace expnet
