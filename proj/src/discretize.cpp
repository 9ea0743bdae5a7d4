#include "expnet/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "expnet/model.hpp"

namespace expnet {

Grid Grid::uniform(double bound, double spacing) {
  if (!(bound > 0.0) || !std::isfinite(bound)) throw std::invalid_argument("grid bound must be > 0");
  if (!(spacing > 0.0) || spacing > 2.0 * bound) {
    throw std::invalid_argument("grid spacing must satisfy 0 < h <= 2B, got h = " +
                                std::to_string(spacing));
  }
  Grid g;
  g.bound_ = bound;
  g.spacing_ = spacing;
  const double eps = 1e-12 * bound;
  for (std::size_t k = 0;; ++k) {
    double v = -bound + static_cast<double>(k) * spacing;
    if (v >= bound - eps) break;
    if (std::abs(v) < eps) v = 0.0;
    g.values_.push_back(v);
  }
  g.values_.push_back(bound);
  return g;
}

double Grid::covering_radius() const {
  return spacing_ * std::sqrt(static_cast<double>(dimension())) / 2.0;
}

bool Grid::contains(double v) const {
  return std::binary_search(values_.begin(), values_.end(), v);
}

double Grid::nearest(double v) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), v);
  if (it == values_.begin()) return *it;
  if (it == values_.end()) return values_.back();
  const double hi = *it, lo = *(it - 1);
  return (hi - v) < (v - lo) ? hi : lo;
}

double optimal_spacing(std::size_t n, double mu, double c, double bound) {
  if (n < 2) throw std::invalid_argument("optimal_spacing needs n >= 2");
  detail::check_mu(mu);
  if (!(c > 0.0)) throw std::invalid_argument("spacing constant c must be > 0");
  const double dn = static_cast<double>(n);
  const double h = c * std::pow(dn, -1.0 / 6.0) * std::pow(mu, -1.0 / 6.0) *
                   std::pow(std::log(dn), 4.0 / 3.0);
  return std::min(h, 2.0 * bound);
}

NodeParams project_to_grid(const NodeParams& params, const Grid& grid) {
  NodeParams out = params;
  for (double& a : out.alpha) a = grid.nearest(a);
  for (double& b : out.beta) b = grid.nearest(b);
  return out;
}

namespace {

double resolve_mu(const Network& net, const FitConfig& config) {
  if (config.mu_mode.kind == MuMode::Kind::known) return config.mu_mode.value;
  const MuEstimate est = estimate_mu_bar(net);
  if (est.empty) throw ModelError("plug-in mu is zero: the network has no edges");
  return est.value;
}

}  // namespace

DiscretizedFit discretized_fit(const Network& net, const NodeParams& init, double init_rho,
                               const Grid& grid, const FitConfig& config) {
  config.validate();
  init.validate();
  const std::size_t n = net.size();
  if (init.size() != n) throw ModelError("init size does not match network");
  for (std::size_t i = 0; i < n; ++i) {
    if (!grid.contains(init.alpha[i]) || !grid.contains(init.beta[i])) {
      throw ModelError("init coordinates of node " + std::to_string(i + 1) + " are not on the grid");
    }
  }

  DiscretizedFit res;
  res.mu_used = resolve_mu(net, config);
  const detail::SparseLevel lv(res.mu_used);
  const double step = config.step_size.value_or(detail::default_step(res.mu_used, n));
  res.params = init;
  res.rho = init_rho;

  const auto values = grid.values();
  detail::ExpTable table(res.params);
  std::vector<std::uint8_t> row(n);
  for (int t = 1; t <= config.max_outer_iters; ++t) {
    int changes = 0;
    double max_move = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      net.fill_dyad_row(i, row);
      const bool pin = config.fix_alpha1 && i == 0;
      const double old_a = res.params.alpha[i], old_b = res.params.beta[i];
      double best_a = old_a, best_b = old_b;
      double best_ll = -std::numeric_limits<double>::infinity();
      // Lexicographic scan with strict improvement keeps the smallest tie.
      for (double a : values) {
        if (pin && a != old_a) continue;
        for (double b : values) {
          const double ll = detail::node_loglik_at(row, i, a, b, res.params, res.rho, lv, &table);
          if (ll > best_ll) {
            best_ll = ll;
            best_a = a;
            best_b = b;
          }
        }
      }
      if (best_a != old_a || best_b != old_b) {
        ++changes;
        max_move = std::max({max_move, std::abs(best_a - old_a), std::abs(best_b - old_b)});
        res.params.alpha[i] = best_a;
        res.params.beta[i] = best_b;
        table.set(i, best_a, best_b);
      }
    }
    const double old_rho = res.rho;
    const RhoUpdate ru = detail::rho_update(net, res.params, res.rho, lv, config.subsolver,
                                            config.sub_tol, step, config.max_sub_iters, &table);
    res.rho = ru.rho;
    if (ru.cap_hit) ++res.sub_cap_hits;
    const double drho = std::abs(res.rho - old_rho);

    res.residual_trace.push_back(std::max(max_move, drho));
    res.loglik_trace.push_back(
        detail::evaluate_full(net, res.params, res.rho, lv, false, &table).loglik);
    res.outer_iters = t;
    res.last_sweep_changes = changes;
    if (changes == 0 && drho < config.outer_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

DiscretizedFit brute_force_discrete_mle(const Network& net, const Grid& grid,
                                        std::span<const double> rho_grid, double mu) {
  detail::check_mu(mu);
  const std::size_t n = net.size();
  if (n < 2) throw ModelError("brute force needs n >= 2");
  const std::size_t m = grid.size();
  const std::size_t coords = 2 * n;
  double space = std::max<double>(1.0, static_cast<double>(rho_grid.size()));
  for (std::size_t k = 0; k < coords; ++k) space *= static_cast<double>(m);
  if (space > 1e7) {
    throw std::invalid_argument("brute-force search space too large (" + std::to_string(space) +
                                " > 1e7)");
  }

  const detail::SparseLevel lv(mu);
  const auto values = grid.values();
  // Odometer over (alpha_1..alpha_n, beta_1..beta_n), last digit fastest, so
  // assignments are visited in lexicographic order.
  std::vector<std::size_t> digit(coords, 0);
  NodeParams cur = NodeParams::zeros(n);
  DiscretizedFit best;
  best.mu_used = mu;
  double best_ll = -std::numeric_limits<double>::infinity();
  const double step = detail::default_step(mu, n);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) {
      cur.alpha[i] = values[digit[i]];
      cur.beta[i] = values[digit[n + i]];
    }
    if (rho_grid.empty()) {
      const RhoUpdate ru = detail::rho_update(net, cur, 0.0, lv, SubSolver::newton, 1e-12, step, 200);
      const double ll = detail::evaluate_full(net, cur, ru.rho, lv, false).loglik;
      if (ll > best_ll) {
        best_ll = ll;
        best.params = cur;
        best.rho = ru.rho;
      }
    } else {
      for (double r : rho_grid) {
        const double ll = detail::evaluate_full(net, cur, r, lv, false).loglik;
        if (ll > best_ll) {
          best_ll = ll;
          best.params = cur;
          best.rho = r;
        }
      }
    }
    std::size_t k = coords;
    while (k > 0 && ++digit[k - 1] == m) digit[--k] = 0;
    if (k == 0) break;
  }
  best.converged = true;
  best.loglik_trace.push_back(best_ll);
  return best;
}

}  // namespace expnet
