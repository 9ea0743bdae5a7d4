#include "expnet/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "expnet/model.hpp"

namespace expnet {

std::string_view to_string(SubSolver s) {
  return s == SubSolver::newton ? "newton" : "gradient";
}

std::string_view to_string(OuterCriterion c) {
  return c == OuterCriterion::param_change ? "param_change" : "gradient_norm";
}

FitConfig FitConfig::newton_defaults() {
  FitConfig c;
  c.subsolver = SubSolver::newton;
  c.outer_tol = 1e-3;
  c.sub_tol = 1e-4;
  c.outer_criterion = OuterCriterion::param_change;
  return c;
}

FitConfig FitConfig::gradient_defaults(double outer_tol) {
  FitConfig c;
  c.subsolver = SubSolver::gradient;
  c.outer_tol = outer_tol;
  c.sub_tol = 1e-3;
  c.outer_criterion = OuterCriterion::gradient_norm;
  return c;
}

void FitConfig::validate() const {
  if (!(outer_tol > 0.0)) throw std::invalid_argument("outer_tol must be > 0");
  if (!(sub_tol > 0.0)) throw std::invalid_argument("sub_tol must be > 0");
  if (step_size && !(*step_size > 0.0)) throw std::invalid_argument("step_size must be > 0");
  if (max_outer_iters < 1) throw std::invalid_argument("max_outer_iters must be >= 1");
  if (max_sub_iters < 1) throw std::invalid_argument("max_sub_iters must be >= 1");
  if (mu_mode.kind == MuMode::Kind::known) detail::check_mu(mu_mode.value);
}

MuEstimate estimate_mu_bar(const Network& net) {
  const double n = static_cast<double>(net.size());
  if (net.size() < 2) throw ModelError("estimate_mu_bar needs n >= 2");
  const double value = static_cast<double>(net.edge_count()) / (n * (n - 1.0));
  return {value, net.edge_count() == 0};
}

namespace detail {

double default_step(double mu, std::size_t n) { return 1.0 / (mu * static_cast<double>(n)); }

namespace {

// Relative slack for accepting a Newton step: covers summation rounding in
// l_i, far below any real decrease.
double ascent_slack(double ll) { return 1e-13 * (1.0 + std::abs(ll)); }

constexpr int kMaxHalvings = 60;

// Relative size below which a change of the total log-likelihood is lost in
// summation rounding.
constexpr double kGainFloor = 1e-15;

struct Backtrack {
  bool moved = false;
  double da = 0.0, db = 0.0;
  NodeEval eval;
};

// Step along the gradient, halving until l_i does not decrease.
Backtrack backtrack_node(std::span<const std::uint8_t> row, std::size_t i, double a, double b,
                         const NodeEval& cur, const NodeParams& params, double rho,
                         const SparseLevel& lv, double step, bool pin_alpha,
                         const ExpTable* table) {
  const double ga = pin_alpha ? 0.0 : cur.ga;
  const double gb = cur.gb;
  double t = step;
  for (int k = 0; k < kMaxHalvings; ++k, t *= 0.5) {
    const double na = a + t * ga, nb = b + t * gb;
    if (na == a && nb == b) break;
    NodeEval cand = evaluate_node(row, i, na, nb, params, rho, lv, table);
    if (cand.loglik >= cur.loglik) return {true, na - a, nb - b, cand};
  }
  return {};
}

}  // namespace

NodeUpdate newton_node_update(std::span<const std::uint8_t> row, std::size_t i,
                              const NodeParams& params, double rho, const SparseLevel& lv,
                              double sub_tol, int max_sub_iters, double fallback_step,
                              bool pin_alpha, const ExpTable* table) {
  double a = params.alpha[i], b = params.beta[i];
  NodeEval cur = evaluate_node(row, i, a, b, params, rho, lv, table);
  for (int s = 1; s <= max_sub_iters; ++s) {
    double da = 0.0, db = 0.0;
    bool newton_ok = false;
    if (pin_alpha) {
      if (cur.hbb <= -kSingularDet) {
        db = -cur.gb / cur.hbb;
        newton_ok = true;
      }
    } else {
      const double det = cur.haa * cur.hbb - cur.hab * cur.hab;
      // Negative definite and comfortably invertible.
      if (std::abs(det) >= kSingularDet && det > 0.0 && cur.haa < 0.0) {
        da = -(cur.hbb * cur.ga - cur.hab * cur.gb) / det;
        db = -(cur.haa * cur.gb - cur.hab * cur.ga) / det;
        newton_ok = std::isfinite(da) && std::isfinite(db);
      }
    }
    bool accepted = false;
    if (newton_ok) {
      NodeEval cand = evaluate_node(row, i, a + da, b + db, params, rho, lv, table);
      if (cand.loglik >= cur.loglik - ascent_slack(cur.loglik)) {
        cur = cand;
        accepted = true;
      }
    }
    if (!accepted) {
      const Backtrack bt = backtrack_node(row, i, a, b, cur, params, rho, lv, fallback_step,
                                          pin_alpha, table);
      da = bt.da;
      db = bt.db;
      if (bt.moved) cur = bt.eval;
    }
    a += da;
    b += db;
    if (std::max(std::abs(da), std::abs(db)) < sub_tol) return {a, b, s, false};
  }
  return {a, b, max_sub_iters, true};
}

NodeUpdate gradient_node_update(std::span<const std::uint8_t> row, std::size_t i,
                                const NodeParams& params, double rho, const SparseLevel& lv,
                                double sub_tol, double step_size, int max_sub_iters,
                                bool pin_alpha, const ExpTable* table) {
  double a = params.alpha[i], b = params.beta[i];
  NodeEval cur = evaluate_node(row, i, a, b, params, rho, lv, table);
  for (int s = 0; s < max_sub_iters; ++s) {
    const double sup = std::max(pin_alpha ? 0.0 : std::abs(cur.ga), std::abs(cur.gb));
    if (sup < sub_tol) return {a, b, s, false};
    const Backtrack bt =
        backtrack_node(row, i, a, b, cur, params, rho, lv, step_size, pin_alpha, table);
    if (!bt.moved) return {a, b, s, false};  // no ascent direction left at this precision
    a += bt.da;
    b += bt.db;
    cur = bt.eval;
  }
  const double sup = std::max(pin_alpha ? 0.0 : std::abs(cur.ga), std::abs(cur.gb));
  return {a, b, max_sub_iters, !(sup < sub_tol)};
}

RhoUpdate rho_update(const Network& net, const NodeParams& params, double rho,
                     const SparseLevel& lv, SubSolver subsolver, double sub_tol, double step_size,
                     int max_sub_iters, const ExpTable* table) {
  const double rho_step = step_size * 8.0 / static_cast<double>(params.size());
  FullEval cur = evaluate_full(net, params, rho, lv, false, table);

  auto backtrack = [&](double& d) {
    double t = rho_step;
    for (int k = 0; k < kMaxHalvings; ++k, t *= 0.5) {
      const double nr = rho + t * cur.drho;
      if (nr == rho) break;
      if (0.5 * t * cur.drho * cur.drho < kGainFloor * (1.0 + std::abs(cur.loglik))) break;
      FullEval cand = evaluate_full(net, params, nr, lv, false, table);
      if (cand.loglik >= cur.loglik) {
        d = nr - rho;
        cur = std::move(cand);
        return true;
      }
    }
    d = 0.0;
    return false;
  };

  if (subsolver == SubSolver::gradient) {
    for (int s = 0; s < max_sub_iters; ++s) {
      if (std::abs(cur.drho) < sub_tol) return {rho, s, false};
      double d = 0.0;
      if (!backtrack(d)) return {rho, s, false};
      rho += d;
    }
    return {rho, max_sub_iters, !(std::abs(cur.drho) < sub_tol)};
  }

  for (int s = 1; s <= max_sub_iters; ++s) {
    double d = 0.0;
    bool accepted = false;
    if (cur.hrho <= -kSingularDet) {
      d = -cur.drho / cur.hrho;
      FullEval cand = evaluate_full(net, params, rho + d, lv, false, table);
      if (std::isfinite(d) && cand.loglik >= cur.loglik - ascent_slack(cur.loglik)) {
        cur = std::move(cand);
        accepted = true;
      }
    }
    if (!accepted) backtrack(d);
    rho += d;
    if (std::abs(d) < sub_tol) return {rho, s, false};
  }
  return {rho, max_sub_iters, true};
}

}  // namespace detail

NodeUpdate newton_node_update(const Network& net, std::size_t i, const FitState& state,
                              double sub_tol, int max_sub_iters, bool pin_alpha) {
  state.params.validate();
  if (state.params.size() != net.size() || i >= net.size()) {
    throw ModelError("node update: size mismatch or index out of range");
  }
  detail::check_mu(state.mu);
  std::vector<std::uint8_t> row(net.size());
  net.fill_dyad_row(i, row);
  const detail::ExpTable table(state.params);
  return detail::newton_node_update(row, i, state.params, state.rho, detail::SparseLevel(state.mu),
                                    sub_tol, max_sub_iters,
                                    detail::default_step(state.mu, net.size()), pin_alpha, &table);
}

NodeUpdate gradient_node_update(const Network& net, std::size_t i, const FitState& state,
                                double sub_tol, double step_size, int max_sub_iters,
                                bool pin_alpha) {
  state.params.validate();
  if (state.params.size() != net.size() || i >= net.size()) {
    throw ModelError("node update: size mismatch or index out of range");
  }
  detail::check_mu(state.mu);
  std::vector<std::uint8_t> row(net.size());
  net.fill_dyad_row(i, row);
  const detail::ExpTable table(state.params);
  return detail::gradient_node_update(row, i, state.params, state.rho,
                                      detail::SparseLevel(state.mu), sub_tol, step_size,
                                      max_sub_iters, pin_alpha, &table);
}

RhoUpdate rho_update(const Network& net, const FitState& state, SubSolver subsolver,
                     double sub_tol, double step_size, int max_sub_iters) {
  state.params.validate();
  if (state.params.size() != net.size()) throw ModelError("rho update: size mismatch");
  detail::check_mu(state.mu);
  const detail::ExpTable table(state.params);
  return detail::rho_update(net, state.params, state.rho, detail::SparseLevel(state.mu),
                            subsolver, sub_tol, step_size, max_sub_iters, &table);
}

FitResult coordinate_descent_fit(const Network& net, const NodeParams& init, double init_rho,
                                 const FitConfig& config) {
  config.validate();
  init.validate();
  const std::size_t n = net.size();
  if (init.size() != n) {
    throw ModelError("init has " + std::to_string(init.size()) + " nodes, network has " +
                     std::to_string(n));
  }

  FitResult res;
  if (config.mu_mode.kind == MuMode::Kind::plugin) {
    const MuEstimate est = estimate_mu_bar(net);
    if (est.empty) throw ModelError("plug-in mu is zero: the network has no edges");
    res.mu_used = est.value;
  } else {
    res.mu_used = config.mu_mode.value;
  }
  const detail::SparseLevel lv(res.mu_used);
  const double step = config.step_size.value_or(detail::default_step(res.mu_used, n));
  const bool want_grad = config.outer_criterion == OuterCriterion::gradient_norm;

  res.params = init;
  res.rho = init_rho;
  if (config.fix_alpha1) res.params.alpha[0] = 0.0;

  detail::ExpTable table(res.params);
  std::vector<std::uint8_t> row(n);
  NodeParams prev;
  for (int t = 1; t <= config.max_outer_iters; ++t) {
    prev = res.params;
    const double prev_rho = res.rho;
    for (std::size_t i = 0; i < n; ++i) {
      net.fill_dyad_row(i, row);
      const bool pin = config.fix_alpha1 && i == 0;
      const NodeUpdate u =
          config.subsolver == SubSolver::newton
              ? detail::newton_node_update(row, i, res.params, res.rho, lv, config.sub_tol,
                                           config.max_sub_iters, step, pin, &table)
              : detail::gradient_node_update(row, i, res.params, res.rho, lv, config.sub_tol,
                                             step, config.max_sub_iters, pin, &table);
      res.params.alpha[i] = u.alpha;
      res.params.beta[i] = u.beta;
      table.set(i, u.alpha, u.beta);
      if (u.cap_hit) ++res.sub_cap_hits;
    }
    const RhoUpdate ru = detail::rho_update(net, res.params, res.rho, lv, config.subsolver,
                                            config.sub_tol, step, config.max_sub_iters, &table);
    res.rho = ru.rho;
    if (ru.cap_hit) ++res.sub_cap_hits;

    const detail::FullEval full =
        detail::evaluate_full(net, res.params, res.rho, lv, want_grad, &table);
    double residual = 0.0;
    if (want_grad) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!(config.fix_alpha1 && i == 0)) residual = std::max(residual, std::abs(full.ga[i]));
        residual = std::max(residual, std::abs(full.gb[i]));
      }
      residual = std::max(residual, std::abs(full.drho));
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        residual = std::max(residual, std::abs(res.params.alpha[i] - prev.alpha[i]));
        residual = std::max(residual, std::abs(res.params.beta[i] - prev.beta[i]));
      }
      residual = std::max(residual, std::abs(res.rho - prev_rho));
    }
    res.residual_trace.push_back(residual);
    res.loglik_trace.push_back(full.loglik);
    res.outer_iters = t;
    if (residual < config.outer_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

FitStatistics fit_statistics(const NodeParams& fitted, double fitted_rho, const NodeParams& truth,
                             double truth_rho) {
  const std::size_t n = truth.size();
  if (fitted.size() != n || n < 2) throw ModelError("fit_statistics: size mismatch");
  const double sn = std::sqrt(static_cast<double>(n));
  const std::size_t mid = (n + 1) / 2 - 1;  // ceil(n/2), 0-based
  auto da = [&](std::size_t k) { return sn * (fitted.alpha[k] - truth.alpha[k]); };
  auto db = [&](std::size_t k) { return sn * (fitted.beta[k] - truth.beta[k]); };
  return {da(1), da(mid), da(n - 1), db(0), db(mid), db(n - 1),
          static_cast<double>(n) * (fitted_rho - truth_rho)};
}

NodeParams normalize_alpha1(const NodeParams& params) {
  NodeParams out = params;
  const double shift = params.alpha.at(0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.alpha[i] -= shift;
    out.beta[i] += shift;
  }
  return out;
}

}  // namespace expnet
