#include "expnet/model.hpp"

#include <Eigen/Dense>
#include <string>

namespace expnet {

void NodeParams::validate(std::optional<double> bound) const {
  if (alpha.size() != beta.size()) {
    throw ModelError("alpha and beta lengths differ: " + std::to_string(alpha.size()) + " vs " +
                     std::to_string(beta.size()));
  }
  if (alpha.size() < 2) throw ModelError("need at least two nodes");
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!std::isfinite(alpha[i]) || !std::isfinite(beta[i])) {
      throw ModelError("non-finite parameter at node " + std::to_string(i + 1));
    }
    if (bound && (std::abs(alpha[i]) > *bound || std::abs(beta[i]) > *bound)) {
      throw ModelError("parameter at node " + std::to_string(i + 1) + " exceeds bound");
    }
  }
}

namespace detail {

void check_mu(double mu) {
  if (!(mu > 0.0 && mu <= 1.0)) {
    throw ModelError("sparsity level mu must lie in (0, 1], got " + std::to_string(mu));
  }
}

ExpTable::ExpTable(const NodeParams& params) : ea_(params.size()), eb_(params.size()) {
  for (std::size_t j = 0; j < params.size(); ++j) set(j, params.alpha[j], params.beta[j]);
}

void ExpTable::set(std::size_t i, double alpha, double beta) {
  max_abs_ = std::max({max_abs_, std::abs(alpha), std::abs(beta)});
  ea_[i] = std::exp(alpha);
  eb_[i] = std::exp(beta);
}

namespace {

bool small(double x) { return std::abs(x) <= kFastBound; }

// Visits every j != i with the dyad terms of (i, j) at (alpha_i, beta_i),
// taking the unshifted kernel when the magnitudes allow it.
template <typename F>
void for_each_dyad(std::span<const std::uint8_t> row, std::size_t i, double alpha_i,
                   double beta_i, const NodeParams& params, double rho, const SparseLevel& lv,
                   const ExpTable* table, F&& f) {
  const std::size_t n = params.size();
  const double* alpha = params.alpha.data();
  const double* beta = params.beta.data();
  ExpTable local;
  if (!table && small(alpha_i) && small(beta_i) && small(rho)) {
    local = ExpTable(params);
    table = &local;
  }
  if (table && table->fast() && small(alpha_i) && small(beta_i) && small(rho)) {
    const double ea_i = std::exp(alpha_i), eb_i = std::exp(beta_i), r = std::exp(rho);
    const double* ea = table->ea();
    const double* eb = table->eb();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      f(dyad_terms_exp(ea_i * eb[j], ea[j] * eb_i, r, alpha_i + beta[j], alpha[j] + beta_i, rho,
                       row[j], lv));
    }
    return;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    f(dyad_terms(alpha_i + beta[j], alpha[j] + beta_i, rho, row[j], lv));
  }
}

}  // namespace

NodeEval evaluate_node(std::span<const std::uint8_t> row, std::size_t i, double alpha_i,
                       double beta_i, const NodeParams& params, double rho, const SparseLevel& lv,
                       const ExpTable* table) {
  NodeEval out;
  for_each_dyad(row, i, alpha_i, beta_i, params, rho, lv, table, [&](const DyadTerms& t) {
    out.loglik += t.logp;
    out.ga += t.d1;
    out.gb += t.d2;
    out.haa += t.h11;
    out.hab += t.h12;
    out.hbb += t.h22;
  });
  return out;
}

double node_loglik_at(std::span<const std::uint8_t> row, std::size_t i, double alpha_i,
                      double beta_i, const NodeParams& params, double rho, const SparseLevel& lv,
                      const ExpTable* table) {
  double ll = 0.0;
  for_each_dyad(row, i, alpha_i, beta_i, params, rho, lv, table,
                [&](const DyadTerms& t) { ll += t.logp; });
  return ll;
}

namespace {

template <bool Fast, bool Grad>
void full_pass(const Network& net, const NodeParams& params, double rho, const SparseLevel& lv,
               const ExpTable& table, FullEval& out) {
  const std::size_t n = params.size();
  const double r = std::exp(rho);
  const double* ea = table.ea();
  const double* eb = table.eb();
  const double* alpha = params.alpha.data();
  const double* beta = params.beta.data();
  std::vector<std::uint8_t> row(n);
  double ll = 0.0, drho = 0.0, hrho = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    net.fill_dyad_row(i, row);
    const double ai = alpha[i], bi = beta[i];
    double gai = 0.0, gbi = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double t1 = ai + beta[j], t2 = alpha[j] + bi;
      DyadTerms t;
      if constexpr (Fast) {
        t = dyad_terms_exp(ea[i] * eb[j], ea[j] * eb[i], r, t1, t2, rho, row[j], lv);
      } else {
        t = dyad_terms(t1, t2, rho, row[j], lv);
      }
      ll += t.logp;
      drho += t.d3;
      hrho += t.h33;
      if constexpr (Grad) {
        // Seen from j the dyad is (j, i): theta roles swap.
        gai += t.d1;
        gbi += t.d2;
        out.ga[j] += t.d2;
        out.gb[j] += t.d1;
      }
    }
    if constexpr (Grad) {
      out.ga[i] += gai;
      out.gb[i] += gbi;
    }
  }
  out.loglik = ll;
  out.drho = drho;
  out.hrho = hrho;
}

}  // namespace

FullEval evaluate_full(const Network& net, const NodeParams& params, double rho,
                       const SparseLevel& lv, bool node_gradients, const ExpTable* table) {
  FullEval out;
  if (node_gradients) {
    out.ga.assign(params.size(), 0.0);
    out.gb.assign(params.size(), 0.0);
  }
  ExpTable local;
  if (!table) {
    local = ExpTable(params);
    table = &local;
  }
  const bool fast = table->fast() && small(rho);
  if (fast && node_gradients) full_pass<true, true>(net, params, rho, lv, *table, out);
  else if (fast) full_pass<true, false>(net, params, rho, lv, *table, out);
  else if (node_gradients) full_pass<false, true>(net, params, rho, lv, *table, out);
  else full_pass<false, false>(net, params, rho, lv, *table, out);
  return out;
}

}  // namespace detail

namespace {

struct Shifted {
  double m;
  double u[4];
  double s;
};

Shifted shifted_exponents(double t1, double t2, double rho) {
  const double e[4] = {0.0, t1, t2, t1 + t2 + rho};
  Shifted r{std::max(std::max(e[0], e[1]), std::max(e[2], e[3])), {}, 0.0};
  for (int k = 0; k < 4; ++k) {
    r.u[k] = std::exp(e[k] - r.m);
    r.s += r.u[k];
  }
  return r;
}

void check_dyad(const Network& net, std::size_t i, const NodeParams& params) {
  if (params.size() != net.size()) {
    throw ModelError("parameter length " + std::to_string(params.size()) +
                     " does not match network size " + std::to_string(net.size()));
  }
  if (i >= net.size()) throw ModelError("node index out of range");
}

}  // namespace

double dyad_partition(double theta1, double theta2, double rho) {
  const Shifted sh = shifted_exponents(theta1, theta2, rho);
  return std::exp(sh.m) * sh.s;
}

DyadPmf dyad_pmf_dense(double theta1, double theta2, double rho) {
  const Shifted sh = shifted_exponents(theta1, theta2, rho);
  return {sh.u[0] / sh.s, sh.u[1] / sh.s, sh.u[2] / sh.s, sh.u[3] / sh.s, std::exp(sh.m) * sh.s};
}

DyadPmf dyad_pmf_sparse(double theta1, double theta2, double rho, double mu) {
  detail::check_mu(mu);
  const Shifted sh = shifted_exponents(theta1, theta2, rho);
  const double rest = sh.u[1] + sh.u[2] + sh.u[3];
  // mu * (1 - g00) > 1 - 1e-12 is equivalent to p00 < 1e-12.
  const double p00 = (sh.u[0] + (1.0 - mu) * rest) / sh.s;
  if (!(p00 >= 1e-12)) {
    throw ModelError("sparse dyad pmf has p00 <= 1e-12 (mu * (1 - g00) too close to 1)");
  }
  return {p00, mu * sh.u[1] / sh.s, mu * sh.u[2] / sh.s, mu * sh.u[3] / sh.s,
          std::exp(sh.m) * sh.s};
}

double dyad_loglik(DyadOutcome y, double theta1, double theta2, double rho, double mu) {
  (void)dyad_pmf_sparse(theta1, theta2, rho, mu);  // validity check
  return detail::dyad_terms(theta1, theta2, rho, y.code(), detail::SparseLevel(mu)).logp;
}

Score3 dyad_score(DyadOutcome y, double theta1, double theta2, double rho) {
  const auto t = detail::dyad_terms(theta1, theta2, rho, y.code(), detail::SparseLevel(1.0));
  return {t.d1, t.d2, t.d3};
}

double node_loglik(const Network& net, std::size_t i, const NodeParams& params,
                   const GlobalParams& globals) {
  check_dyad(net, i, params);
  detail::check_mu(globals.mu);
  std::vector<std::uint8_t> row(net.size());
  net.fill_dyad_row(i, row);
  return detail::node_loglik_at(row, i, params.alpha[i], params.beta[i], params, globals.rho,
                                detail::SparseLevel(globals.mu));
}

double total_loglik(const Network& net, const NodeParams& params, const GlobalParams& globals) {
  check_dyad(net, 0, params);
  detail::check_mu(globals.mu);
  return detail::evaluate_full(net, params, globals.rho, detail::SparseLevel(globals.mu), false)
      .loglik;
}

NodeGradient node_gradient(const Network& net, std::size_t i, const NodeParams& params,
                           const GlobalParams& globals) {
  check_dyad(net, i, params);
  detail::check_mu(globals.mu);
  std::vector<std::uint8_t> row(net.size());
  net.fill_dyad_row(i, row);
  const auto e = detail::evaluate_node(row, i, params.alpha[i], params.beta[i], params,
                                       globals.rho, detail::SparseLevel(globals.mu));
  return {e.ga, e.gb};
}

NodeHessian node_hessian(const Network& net, std::size_t i, const NodeParams& params,
                         const GlobalParams& globals) {
  check_dyad(net, i, params);
  detail::check_mu(globals.mu);
  std::vector<std::uint8_t> row(net.size());
  net.fill_dyad_row(i, row);
  const auto e = detail::evaluate_node(row, i, params.alpha[i], params.beta[i], params,
                                       globals.rho, detail::SparseLevel(globals.mu));
  NodeHessian h{e.haa, e.hab, e.hbb, true};
  h.invertible = std::abs(h.det()) >= kSingularDet;
  return h;
}

RhoDerivatives rho_derivatives(const Network& net, const NodeParams& params,
                               const GlobalParams& globals) {
  check_dyad(net, 0, params);
  detail::check_mu(globals.mu);
  const auto e =
      detail::evaluate_full(net, params, globals.rho, detail::SparseLevel(globals.mu), false);
  return {e.drho, e.hrho, std::abs(e.hrho) >= kSingularDet};
}

double information_rank_diagnostic(double theta1, double theta2, double rho) {
  Eigen::Matrix<double, 4, 3> scores;
  for (int code = 0; code < 4; ++code) {
    const Score3 s = dyad_score(DyadOutcome::from_code(code), theta1, theta2, rho);
    scores.row(code) << s.theta1, s.theta2, s.rho;
  }
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"  // false positive inside Eigen
  Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> svd(scores);
  const double smallest = svd.singularValues()(2);
#pragma GCC diagnostic pop
  return smallest;
}

}  // namespace expnet
