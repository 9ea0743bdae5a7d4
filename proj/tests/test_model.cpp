#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "expnet/model.hpp"
#include "support.hpp"

using namespace expnet;
using namespace testing_support;

namespace {

const DyadOutcome k00{false, false}, k10{true, false}, k01{false, true}, k11{true, true};

double pmf_sum(const DyadPmf& p) { return p.p00 + p.p10 + p.p01 + p.p11; }

}  // namespace

TEST_CASE("dyad partition") {
  CHECK(dyad_partition(0, 0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(dyad_partition(std::log(2.0), 0, 0) == doctest::Approx(6.0).epsilon(1e-15));
  // 1 + e^0.7 + e^-0.3 + e^1.0
  CHECK(dyad_partition(0.7, -0.3, 0.6) == doctest::Approx(6.472852756611239).epsilon(1e-14));
  const double big = 1.0 + std::exp(20.0) + std::exp(15.0) + std::exp(36.0);
  CHECK(dyad_partition(20.0, 15.0, 1.0) == doctest::Approx(big).epsilon(1e-14));
}

TEST_CASE("dense pmf closed forms") {
  const DyadPmf flat = dyad_pmf_dense(0, 0, 0);
  for (int c = 0; c < 4; ++c) CHECK(flat[c] == doctest::Approx(0.25).epsilon(1e-15));

  const DyadPmf recip = dyad_pmf_dense(0, 0, std::log(3.0));
  CHECK(recip.p11 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(recip.p00 == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(recip.p10 == doctest::Approx(1.0 / 6.0).epsilon(1e-15));

  // rho = 0: two independent Bernoulli draws with success 2/3 and 1/2.
  const DyadPmf ind = dyad_pmf_dense(std::log(2.0), 0, 0);
  CHECK(ind.p10 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(ind.p11 == doctest::Approx(2.0 / 3.0 * 0.5).epsilon(1e-15));
  CHECK(ind.p00 == doctest::Approx(1.0 / 3.0 * 0.5).epsilon(1e-15));
  CHECK(ind.p01 == doctest::Approx(1.0 / 3.0 * 0.5).epsilon(1e-15));
}

TEST_CASE("sparse pmf") {
  const DyadPmf dense = dyad_pmf_sparse(0, 0, 0, 1.0);
  for (int c = 0; c < 4; ++c) CHECK(dense[c] == dyad_pmf_dense(0, 0, 0)[c]);

  const DyadPmf s = dyad_pmf_sparse(0, 0, 0, 0.4);
  CHECK(s.p00 == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(s.p10 == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.p11 == doctest::Approx(0.1).epsilon(1e-15));

  const DyadPmf g = dyad_pmf_sparse(0.5, -0.5, 0.3, 0.2);
  CHECK(g.p00 == doctest::Approx(0.8434300088269643).epsilon(1e-14));
  CHECK(g.p10 == doctest::Approx(0.07160397933971031).epsilon(1e-14));
  CHECK(g.p01 == doctest::Approx(0.02634163190514413).epsilon(1e-14));
  CHECK(g.p11 == doctest::Approx(0.05862437992818128).epsilon(1e-14));
  CHECK(std::abs(pmf_sum(g) - 1.0) < 1e-12);

  CHECK_THROWS_AS(dyad_pmf_sparse(0, 0, 0, 0.0), ModelError);
  CHECK_THROWS_AS(dyad_pmf_sparse(0, 0, 0, 1.5), ModelError);
}

TEST_CASE("pmf normalization over a parameter grid") {
  for (int a = 0; a <= 8; ++a) {
    for (int b = 0; b <= 8; ++b) {
      for (int r = 0; r <= 8; ++r) {
        const double t1 = -2.0 + 0.5 * a, t2 = -2.0 + 0.5 * b, rho = -1.0 + 0.25 * r;
        const DyadPmf p = dyad_pmf_dense(t1, t2, rho);
        CHECK(std::abs(pmf_sum(p) - 1.0) <= 1e-12);
        for (int c = 0; c < 4; ++c) CHECK(p[c] > 0.0);
      }
    }
  }
}

TEST_CASE("dyad loglik") {
  CHECK(dyad_loglik(k00, 0, 0, 0, 1.0) == doctest::Approx(-std::log(4.0)).epsilon(1e-15));
  CHECK(dyad_loglik(k11, 0, 0, std::log(3.0), 1.0) ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(dyad_loglik(k10, 0.7, -0.3, 0.6, 0.5) ==
        doctest::Approx(-1.8607641125466952).epsilon(1e-14));
  // Large arguments: log-space evaluation stays finite where exp underflows.
  CHECK(dyad_loglik(k00, -800.0, -800.0, 0.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(dyad_loglik(k11, -400.0, -400.0, 0.0, 1.0) == doctest::Approx(-800.0).epsilon(1e-12));
  // An empty dyad with vanishing probability is rejected.
  CHECK_THROWS_AS(dyad_loglik(k11, 800.0, 800.0, 0.0, 1.0), ModelError);
  CHECK(detail::dyad_terms(800.0, 800.0, 0.0, 3, detail::SparseLevel(1.0)).logp ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("dyad score closed forms") {
  const Score3 z = dyad_score(k00, 0, 0, 0);
  CHECK(z.theta1 == doctest::Approx(-0.5));
  CHECK(z.theta2 == doctest::Approx(-0.5));
  CHECK(z.rho == doctest::Approx(-0.25));
  const Score3 o = dyad_score(k11, 0, 0, 0);
  CHECK(o.theta1 == doctest::Approx(0.5));
  CHECK(o.theta2 == doctest::Approx(0.5));
  CHECK(o.rho == doctest::Approx(0.75));
}

TEST_CASE("dyad score matches finite differences") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const double t1 = u(gen), t2 = u(gen), rho = u(gen) / 2.0;
    for (int c = 0; c < 4; ++c) {
      const DyadOutcome y = DyadOutcome::from_code(c);
      const Score3 s = dyad_score(y, t1, t2, rho);
      CHECK(rel_err(s.theta1, central_diff([&](double x) { return dyad_loglik(y, x, t2, rho, 1.0); }, t1)) < 1e-6);
      CHECK(rel_err(s.theta2, central_diff([&](double x) { return dyad_loglik(y, t1, x, rho, 1.0); }, t2)) < 1e-6);
      CHECK(rel_err(s.rho, central_diff([&](double x) { return dyad_loglik(y, t1, t2, x, 1.0); }, rho)) < 1e-6);
    }
  }
}

TEST_CASE("node and total loglik identities") {
  const Network empty2(2, {});
  const NodeParams zero2 = NodeParams::zeros(2);
  CHECK(node_loglik(empty2, 0, zero2, {0.0, 1.0}) == doctest::Approx(-std::log(4.0)));
  CHECK(total_loglik(empty2, zero2, {0.0, 1.0}) == doctest::Approx(-std::log(4.0)));

  std::mt19937_64 gen(3);
  for (std::size_t n : {3u, 5u, 50u}) {
    const Network net = random_network(n, 0.3, gen);
    const NodeParams p = random_params(n, 1.0, gen);
    const GlobalParams g{0.4, 0.7};
    double sum_nodes = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum_nodes += node_loglik(net, i, p, g);
    const double total = total_loglik(net, p, g);
    CHECK(sum_nodes == doctest::Approx(2.0 * total).epsilon(1e-12));
    CHECK(std::abs(total - naive_loglik(net, p, g.rho, g.mu)) < 1e-9);
  }
}

TEST_CASE("node loglik equals a sum of dyad logliks") {
  std::mt19937_64 gen(5);
  const Network net = random_network(5, 0.4, gen);
  const NodeParams p = random_params(5, 1.0, gen);
  const GlobalParams g{-0.3, 0.6};
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      if (j == i) continue;
      s += dyad_loglik(net.dyad(i, j), p.alpha[i] + p.beta[j], p.alpha[j] + p.beta[i], g.rho, g.mu);
    }
    CHECK(node_loglik(net, i, p, g) == doctest::Approx(s).epsilon(1e-13));
  }
}

TEST_CASE("fast and shifted kernels agree") {
  const detail::SparseLevel lv(0.3);
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int k = 0; k < 200; ++k) {
    const double t1 = u(gen), t2 = u(gen), rho = u(gen) / 4.0;
    for (int c = 0; c < 4; ++c) {
      const auto a = detail::dyad_terms(t1, t2, rho, c, lv);
      const auto b = detail::dyad_terms_exp(std::exp(t1), std::exp(t2), std::exp(rho), t1, t2, rho, c, lv);
      CHECK(rel_err(a.logp, b.logp) < 1e-12);
      CHECK(std::abs(a.d1 - b.d1) < 1e-12);
      CHECK(std::abs(a.h12 - b.h12) < 1e-12);
      CHECK(std::abs(a.h33 - b.h33) < 1e-12);
    }
  }
}

TEST_CASE("large parameters take the shifted path") {
  std::mt19937_64 gen(9);
  const Network net = random_network(6, 0.5, gen);
  NodeParams p = random_params(6, 1.0, gen);
  p.alpha[2] = 150.0;  // beyond the fast-path bound
  const GlobalParams g{0.2, 1.0};
  const double total = total_loglik(net, p, g);
  CHECK(std::isfinite(total));
  double s = 0.0;
  for (std::size_t i = 0; i < 6; ++i) s += node_loglik(net, i, p, g);
  CHECK(s == doctest::Approx(2.0 * total).epsilon(1e-12));
}

TEST_CASE("gradients and Hessians match finite differences") {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<std::size_t> size(2, 30);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = size(gen);
    const Network net = random_network(n, 0.1 + 0.6 * unit(gen), gen);
    NodeParams p = random_params(n, 1.5, gen);
    const GlobalParams g{-1.0 + 2.0 * unit(gen), 0.2 + 0.8 * unit(gen)};
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, n - 1)(gen);

    auto li = [&](double a, double b) {
      NodeParams q = p;
      q.alpha[i] = a;
      q.beta[i] = b;
      return node_loglik(net, i, q, g);
    };
    const NodeGradient grad = node_gradient(net, i, p, g);
    const double a0 = p.alpha[i], b0 = p.beta[i];
    CHECK(rel_err(grad.alpha, central_diff([&](double x) { return li(x, b0); }, a0)) < 1e-6);
    CHECK(rel_err(grad.beta, central_diff([&](double x) { return li(a0, x); }, b0)) < 1e-6);

    auto gi = [&](double a, double b) {
      NodeParams q = p;
      q.alpha[i] = a;
      q.beta[i] = b;
      return node_gradient(net, i, q, g);
    };
    const NodeHessian h = node_hessian(net, i, p, g);
    CHECK(rel_err(h.aa, central_diff([&](double x) { return gi(x, b0).alpha; }, a0)) < 1e-5);
    CHECK(rel_err(h.ab, central_diff([&](double x) { return gi(a0, x).alpha; }, b0)) < 1e-5);
    CHECK(rel_err(h.ab, central_diff([&](double x) { return gi(x, b0).beta; }, a0)) < 1e-5);
    CHECK(rel_err(h.bb, central_diff([&](double x) { return gi(a0, x).beta; }, b0)) < 1e-5);

    const RhoDerivatives rd = rho_derivatives(net, p, g);
    auto lr = [&](double r) { return total_loglik(net, p, {r, g.mu}); };
    auto dr = [&](double r) { return rho_derivatives(net, p, {r, g.mu}).first; };
    CHECK(rel_err(rd.first, central_diff(lr, g.rho)) < 1e-6);
    CHECK(rel_err(rd.second, central_diff(dr, g.rho)) < 1e-5);
  }
}

TEST_CASE("node Hessian shape") {
  const Network net(2, {});
  const NodeHessian h = node_hessian(net, 0, NodeParams::zeros(2), {0.0, 1.0});
  CHECK(h.aa < 0.0);
  CHECK(h.bb < 0.0);
  CHECK(h.invertible);
  // n = 2 with mu = 1: the node gradient is the dyad score.
  const Network one(2, {{0, 1}, {1, 0}});
  NodeParams p = NodeParams::zeros(2);
  p.alpha = {0.3, -0.2};
  p.beta = {0.1, 0.4};
  const NodeGradient g = node_gradient(one, 0, p, {0.5, 1.0});
  const Score3 s = dyad_score(k11, 0.3 + 0.4, -0.2 + 0.1, 0.5);
  CHECK(g.alpha == doctest::Approx(s.theta1).epsilon(1e-14));
  CHECK(g.beta == doctest::Approx(s.theta2).epsilon(1e-14));
}

TEST_CASE("rho second derivative is non-positive") {
  std::mt19937_64 gen(23);
  for (int k = 0; k < 20; ++k) {
    const Network net = random_network(15, 0.3, gen);
    const NodeParams p = random_params(15, 1.0, gen);
    for (double rho : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
      CHECK(rho_derivatives(net, p, {rho, 1.0}).second <= 0.0);
    }
  }
}

TEST_CASE("rho score sign follows reciprocation") {
  // No reciprocated dyads but many single edges: fewer mutual dyads than
  // expected at rho = 0, so the likelihood pushes rho down.
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < 20; ++i) {
    for (std::uint32_t j = i + 1; j < 20; ++j) edges.push_back({i, j});
  }
  const Network net(20, edges);
  CHECK(rho_derivatives(net, NodeParams::zeros(20), {0.0, 1.0}).first < 0.0);
}

TEST_CASE("identification shift leaves the likelihood unchanged") {
  std::mt19937_64 gen(31);
  const Network net = random_network(25, 0.3, gen);
  const NodeParams p = random_params(25, 1.0, gen);
  const GlobalParams g{0.6, 0.8};
  const double base = total_loglik(net, p, g);
  for (double x : {-1.0, 0.37, 2.0}) {
    NodeParams q = p;
    for (std::size_t i = 0; i < 25; ++i) {
      q.alpha[i] -= x;
      q.beta[i] += x;
    }
    CHECK(std::abs(total_loglik(net, q, g) - base) < 1e-9);
  }
}

TEST_CASE("smaller edge mass lowers the likelihood of an observed edge") {
  std::mt19937_64 gen(41);
  const Network net = random_network(10, 0.5, gen);
  const NodeParams p = random_params(10, 1.0, gen);
  // Lowering mu shrinks mu g at every observed edge.
  double prev = total_loglik(net, p, {0.3, 1.0});
  for (double mu : {0.9, 0.7, 0.5}) {
    const double cur = total_loglik(net, p, {0.3, mu});
    CHECK(cur < prev);
    prev = cur;
  }
}

TEST_CASE("information rank diagnostic") {
  CHECK(information_rank_diagnostic(0, 0, 0) > 0.0);
  double minimum = 1e300;
  for (double t1 = -2.0; t1 <= 2.0 + 1e-12; t1 += 0.25) {
    for (double t2 = -2.0; t2 <= 2.0 + 1e-12; t2 += 0.25) {
      for (double r = -1.0; r <= 1.0 + 1e-12; r += 0.25) {
        minimum = std::min(minimum, information_rank_diagnostic(t1, t2, r));
      }
    }
  }
  CHECK(minimum > 0.0);
  // Score has mean zero under its own law.
  const double t1 = 0.4, t2 = -0.9, rho = 0.7;
  const DyadPmf pmf = dyad_pmf_dense(t1, t2, rho);
  double m1 = 0, m2 = 0, m3 = 0;
  for (int c = 0; c < 4; ++c) {
    const Score3 s = dyad_score(DyadOutcome::from_code(c), t1, t2, rho);
    m1 += pmf[c] * s.theta1;
    m2 += pmf[c] * s.theta2;
    m3 += pmf[c] * s.rho;
  }
  CHECK(std::abs(m1) < 1e-15);
  CHECK(std::abs(m2) < 1e-15);
  CHECK(std::abs(m3) < 1e-15);
  const double base = information_rank_diagnostic(t1, t2, rho);
  CHECK(std::abs(information_rank_diagnostic(t1 + 1e-8, t2 - 1e-8, rho + 1e-8) - base) < 1e-6);
}

TEST_CASE("parameter validation") {
  NodeParams bad = NodeParams::zeros(3);
  bad.beta.pop_back();
  CHECK_THROWS_AS(bad.validate(), ModelError);
  NodeParams big = NodeParams::zeros(3);
  big.alpha[1] = 1.5;
  CHECK_THROWS_AS(big.validate(1.0), ModelError);
  big.alpha[1] = std::nan("");
  CHECK_THROWS_AS(big.validate(), ModelError);
  CHECK_THROWS_AS(Network(3, {{0, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Network(3, {{0, 1}, {0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Network(3, {{0, 3}}), std::invalid_argument);
}
