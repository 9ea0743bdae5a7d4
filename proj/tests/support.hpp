#pragma once

// Test-side helpers: an independent, deliberately naive implementation of the
// dyad law, finite differences and random instances.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "expnet/network.hpp"
#include "expnet/types.hpp"

namespace testing_support {

using expnet::Edge;
using expnet::Network;
using expnet::NodeParams;

/// Probability of (a, b) for the dyad (i, j) straight from the definition:
/// exp(t1 a + t2 b + rho a b) / Z, rescaled by mu off (0, 0).
inline double naive_prob(int a, int b, double t1, double t2, double rho, double mu) {
  const double z = 1.0 + std::exp(t1) + std::exp(t2) + std::exp(t1 + t2 + rho);
  const double g = std::exp(t1 * a + t2 * b + rho * a * b) / z;
  if (a == 0 && b == 0) return 1.0 - mu * (1.0 - 1.0 / z);
  return mu * g;
}

/// Total log-likelihood by a plain double loop over i < j.
inline double naive_loglik(const Network& net, const NodeParams& p, double rho, double mu) {
  double ll = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    for (std::size_t j = i + 1; j < net.size(); ++j) {
      const int a = net.has_edge(i, j), b = net.has_edge(j, i);
      ll += std::log(naive_prob(a, b, p.alpha[i] + p.beta[j], p.alpha[j] + p.beta[i], rho, mu));
    }
  }
  return ll;
}

inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// |a - b| / max(1, |a|, |b|): relative away from zero, absolute near it.
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

/// Network with each directed edge present independently with probability p.
inline Network random_network(std::size_t n, double p, std::mt19937_64& gen) {
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) {
      if (i != j && coin(gen)) edges.push_back({i, j});
    }
  }
  return Network(n, std::move(edges));
}

inline NodeParams random_params(std::size_t n, double bound, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-bound, bound);
  NodeParams p = NodeParams::zeros(n);
  for (std::size_t i = 0; i < n; ++i) {
    p.alpha[i] = u(gen);
    p.beta[i] = u(gen);
  }
  return p;
}

}  // namespace testing_support
